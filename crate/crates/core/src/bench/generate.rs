//! Template grammar for synthetic commercial leases and appellate opinions.
//!
//! Each document is generated as a full matter: a ledger of parties, dates,
//! amounts and provisions rendered through clause templates. The context of
//! an instance is a length-limited selection of those clauses, while the
//! questions range over the whole matter. Short contexts therefore leave
//! many answers without support in the source text.

use std::collections::{BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{CorpusInstance, DocKind, HallucinatedResponse, PerturbationKind};
use super::perturb::{perturb_contradiction, perturb_entity, Derivation, NumericFact};
use crate::error::BenchError;
use crate::graph::{Entity, EntityKey};
use crate::ner::recognize_entities;
use crate::normalize::normalize_text;

/// Integer drawn uniformly from `mean * (1 ± spread)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntDist {
    pub mean: u32,
    pub spread: f64,
}

impl IntDist {
    pub fn fixed(mean: u32) -> Self {
        IntDist { mean, spread: 0.0 }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        let lo = (self.mean as f64 * (1.0 - self.spread)).round().max(1.0) as u32;
        let hi = (self.mean as f64 * (1.0 + self.spread)).round().max(lo as f64) as u32;
        rng.random_range(lo..=hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_documents: usize,
    /// Kinds assigned to documents in rotation.
    pub doc_kinds: Vec<DocKind>,
    pub target_words: IntDist,
    pub target_entities: IntDist,
    pub queries_per_doc: usize,
    /// Probability of a contradiction rather than a substitution when the
    /// response states an amount.
    pub contradiction_rate: f64,
    /// Probability that a factual answer rewords its modal ("shall" to "must").
    pub label_noise: f64,
    /// Probability that a factual answer restates a date or amount in
    /// another format.
    pub format_noise: f64,
    /// Prefix clauses with cross-references and exceptions.
    pub convoluted: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0x4c45_4741_4c51_4131,
            n_documents: 25,
            doc_kinds: vec![DocKind::Lease],
            target_words: IntDist { mean: 450, spread: 0.1 },
            target_entities: IntDist { mean: 28, spread: 0.1 },
            queries_per_doc: 22,
            contradiction_rate: 0.5,
            label_noise: 0.1,
            format_noise: 0.05,
            convoluted: false,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let err = |m: String| Err(BenchError::Config(m));
        if self.n_documents == 0 {
            return err("n_documents must be at least 1".into());
        }
        if self.queries_per_doc == 0 {
            return err("queries_per_doc must be at least 1".into());
        }
        if self.doc_kinds.is_empty() {
            return err("doc_kinds must not be empty".into());
        }
        if self.target_words.mean == 0 || self.target_entities.mean == 0 {
            return err("target_words and target_entities must be positive".into());
        }
        if self.target_entities.mean as f64 > self.target_words.mean as f64 / 3.0 {
            return err(format!(
                "{} entities cannot fit in {} words (at most one entity per three words)",
                self.target_entities.mean, self.target_words.mean
            ));
        }
        for (name, p) in [
            ("contradiction_rate", self.contradiction_rate),
            ("label_noise", self.label_noise),
            ("format_noise", self.format_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, d) in [("target_words", self.target_words), ("target_entities", self.target_entities)] {
            if !(0.0..1.0).contains(&d.spread) {
                return err(format!("{name} spread must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

/// One answerable question with its faithful answer.
#[derive(Debug, Clone)]
struct Qa {
    query: String,
    response: String,
}

#[derive(Debug, Clone)]
struct Clause {
    text: String,
    qa: Vec<Qa>,
    /// Pinned to the front of the document when selected.
    leading: bool,
}

/// A fully generated document before context selection.
#[derive(Debug, Clone)]
pub struct Matter {
    pub kind: DocKind,
    clauses: Vec<Clause>,
    pub facts: Vec<NumericFact>,
    /// Alternative renderings of dates and amounts: `(canonical, variant)`.
    variants: Vec<(String, String)>,
}

impl Matter {
    /// All clauses in document order.
    pub fn full_text(&self) -> String {
        self.clauses.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join("\n")
    }

    pub fn planted_entities(&self) -> Vec<Entity> {
        let mut seen = HashSet::new();
        recognize_entities(&self.full_text())
            .into_iter()
            .map(|m| m.entity)
            .filter(|e| seen.insert(e.key()))
            .collect()
    }
}

fn stream(seed: u64, doc: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (doc as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(purpose);
    rng
}

pub fn generate_corpus(cfg: &GeneratorConfig) -> Result<Vec<CorpusInstance>, BenchError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.n_documents * cfg.queries_per_doc);
    for doc in 0..cfg.n_documents {
        let kind = cfg.doc_kinds[doc % cfg.doc_kinds.len()];
        let matter = generate_matter(kind, &mut stream(cfg.seed, doc, 0), cfg.convoluted);
        out.extend(instances_for(&matter, doc, cfg)?);
    }
    Ok(out)
}

pub fn generate_matter(kind: DocKind, rng: &mut ChaCha8Rng, convoluted: bool) -> Matter {
    let mut d = Draw { rng, used: HashSet::new() };
    let mut matter = match kind {
        DocKind::Lease => lease(&mut d),
        DocKind::Opinion => opinion(&mut d),
    };
    if convoluted {
        convolute(&mut matter, d.rng);
    }
    matter
}

fn instances_for(matter: &Matter, doc: usize, cfg: &GeneratorConfig) -> Result<Vec<CorpusInstance>, BenchError> {
    let mut select_rng = stream(cfg.seed, doc, 1);
    let target_words = cfg.target_words.sample(&mut select_rng);
    let target_entities = cfg.target_entities.sample(&mut select_rng);
    let context = select_context(matter, target_words as usize, target_entities as usize, &mut select_rng);

    let planted = matter.planted_entities();
    let planted_keys: BTreeSet<EntityKey> = planted.iter().map(Entity::key).collect();

    let mut qa: Vec<&Qa> = Vec::new();
    let all: Vec<&Qa> = matter.clauses.iter().flat_map(|c| c.qa.iter()).collect();
    let mut query_rng = stream(cfg.seed, doc, 2);
    while qa.len() < cfg.queries_per_doc {
        let mut round = all.clone();
        round.shuffle(&mut query_rng);
        qa.extend(round.into_iter().take(cfg.queries_per_doc - qa.len()));
    }

    let mut noise_rng = stream(cfg.seed, doc, 3);
    let mut out = Vec::with_capacity(qa.len());
    for (q, item) in qa.into_iter().enumerate() {
        let factual = add_noise(&item.response, matter, cfg, &mut noise_rng);
        // A reformatted date or amount is a new surface form of a planted fact.
        let mut planted = planted.clone();
        for m in recognize_entities(&factual) {
            if !planted_keys.contains(&m.entity.key()) {
                planted.push(m.entity);
            }
        }
        let numeric = matter.facts.iter().any(|f| factual.contains(&f.rendered));
        let contradiction_first = numeric && noise_rng.random_bool(cfg.contradiction_rate);
        let perturbed = if contradiction_first {
            perturb_contradiction(&factual, &matter.facts, &mut noise_rng)
                .or_else(|_| perturb_entity(&factual, &planted, &item.query, &mut noise_rng))
        } else {
            perturb_entity(&factual, &planted, &item.query, &mut noise_rng)
                .or_else(|_| perturb_contradiction(&factual, &matter.facts, &mut noise_rng))
        };
        let (text, perturbation) = perturbed?;
        debug_assert!(
            perturbation.kind == PerturbationKind::LogicalContradiction || !context.contains(&perturbation.replacement)
        );
        out.push(CorpusInstance {
            id: format!("{}-{:03}-q{:02}", matter.kind.as_str(), doc, q),
            doc_kind: matter.kind,
            doc_id: doc,
            context: context.clone(),
            query: item.query.clone(),
            factual_response: factual,
            hallucinated_responses: vec![HallucinatedResponse { text, perturbation }],
            planted_entities: planted,
        });
    }
    Ok(out)
}

/// Picks clauses in random order until the word or entity target is met,
/// then renders them in document order.
fn select_context(matter: &Matter, target_words: usize, target_entities: usize, rng: &mut ChaCha8Rng) -> String {
    let mut order: Vec<usize> = (0..matter.clauses.len()).collect();
    order.shuffle(rng);
    let mut chosen = Vec::new();
    let mut words = 0;
    let mut keys: HashSet<EntityKey> = HashSet::new();
    for idx in order {
        if words >= target_words || keys.len() >= target_entities {
            break;
        }
        let clause = &matter.clauses[idx];
        let w = clause.text.split_whitespace().count();
        let new_keys: Vec<EntityKey> = recognize_entities(&clause.text)
            .into_iter()
            .map(|m| m.entity.key())
            .filter(|k| !keys.contains(k))
            .collect();
        // Skip a clause that would overshoot by more than half of itself.
        if !chosen.is_empty() && (words + w > target_words + w / 2 || keys.len() + new_keys.len() > target_entities + new_keys.len() / 2) {
            continue;
        }
        words += w;
        keys.extend(new_keys);
        chosen.push(idx);
    }
    // Entity targets are usually met first; pad with entity-free clauses
    // toward the word target.
    let mut fillers: Vec<usize> = (0..matter.clauses.len())
        .filter(|i| !chosen.contains(i) && matter.clauses[*i].qa.is_empty() && !matter.clauses[*i].leading)
        .collect();
    fillers.shuffle(rng);
    for idx in fillers {
        let w = matter.clauses[idx].text.split_whitespace().count();
        if words + w / 2 >= target_words {
            break;
        }
        words += w;
        chosen.push(idx);
    }
    chosen.sort_by_key(|&i| (!matter.clauses[i].leading, i));
    chosen.iter().map(|&i| matter.clauses[i].text.as_str()).collect::<Vec<_>>().join("\n")
}

fn add_noise(response: &str, matter: &Matter, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> String {
    let mut text = response.to_string();
    if rng.random_bool(cfg.label_noise) && text.contains(" shall ") {
        text = text.replacen(" shall ", " must ", 1);
    }
    if rng.random_bool(cfg.format_noise) {
        if let Some((canonical, variant)) = matter.variants.iter().find(|(c, _)| text.contains(c.as_str())) {
            text = text.replacen(canonical.as_str(), variant, 1);
        }
    }
    text
}

fn convolute(matter: &mut Matter, rng: &mut ChaCha8Rng) {
    const PREFIXES: &[&str] = &[
        "Except as otherwise provided below,",
        "Subject to the conditions of this instrument,",
        "Notwithstanding any contrary provision,",
        "Without limiting the foregoing,",
    ];
    for clause in matter.clauses.iter_mut().filter(|c| !c.leading) {
        if rng.random_bool(0.5) {
            let prefix = PREFIXES.choose(rng).unwrap();
            let mut chars = clause.text.chars();
            let first = chars.next().map(|c| c.to_string()).unwrap_or_default();
            let rest: String = chars.collect();
            let lowered = if clause.text.starts_with("The ") || clause.text.starts_with("This ") {
                first.to_lowercase()
            } else {
                first
            };
            clause.text = format!("{prefix} {lowered}{rest}");
        }
    }
}

// ---------------------------------------------------------------------------
// Pools

const ORG_FIRST: &[&str] = &[
    "Westfield", "Parkview", "Harbor", "Summit", "Granite", "Cedar", "Riverside", "Lakeshore",
    "Northgate", "Ironwood", "Bluewater", "Silverline", "Oakmont", "Pinecrest", "Redstone",
    "Crescent", "Beacon", "Highland", "Stonebridge", "Foxglove", "Meridian", "Brightwater",
    "Copperleaf", "Evergreen", "Juniper", "Kestrel", "Larkspur", "Marigold", "Sterling",
    "Thornbury", "Windmere", "Ashford", "Bramble", "Clearwater", "Driftwood", "Falcon",
    "Goldcrest", "Hawthorne", "Ivory", "Keystone",
];

const ORG_SECOND: &[&str] = &[
    "Properties", "Realty", "Coffee", "Logistics", "Foods", "Capital", "Ventures", "Retail",
    "Development", "Industries", "Media", "Health", "Systems", "Bakery", "Fitness", "Dental",
    "Brewing", "Apparel", "Robotics", "Analytics",
];

const ORG_SUFFIX: &[&str] = &["LLC", "Inc.", "Corp.", "Ltd.", "LLP", "Co."];

const FIRST_NAMES: &[&str] = &[
    "Daniel", "Laura", "Marcus", "Priya", "Ellen", "Thomas", "Grace", "Victor", "Naomi", "Samuel",
    "Irene", "Oliver", "Hannah", "Rafael", "Megan", "Julian", "Teresa", "Caleb", "Yvonne",
    "Felix", "Sonia", "Adrian", "Lucia", "Gordon", "Beatrice", "Hector", "Miriam", "Warren",
    "Celeste", "Dominic", "Rosa", "Quentin", "Alma", "Bernard", "Colette", "Edgar", "Fiona",
    "Gideon", "Helena", "Isaac",
];

const LAST_NAMES: &[&str] = &[
    "Reyes", "Chen", "Whitaker", "Natarajan", "Harmon", "Okafor", "Lindqvist", "Moreau",
    "Castillo", "Brennan", "Albright", "Kowalski", "Esposito", "Fairbanks", "Gallagher",
    "Holloway", "Ingram", "Jablonski", "Kimura", "Lachance", "Mendoza", "Novak", "Ortega",
    "Pemberton", "Quinlan", "Rasmussen", "Sandoval", "Thibodeaux", "Underwood", "Valdez",
    "Wexler", "Yamamoto", "Zielinski", "Abernathy", "Blackwood", "Delacroix", "Everly",
    "Fitzgerald", "Grimaldi", "Hargrove",
];

const HONORIFICS: &[&str] = &["Mr.", "Ms.", "Dr."];

const STREETS: &[&str] = &[
    "Market", "Commerce", "Lincoln", "Franklin", "Jefferson", "Madison", "Mercer", "Harrison",
    "Walnut", "Chestnut", "Spruce", "Sycamore", "Alder", "Magnolia", "Orchard", "Canal",
];

pub(crate) const CITIES: &[(&str, &str)] = &[
    ("Denver", "Colorado"),
    ("Portland", "Oregon"),
    ("Seattle", "Washington"),
    ("Phoenix", "Arizona"),
    ("Austin", "Texas"),
    ("Chicago", "Illinois"),
    ("Boston", "Massachusetts"),
    ("Atlanta", "Georgia"),
    ("Miami", "Florida"),
    ("Nashville", "Tennessee"),
    ("Boise", "Idaho"),
    ("Omaha", "Nebraska"),
    ("Richmond", "Virginia"),
    ("Charlotte", "North Carolina"),
    ("Cleveland", "Ohio"),
    ("Detroit", "Michigan"),
    ("Sacramento", "California"),
    ("Albuquerque", "New Mexico"),
    ("Pittsburgh", "Pennsylvania"),
    ("Baltimore", "Maryland"),
];

const LEASE_STATUTES: &[&str] = &[
    "Cal. Civ. Code § 1950.7",
    "Tex. Prop. Code § 93.005",
    "Colo. Rev. Code § 38.12",
    "Fla. Civ. Code § 83.49",
    "Ga. Prop. Code § 44.7",
    "Ariz. Rev. Code § 33.1321",
];

const FEDERAL_STATUTES: &[&str] = &[
    "42 U.S.C. § 1983",
    "15 U.S.C. § 1681",
    "29 U.S.C. § 2601",
    "15 U.S.C. § 45",
    "49 U.S.C. § 14706",
    "15 U.S.C. § 2301",
];

const RULES: &[&str] = &["Rule 59", "Rule 50(b)", "Rule 60(b)", "Rule 52(a)", "Rule 26(e)"];

const CIRCUITS: &[&str] = &["First", "Third", "Fourth", "Sixth", "Seventh", "Eighth", "Ninth", "Tenth"];

const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

const BUSINESSES: &[&str] = &[
    "specialty coffee shop", "dental clinic", "fitness studio", "retail bakery",
    "software office", "physical therapy practice", "wine bar", "print shop",
];

pub(crate) fn org_name(rng: &mut impl Rng) -> String {
    format!("{} {} {}", ORG_FIRST.choose(rng).unwrap(), ORG_SECOND.choose(rng).unwrap(), ORG_SUFFIX.choose(rng).unwrap())
}

pub(crate) fn bank_name(rng: &mut impl Rng) -> String {
    format!("{} Savings Bank", ORG_FIRST.choose(rng).unwrap())
}

pub(crate) fn insurer_name(rng: &mut impl Rng) -> String {
    format!("{} Mutual Insurance Co.", ORG_FIRST.choose(rng).unwrap())
}

pub(crate) fn person_name(rng: &mut impl Rng, title: &str) -> String {
    format!("{title} {} {}", FIRST_NAMES.choose(rng).unwrap(), LAST_NAMES.choose(rng).unwrap())
}

pub(crate) fn street_name(rng: &mut impl Rng) -> String {
    format!("{} Street", STREETS.choose(rng).unwrap())
}

pub(crate) fn format_money(dollars: u64) -> String {
    let digits = dollars.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    format!("${out}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Ymd(i32, u32, u32);

impl Ymd {
    fn long(self) -> String {
        format!("{} {}, {}", MONTHS[self.1 as usize - 1], self.2, self.0)
    }

    fn day_first(self) -> String {
        format!("{} {} {}", self.2, MONTHS[self.1 as usize - 1], self.0)
    }

    fn plus_months(self, months: u32) -> Ymd {
        let total = self.1 - 1 + months;
        Ymd(self.0 + (total / 12) as i32, total % 12 + 1, self.2)
    }
}

/// Draws values that are unique within one matter.
struct Draw<'a> {
    rng: &'a mut ChaCha8Rng,
    used: HashSet<String>,
}

impl Draw<'_> {
    fn unique(&mut self, f: impl Fn(&mut ChaCha8Rng) -> String) -> String {
        loop {
            let s = f(self.rng);
            if self.used.insert(normalize_text(&s)) {
                return s;
            }
        }
    }

    fn org(&mut self) -> String {
        self.unique(org_name)
    }

    fn person(&mut self) -> String {
        self.unique(|r| {
            let title = *HONORIFICS.choose(r).unwrap();
            person_name(r, title)
        })
    }

    fn surname(&mut self) -> String {
        self.unique(|r| LAST_NAMES.choose(r).unwrap().to_string())
    }

    fn date(&mut self, year_lo: i32, year_hi: i32) -> Ymd {
        loop {
            let ymd = Ymd(self.rng.random_range(year_lo..=year_hi), self.rng.random_range(1..=12), self.rng.random_range(1..=28));
            if self.used.insert(normalize_text(&ymd.long())) {
                return ymd;
            }
        }
    }

    fn section(&mut self, label: &str) -> String {
        self.unique(|r| format!("{label} {}.{}", r.random_range(1..=14), r.random_range(1..=9)))
    }

    fn money(&mut self, lo: u64, hi: u64, step: u64) -> u64 {
        loop {
            let v = self.rng.random_range(lo / step..=hi / step) * step;
            if self.used.insert(normalize_text(&format_money(v))) {
                return v;
            }
        }
    }

    /// Registers a derived amount so later draws avoid it.
    fn claim(&mut self, s: &str) {
        self.used.insert(normalize_text(s));
    }
}

fn qa(query: String, response: String) -> Qa {
    Qa { query, response }
}

fn clause(text: String, qa: Vec<Qa>) -> Clause {
    Clause { text, qa, leading: false }
}

/// Ends `s` with exactly one period, keeping an abbreviation's own period.
fn sentence(s: String) -> String {
    if s.ends_with('.') {
        s
    } else {
        s + "."
    }
}

fn money_fact(d: &mut Draw, name: &str, value: u64, derivation: Derivation) -> NumericFact {
    let rendered = format_money(value);
    d.claim(&rendered);
    NumericFact { name: name.into(), value, rendered, derivation }
}

// ---------------------------------------------------------------------------
// Leases

fn lease(d: &mut Draw) -> Matter {
    let landlord = d.org();
    let tenant = d.org();
    let broker = d.org();
    let bank = d.unique(bank_name);
    let insurer = d.unique(insurer_name);
    let guarantor = d.person();
    let l_sign = d.person();
    let t_sign = d.person();
    let (city, state) = *CITIES.choose(d.rng).unwrap();
    d.claim(city);
    d.claim(state);
    let street = d.unique(street_name);
    let number = d.rng.random_range(100..=4800);
    let suite = d.rng.random_range(1..=9) * 100 + d.rng.random_range(0..=20);
    let statute = LEASE_STATUTES.choose(d.rng).unwrap().to_string();
    d.claim(&statute);
    let s_rent = d.section("Section");
    let s_late = d.section("Section");
    let s_guar = d.section("Section");
    let s_opex = d.section("Section");

    let executed = d.date(2019, 2024);
    let commence = executed.plus_months(d.rng.random_range(1..=3));
    let term: u32 = *[24u32, 36, 48, 60, 84, 120].choose(d.rng).unwrap();
    let expire = commence.plus_months(term);
    let notice = expire.plus_months(0).plus_months(term - 6);
    let notice = Ymd(notice.0 - (term as i32 / 12), notice.1, notice.2.min(28));
    let allowance_by = commence.plus_months(d.rng.random_range(2..=6));
    let mut dates = Vec::new();
    for ymd in [executed, commence, expire, notice, allowance_by] {
        d.claim(&ymd.long());
        dates.push(ymd);
    }

    let rent = d.money(2_500, 40_000, 250);
    let total = rent * term as u64;
    let deposit = rent * 2;
    let late_fee = rent / 20;
    let commission = total / 25;
    let mut facts = vec![
        NumericFact { name: "base rent".into(), value: rent, rendered: format_money(rent), derivation: Derivation::Stated },
        money_fact(d, "total rent", total, Derivation::Product { base: rent, factor: term }),
        money_fact(d, "security deposit", deposit, Derivation::Product { base: rent, factor: 2 }),
        money_fact(d, "late charge", late_fee, Derivation::Percent { base: rent, percent: 5 }),
        money_fact(d, "commission", commission, Derivation::Percent { base: total, percent: 4 }),
    ];
    let insurance = d.money(1_000_000, 5_000_000, 500_000);
    let allowance = d.money(10_000, 150_000, 5_000);
    let cap = d.money(8_000, 90_000, 1_000);
    for (name, v) in [("insurance", insurance), ("allowance", allowance), ("expense cap", cap)] {
        facts.push(NumericFact { name: name.into(), value: v, rendered: format_money(v), derivation: Derivation::Stated });
    }
    let m = |v: u64| format_money(v);
    let renew_years = d.rng.random_range(2..=5);
    let business = BUSINESSES.choose(d.rng).unwrap();

    let clauses = vec![
        clause(
            sentence(format!("{landlord} leases to {tenant} the premises at {number} {street}, Suite {suite}, in {city}, {state}, for a term of {term} months")),
            vec![
                qa(format!("Which company leases the premises to {tenant}?"), sentence(format!("{landlord} leases to {tenant} the premises at {number} {street}"))),
                qa(format!("In which city are the premises leased by {tenant} located?"), sentence(format!("{landlord} leases to {tenant} the premises in {city}, {state}"))),
            ],
        ),
        clause(
            format!("The lease term shall commence on {} and shall expire on {}.", commence.long(), expire.long()),
            vec![
                qa(format!("When does the lease term of {tenant} commence?"), format!("The lease term shall commence on {}.", commence.long())),
                qa(format!("When does the lease with {landlord} expire?"), format!("The lease term shall expire on {}.", expire.long())),
            ],
        ),
        clause(
            format!("{tenant} shall pay base rent of {} per month to {landlord} pursuant to {s_rent}.", m(rent)),
            vec![
                qa(format!("How much monthly base rent does {tenant} owe?"), sentence(format!("{tenant} shall pay base rent of {} per month to {landlord}", m(rent)))),
                qa(format!("Which provision governs the rent payable by {tenant}?"), format!("{tenant} shall pay {} per month pursuant to {s_rent}.", m(rent))),
            ],
        ),
        clause(
            format!("Total base rent for the term shall equal {}, or {term} monthly payments of {}.", m(total), m(rent)),
            vec![qa(
                format!("What is the total base rent payable by {tenant} over the term?"),
                format!("Total base rent for the term shall equal {}.", m(total)),
            )],
        ),
        clause(
            sentence(format!("On {}, {tenant} shall deliver a security deposit of {} to {landlord}", executed.long(), m(deposit))),
            vec![qa(
                format!("What security deposit must {tenant} deliver?"),
                sentence(format!("{tenant} shall deliver a security deposit of {} to {landlord}", m(deposit))),
            )],
        ),
        clause(
            format!("If any installment is late, {tenant} shall pay a late charge of {} under {s_late}.", m(late_fee)),
            vec![qa(
                format!("What late charge applies if {tenant} pays rent late?"),
                format!("{tenant} shall pay a late charge of {}.", m(late_fee)),
            )],
        ),
        clause(
            format!("{guarantor} shall guarantee the obligations of {tenant} under {s_guar}."),
            vec![qa(
                format!("Who guarantees the obligations of {tenant}?"),
                sentence(format!("{guarantor} shall guarantee the obligations of {tenant}")),
            )],
        ),
        clause(
            sentence(format!("{tenant} shall maintain liability insurance of at least {} with {insurer}", m(insurance))),
            vec![qa(
                format!("What insurance must {tenant} carry?"),
                sentence(format!("{tenant} shall maintain liability insurance of at least {} with {insurer}", m(insurance))),
            )],
        ),
        clause(
            format!("{landlord} shall maintain the roof and structural elements of the building."),
            vec![qa(
                "Who must maintain the roof of the building?".into(),
                format!("{landlord} shall maintain the roof and structural elements of the building."),
            )],
        ),
        clause(
            format!("{landlord} shall provide an improvement allowance of {} to {tenant} by {}.", m(allowance), allowance_by.long()),
            vec![qa(
                format!("What improvement allowance will {tenant} receive?"),
                sentence(format!("{landlord} shall provide an improvement allowance of {} to {tenant}", m(allowance))),
            )],
        ),
        clause(
            format!("{broker} represented {tenant} in this transaction. {landlord} shall pay a brokerage commission of {} to {broker}", m(commission)),
            vec![
                qa(format!("Which broker represented {tenant}?"), format!("{broker} represented {tenant} in this transaction.")),
                qa(
                    format!("What commission does {landlord} owe the broker?"),
                    sentence(format!("{landlord} shall pay a brokerage commission of {} to {broker}", m(commission))),
                ),
            ],
        ),
        clause(
            format!("{landlord} shall subordinate this lease to the mortgage held by {bank}."),
            vec![qa(
                "Which lender holds the mortgage on the building?".into(),
                format!("{landlord} shall subordinate this lease to the mortgage held by {bank}."),
            )],
        ),
        clause(
            format!("{tenant} shall send all notices to {l_sign} at the office of {landlord} in {city}."),
            vec![qa(format!("To whom must {tenant} send notices?"), format!("{tenant} shall send all notices to {l_sign}."))],
        ),
        clause(
            format!("{tenant} may renew the lease for {renew_years} additional years by giving notice before {}.", notice.long()),
            vec![qa(
                format!("By what date must {tenant} give notice to renew?"),
                format!("{tenant} may renew the lease by giving notice before {}.", notice.long()),
            )],
        ),
        clause(
            format!("This lease shall be governed by the laws of {state} and {statute}."),
            vec![qa(
                "Which statute governs the security deposit under this lease?".into(),
                format!("This lease shall be governed by {statute}."),
            )],
        ),
        clause(
            format!("{tenant} shall pay its share of operating expenses, capped at {} per year, pursuant to {s_opex}.", m(cap)),
            vec![qa(
                format!("What is the annual cap on operating expenses for {tenant}?"),
                format!("{tenant} shall pay its share of operating expenses, capped at {} per year.", m(cap)),
            )],
        ),
        clause(
            format!("{l_sign} signed this lease for {landlord} on {}. {t_sign} signed this lease for {tenant}", executed.long()),
            vec![
                qa(format!("Who signed the lease on behalf of {landlord}?"), sentence(format!("{l_sign} signed this lease for {landlord}"))),
                qa(format!("Who signed the lease for {tenant}?"), sentence(format!("{t_sign} signed this lease for {tenant}"))),
            ],
        ),
        clause(
            format!("{tenant} shall use the premises only for the operation of a {business}."),
            vec![qa(
                format!("For what purpose may {tenant} use the premises?"),
                format!("{tenant} shall use the premises only for the operation of a {business}."),
            )],
        ),
    ];
    let clauses = clauses.into_iter().map(|mut c| {
        c.text = sentence(c.text);
        c
    });
    let mut clauses: Vec<Clause> = clauses.collect();
    add_boilerplate(&mut clauses, LEASE_BOILERPLATE, 8, d.rng);

    let mut variants: Vec<(String, String)> = dates.iter().map(|y| (y.long(), y.day_first())).collect();
    variants.extend(facts.iter().map(|f| (f.rendered.clone(), format!("{}.00", f.rendered))));
    Matter { kind: DocKind::Lease, clauses, facts, variants }
}

const LEASE_BOILERPLATE: &[&str] = &[
    "Time is of the essence with respect to every obligation stated in this lease.",
    "Neither party may assign this lease without the prior written consent of the other party.",
    "Any waiver of a default shall not operate as a waiver of any later default.",
    "The headings in this lease are for convenience only and do not define or limit its terms.",
    "If any provision is found invalid, the remaining provisions shall remain in full force and effect.",
    "The premises shall be delivered in broom clean condition with all building systems in good working order.",
    "No alteration of the premises shall be made without the prior written approval of the landlord.",
    "All payments under this lease shall be made in lawful money by check or electronic transfer.",
    "This lease contains the entire agreement of the parties and supersedes all prior negotiations.",
    "The tenant shall comply with all laws, ordinances and regulations affecting the use of the premises.",
    "The landlord may enter the premises at reasonable times to inspect them and to make repairs.",
    "Each party shall bear its own costs in connection with the negotiation and execution of this lease.",
];

const OPINION_BOILERPLATE: &[&str] = &[
    "We review the legal conclusions of the trial court de novo and its factual findings for clear error.",
    "A party seeking to overturn a jury verdict bears a heavy burden on appeal.",
    "The parties dispute whether the delay in delivery was excused by circumstances beyond the control of the seller.",
    "The record contains no evidence that the buyer ever waived the delivery deadline.",
    "We decline to consider arguments that were raised for the first time on appeal.",
    "The remaining contentions of the parties lack merit and do not require extended discussion.",
    "Interpretation of an unambiguous contract is a question of law that we review without deference.",
    "An award of attorney fees is reviewed for an abuse of discretion.",
    "The jury was properly instructed on the elements of breach and on the measure of damages.",
    "Nothing in the record suggests that the verdict was the product of passion or prejudice.",
    "The seller bore the risk of loss until the equipment was delivered and accepted by the buyer.",
    "Neither party requested a special verdict form or objected to the general verdict before the jury was discharged.",
    "A buyer who accepts nonconforming goods may still recover damages for the breach if notice is given within a reasonable time.",
    "The trial court acted within its discretion when it admitted the testimony of the expert witness on lost profits.",
];

fn add_boilerplate(clauses: &mut Vec<Clause>, pool: &[&str], n: usize, rng: &mut ChaCha8Rng) {
    let picked: Vec<&&str> = pool.choose_multiple(rng, n).collect();
    for text in picked {
        let at = rng.random_range(0..=clauses.len());
        let at = at.max(clauses.iter().take_while(|c| c.leading).count());
        clauses.insert(at, clause(text.to_string(), Vec::new()));
    }
}

// ---------------------------------------------------------------------------
// Opinions

fn case_citation(d: &mut Draw, circuit: &str) -> String {
    d.unique(|r| {
        let volume = r.random_range(100..=999);
        let page = r.random_range(10..=1400);
        let year = r.random_range(1975..=2018);
        match r.random_range(0..3) {
            0 => format!("{volume} U.S. {page} ({year})"),
            1 => format!("{volume} F.3d {page} ({circuit} Cir. {year})"),
            _ => format!("{volume} F. Supp. 3d {page} ({year})"),
        }
    })
}

fn opinion(d: &mut Draw) -> Matter {
    let plaintiff = d.unique(|r| {
        let title = *["Ms.", "Mr."].choose(r).unwrap();
        person_name(r, title)
    });
    let surname = plaintiff.rsplit(' ').next().unwrap().to_string();
    d.claim(&surname);
    let defendant = d.org();
    let circuit_name = *CIRCUITS.choose(d.rng).unwrap();
    let circuit_ord = match circuit_name {
        "First" => "1st",
        "Third" => "3d",
        "Fourth" => "4th",
        "Sixth" => "6th",
        "Seventh" => "7th",
        "Eighth" => "8th",
        "Ninth" => "9th",
        _ => "10th",
    };
    let (city, state) = *CITIES.choose(d.rng).unwrap();
    d.claim(city);
    d.claim(state);
    let state2 = loop {
        let (_, s) = *CITIES.choose(d.rng).unwrap();
        if d.used.insert(normalize_text(s)) {
            break s;
        }
    };
    let court = format!("United States Court of Appeals for the {circuit_name} Circuit");
    let lower = format!("United States District Court for the District of {state}");
    d.claim(&court);
    d.claim(&lower);
    let judge = d.unique(|r| person_name(r, "Judge"));
    let judge2 = d.unique(|r| person_name(r, "Judge"));
    let atty1 = d.person();
    let atty2 = d.person();
    let (p1a, p1b) = (d.surname(), d.surname());
    let (p2a, p2b) = (d.surname(), d.surname());
    let cite1 = case_citation(d, circuit_ord);
    let cite2 = case_citation(d, circuit_ord);
    let statute = FEDERAL_STATUTES.choose(d.rng).unwrap().to_string();
    let rule = RULES.choose(d.rng).unwrap().to_string();
    d.claim(&statute);
    d.claim(&rule);
    let docket = format!("{}-{}", d.rng.random_range(15..=24), d.rng.random_range(10000..=99999));

    let contracted = d.date(2012, 2017);
    let deliver_by = contracted.plus_months(d.rng.random_range(3..=9));
    let filed = deliver_by.plus_months(d.rng.random_range(6..=14));
    let appealed = filed.plus_months(d.rng.random_range(18..=30));
    let argued = appealed.plus_months(d.rng.random_range(8..=14));
    let decided = argued.plus_months(d.rng.random_range(2..=7));
    let mut dates = Vec::new();
    for ymd in [contracted, deliver_by, filed, appealed, argued, decided] {
        d.claim(&ymd.long());
        dates.push(ymd);
    }

    let damages = d.money(40_000, 2_500_000, 500);
    let multiplier = d.rng.random_range(2..=4);
    let punitive = damages * multiplier as u64;
    let interest_pct = d.rng.random_range(5..=10);
    let interest = damages * interest_pct as u64 / 100;
    let mut facts = vec![
        NumericFact { name: "damages".into(), value: damages, rendered: format_money(damages), derivation: Derivation::Stated },
        money_fact(d, "punitive damages", punitive, Derivation::Product { base: damages, factor: multiplier }),
        money_fact(d, "prejudgment interest", interest, Derivation::Percent { base: damages, percent: interest_pct }),
    ];
    let fees = d.money(15_000, 400_000, 250);
    facts.push(NumericFact { name: "attorney fees".into(), value: fees, rendered: format_money(fees), derivation: Derivation::Stated });
    let m = |v: u64| format_money(v);
    let case = format!("{surname} v. {defendant}");

    let mut header = clause(
        sentence(format!("{case}, No. {docket}, appeal from the {lower}")),
        Vec::new(),
    );
    header.leading = true;
    let clauses = vec![
        header,
        clause(
            format!("{judge} delivered the opinion of the {court}."),
            vec![qa(format!("Who delivered the opinion in {case}?"), format!("{judge} delivered the opinion of the {court}."))],
        ),
        clause(
            format!("{plaintiff} entered into a supply contract with {defendant} on {}.", contracted.long()),
            vec![qa(
                format!("When did {plaintiff} contract with {defendant}?"),
                format!("{plaintiff} entered into a supply contract with {defendant} on {}.", contracted.long()),
            )],
        ),
        clause(
            format!("Under the contract, {defendant} agreed to deliver equipment to {city}, {state} by {}.", deliver_by.long()),
            vec![qa(
                format!("Where did {defendant} agree to deliver the equipment?"),
                format!("{defendant} agreed to deliver equipment to {city}, {state}."),
            )],
        ),
        clause(
            format!("{plaintiff} filed suit against {defendant} in the {lower} on {}.", filed.long()),
            vec![qa(
                format!("In which court did {plaintiff} file suit?"),
                format!("{plaintiff} filed suit against {defendant} in the {lower}."),
            )],
        ),
        clause(
            format!("{plaintiff} brought claims under {statute} for the failed delivery."),
            vec![qa(format!("Under which statute did {plaintiff} bring claims?"), format!("{plaintiff} brought claims under {statute}."))],
        ),
        clause(
            format!("The jury found that {defendant} breached the contract and awarded damages of {} to {plaintiff}.", m(damages)),
            vec![
                qa(format!("What damages did the jury award {plaintiff}?"), format!("The jury awarded damages of {} to {plaintiff}.", m(damages))),
                qa(format!("What did the jury find about {defendant}?"), format!("The jury found that {defendant} breached the contract.")),
            ],
        ),
        clause(
            format!("The {lower} also awarded punitive damages of {} and attorney fees of {}.", m(punitive), m(fees)),
            vec![
                qa(format!("What punitive damages did the {lower} award?"), format!("The {lower} also awarded punitive damages of {}.", m(punitive))),
                qa(format!("What attorney fees were awarded to {plaintiff}?"), format!("The {lower} also awarded attorney fees of {}.", m(fees))),
            ],
        ),
        clause(
            sentence(format!("{defendant} appealed the judgment to the {court} on {}", appealed.long())),
            vec![qa(format!("When did {defendant} appeal?"), format!("{defendant} appealed the judgment on {}.", appealed.long()))],
        ),
        clause(
            sentence(format!("{atty1} represented {plaintiff}. {atty2} represented {defendant}")),
            vec![
                qa(format!("Who represented {plaintiff}?"), format!("{atty1} represented {plaintiff}.")),
                qa(format!("Who represented {defendant}?"), sentence(format!("{atty2} represented {defendant}"))),
            ],
        ),
        clause(
            format!("In {p1a} v. {p1b}, {cite1}, the Supreme Court held that a buyer must prove actual damages."),
            vec![qa(
                format!("What did the Supreme Court hold in {p1a} v. {p1b}?"),
                format!("In {p1a} v. {p1b}, {cite1}, the Supreme Court held that a buyer must prove actual damages."),
            )],
        ),
        clause(
            format!("This Court relied on {p2a} v. {p2b}, {cite2}, in reviewing the award."),
            vec![qa(
                "Which precedent did the Court rely on in reviewing the award?".into(),
                format!("This Court relied on {p2a} v. {p2b}, {cite2}."),
            )],
        ),
        clause(
            sentence(format!("The Court held that {defendant} is liable under {statute}")),
            vec![qa(
                format!("Is {defendant} liable under {statute}?"),
                sentence(format!("The Court held that {defendant} is liable under {statute}")),
            )],
        ),
        clause(
            format!("The Court reversed the punitive award pursuant to {rule}."),
            vec![qa("What did the Court do with the punitive award?".into(), format!("The Court reversed the punitive award pursuant to {rule}."))],
        ),
        clause(
            format!("The Court remanded the case to the {lower} for a new trial on damages."),
            vec![qa(format!("Where was {case} remanded?"), format!("The Court remanded the case to the {lower}."))],
        ),
        clause(
            format!("{judge2} joined the opinion of {judge}."),
            vec![qa("Which judge joined the opinion?".into(), format!("{judge2} joined the opinion of {judge}."))],
        ),
        clause(
            format!("The case was argued on {} and decided on {}.", argued.long(), decided.long()),
            vec![qa(format!("When was {case} decided?"), format!("The case was decided on {}.", decided.long()))],
        ),
        clause(
            format!("Prejudgment interest of {} accrued from {}.", m(interest), filed.long()),
            vec![qa(
                format!("How much prejudgment interest accrued on the award to {plaintiff}?"),
                format!("Prejudgment interest of {} accrued from {}.", m(interest), filed.long()),
            )],
        ),
        clause(
            sentence(format!("{defendant} is a corporation organized under the laws of {state2}")),
            vec![qa(format!("Where is {defendant} organized?"), sentence(format!("{defendant} is a corporation organized under the laws of {state2}")))],
        ),
        clause(
            format!("{plaintiff} owns a medical clinic in {city}."),
            vec![qa(format!("Where does {plaintiff} own a clinic?"), format!("{plaintiff} owns a medical clinic in {city}."))],
        ),
    ];
    let mut clauses = clauses;
    add_boilerplate(&mut clauses, OPINION_BOILERPLATE, 11, d.rng);

    let mut variants: Vec<(String, String)> = dates.iter().map(|y| (y.long(), y.day_first())).collect();
    variants.extend(facts.iter().map(|f| (f.rendered.clone(), format!("{}.00", f.rendered))));
    Matter { kind: DocKind::Opinion, clauses, facts, variants }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn money_formatting() {
        assert_eq!(format_money(0), "$0");
        assert_eq!(format_money(999), "$999");
        assert_eq!(format_money(12_500), "$12,500");
        assert_eq!(format_money(1_250_000), "$1,250,000");
    }

    #[test]
    fn month_arithmetic() {
        assert_eq!(Ymd(2024, 11, 3).plus_months(3), Ymd(2025, 2, 3));
        assert_eq!(Ymd(2024, 1, 3).plus_months(24), Ymd(2026, 1, 3));
    }

    #[test]
    fn rejects_impossible_density() {
        let cfg = GeneratorConfig { target_words: IntDist::fixed(60), target_entities: IntDist::fixed(21), ..Default::default() };
        assert!(matches!(generate_corpus(&cfg), Err(BenchError::Config(_))));
        let cfg = GeneratorConfig { n_documents: 0, ..Default::default() };
        assert!(matches!(generate_corpus(&cfg), Err(BenchError::Config(_))));
    }

    #[test]
    fn matters_are_seed_deterministic() {
        for kind in [DocKind::Lease, DocKind::Opinion] {
            let a = generate_matter(kind, &mut ChaCha8Rng::seed_from_u64(7), false).full_text();
            let b = generate_matter(kind, &mut ChaCha8Rng::seed_from_u64(7), false).full_text();
            assert_eq!(a, b);
        }
    }
}
