//! Rank statistics for benchmark evaluation: Mann-Whitney AUC and the
//! Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::StatsError;

/// Largest sample size for which the signed-rank null is enumerated.
pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// Values whose relative difference is below this are tied.
const TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucOutcome {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub excluded_pos: usize,
    pub excluded_neg: usize,
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from midranks of the pooled sample.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64, StatsError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(StatsError::EmptyClass);
    }
    let mut pooled: Vec<(f64, bool)> =
        pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Doubled midranks keep the rank sum an exact integer.
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let doubled_midrank = (i + 1 + j) as u64;
        let positives = pooled[i..j].iter().filter(|x| x.1).count() as u64;
        doubled_rank_sum += doubled_midrank * positives;
        i = j;
    }
    let (n1, n0) = (pos.len() as u64, neg.len() as u64);
    let doubled_u = doubled_rank_sum - n1 * (n1 + 1);
    Ok(doubled_u as f64 / (2 * n1 * n0) as f64)
}

/// AUC over possibly undefined scores; undefined entries are dropped from
/// their class and counted.
pub fn auc_defined(pos: &[Option<f64>], neg: &[Option<f64>]) -> Result<AucOutcome, StatsError> {
    let p: Vec<f64> = pos.iter().flatten().copied().collect();
    let n: Vec<f64> = neg.iter().flatten().copied().collect();
    Ok(AucOutcome {
        auc: auc(&p, &n)?,
        n_pos: p.len(),
        n_neg: n.len(),
        excluded_pos: pos.len() - p.len(),
        excluded_neg: neg.len() - n.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Differences tend to be positive.
    #[default]
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub method: WilcoxonMethod,
    pub alternative: Alternative,
}

/// Midranks of `abs_values` (1-based), ties within `TIE_REL` sharing a rank.
/// Returned doubled so they stay integral.
pub(crate) fn doubled_midranks(abs_values: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..abs_values.len()).collect();
    order.sort_by(|&a, &b| abs_values[a].total_cmp(&abs_values[b]));
    let mut ranks = vec![0u64; abs_values.len()];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && tied(abs_values[order[i]], abs_values[order[j]]) {
            j += 1;
        }
        for &k in &order[i..j] {
            ranks[k] = (i + 1 + j) as u64;
        }
        tie_sizes.push(j - i);
        i = j;
    }
    (ranks, tie_sizes)
}

pub(crate) fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_REL * a.abs().max(b.abs()).max(1.0)
}

/// Signed-rank test on paired differences. Zero differences are dropped,
/// tied magnitudes get midranks. Up to `WILCOXON_EXACT_MAX_N` nonzero
/// differences the null distribution is enumerated exactly (conditional on
/// the tie pattern); beyond that a tie-corrected normal approximation with
/// continuity correction is used.
pub fn wilcoxon_signed_rank(diffs: &[f64], alternative: Alternative) -> Result<WilcoxonResult, StatsError> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(StatsError::AllZeroDiffs);
    }
    let n = nonzero.len();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, tie_sizes) = doubled_midranks(&abs);
    let w2: u64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let statistic = w2 as f64 / 2.0;

    if n <= WILCOXON_EXACT_MAX_N {
        let total: u64 = ranks.iter().sum();
        let mut counts = vec![0f64; total as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let all = 2f64.powi(n as i32);
        let upper: f64 = counts[w2 as usize..].iter().sum::<f64>() / all;
        let lower: f64 = counts[..=w2 as usize].iter().sum::<f64>() / all;
        let p_value = match alternative {
            Alternative::Greater => upper,
            Alternative::Less => lower,
            Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
        };
        return Ok(WilcoxonResult { statistic, p_value, n, method: WilcoxonMethod::Exact, alternative });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let sd = var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_value = if sd == 0.0 {
        1.0
    } else {
        match alternative {
            Alternative::Greater => normal.sf((statistic - mean - 0.5) / sd),
            Alternative::Less => normal.cdf((statistic - mean + 0.5) / sd),
            Alternative::TwoSided => {
                let z = ((statistic - mean).abs() - 0.5).max(0.0) / sd;
                (2.0 * normal.sf(z)).min(1.0)
            }
        }
    };
    Ok(WilcoxonResult { statistic, p_value, n, method: WilcoxonMethod::Normal, alternative })
}
