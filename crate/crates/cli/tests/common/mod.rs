#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub const CONTEXT: &str = "Acme LLC shall pay Harbor Trust the monthly rent of $5,000.00 on May 1, 2020. \
Harbor Trust shall maintain the premises at 12 Elm Street.";
pub const QUERY: &str = "What must Acme LLC pay?";
pub const FAITHFUL: &str = "Acme LLC shall pay Harbor Trust the monthly rent of $5,000.00.";
pub const SUBSTITUTED: &str = "Zed Inc. shall pay Harbor Trust the monthly rent of $5,000.00.";
pub const CONTENTLESS: &str = "Yes.";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hallugraph"))
}

pub fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).env_remove("HALLUGRAPH_EXTRACTOR_URL").output().expect("binary runs")
}

pub fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p
}

/// A `serve` child process bound to an ephemeral port.
pub struct Service {
    child: Child,
    pub base: String,
}

impl Service {
    pub fn start(extra: &[&str]) -> Service {
        let mut child = bin()
            .args(extra)
            .args(["serve", "--bind", "127.0.0.1:0"])
            .env_remove("HALLUGRAPH_EXTRACTOR_URL")
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .expect("serve starts");
        let mut line = String::new();
        BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected banner {line:?}"));
        Service { child, base: format!("http://{addr}") }
    }

    /// Status and body of a POST to `path`.
    pub fn post(&self, path: &str, body: &str) -> (u16, String) {
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        let mut resp = agent
            .post(&format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .send(body)
            .unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        let mut resp = ureq::get(&format!("{}{path}", self.base)).call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// An address nothing listens on.
pub fn dead_url() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat", l.local_addr().unwrap());
    drop(l);
    url
}
