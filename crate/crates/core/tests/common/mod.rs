#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hypersumm::corpus::Turn;

pub fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample")
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hypersumm"));
    cmd.env_remove("HYPERSUMM_CONFIG");
    cmd
}

pub fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// In-process CLI run: (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hypersumm").chain(args.iter().copied());
    let code = hypersumm::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Longest common subsequence by trying every subsequence of `x`.
pub fn brute_force_lcs<T: PartialEq>(x: &[T], y: &[T]) -> usize {
    assert!(x.len() <= 16);
    let is_subsequence = |mask: u32| {
        let mut it = y.iter();
        (0..x.len())
            .filter(|i| mask & (1 << i) != 0)
            .all(|i| it.any(|t| *t == x[i]))
    };
    (0u32..1 << x.len())
        .filter(|&m| is_subsequence(m))
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

pub fn token_multiset(turns: &[Turn]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for t in turns {
        for tok in t.text.split_whitespace() {
            *m.entry(tok.to_string()).or_insert(0) += 1;
        }
    }
    m
}

/// Every `href` in every HTML file under `dir` that does not resolve to an
/// existing file, as "page -> target".
pub fn dangling_links(dir: &Path) -> (usize, Vec<String>) {
    let href = regex::Regex::new(r#"href="([^"]*)""#).unwrap();
    let mut checked = 0;
    let mut dangling = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("html") {
            continue;
        }
        let html = fs::read_to_string(&path).unwrap();
        for cap in href.captures_iter(&html) {
            checked += 1;
            let target = &cap[1];
            let ok = !target.is_empty()
                && !target.contains("://")
                && !target.starts_with('/')
                && dir.join(target).is_file();
            if !ok {
                dangling.push(format!("{} -> {target}", path.display()));
            }
        }
    }
    (checked, dangling)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
