//! Flat `key = value` run files. Keys are long flag names without the
//! leading dashes; list values are comma separated, switches take
//! `true`/`false`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};

pub type RunFile = BTreeMap<String, String>;

pub fn parse(text: &str, source: &str) -> Result<RunFile> {
    let mut out = RunFile::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{source}:{}: expected key = value", i + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("{source}:{}: empty key", i + 1);
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("{source}:{}: duplicate key {key:?}", i + 1);
        }
    }
    Ok(out)
}

pub fn format(file: &RunFile) -> String {
    let mut s = String::new();
    for (k, v) in file {
        writeln!(s, "{k} = {v}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_normalises_keys() {
        let f = parse("# sweep\nbudgets = 500,750\n--seed=7\ntune_k = true\n\n", "x").unwrap();
        assert_eq!(f["budgets"], "500,750");
        assert_eq!(f["seed"], "7");
        assert_eq!(f["tune-k"], "true");
    }

    #[test]
    fn round_trips() {
        let f = parse("out = a b/c\nk = nsfs-j=0.9,nsfs-l=0.7\nseed = 1\n", "x").unwrap();
        assert_eq!(parse(&format(&f), "y").unwrap(), f);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("seed 7", "x").is_err());
        assert!(parse("seed = 1\nseed = 2", "x").is_err());
        assert!(parse(" = 2", "x").is_err());
    }
}
