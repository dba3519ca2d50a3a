//! GAF 2.x reader.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use log::warn;
use serde::Serialize;

use super::{AnnotationRelease, ProteinId};
use crate::error::{Error, Result};
use crate::ontology::OntologyDag;

/// GO experimental evidence codes.
pub const EXPERIMENTAL_CODES: [&str; 6] = ["EXP", "IDA", "IPI", "IMP", "IGI", "IEP"];

#[derive(Clone, Debug)]
pub struct GafOptions {
    pub evidence: BTreeSet<String>,
    /// Alias → canonical protein identifier, applied to column 2.
    pub protein_map: HashMap<String, String>,
}

impl Default for GafOptions {
    fn default() -> Self {
        GafOptions {
            evidence: EXPERIMENTAL_CODES.iter().map(|s| s.to_string()).collect(),
            protein_map: HashMap::new(),
        }
    }
}

impl GafOptions {
    pub fn with_evidence<I, S>(mut self, codes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.evidence = codes
            .into_iter()
            .map(|c| c.as_ref().trim().to_ascii_uppercase())
            .filter(|c| !c.is_empty())
            .collect();
        if self.evidence.is_empty() {
            return Err(Error::Domain("evidence filter must not be empty".into()));
        }
        Ok(self)
    }

    /// Reads a two-column tab-separated alias file (`alias<TAB>canonical`).
    pub fn load_protein_map(mut self, path: &Path) -> Result<Self> {
        let reader = crate::io::open_text(path)?;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (alias, canonical) = line.split_once('\t').ok_or_else(|| {
                Error::parse(&path.display().to_string(), i + 1, "expected alias<TAB>canonical")
            })?;
            self.protein_map
                .insert(alias.trim().to_string(), canonical.trim().to_string());
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GafStats {
    pub rows: usize,
    pub kept: usize,
    pub negated: usize,
    pub evidence_filtered: usize,
    pub unknown_term: usize,
    pub duplicates: usize,
}

pub fn parse_gaf_path(
    path: &Path,
    dag: &OntologyDag,
    options: &GafOptions,
    label: &str,
) -> Result<AnnotationRelease> {
    let reader = crate::io::open_text(path)?;
    parse_gaf(reader, dag, options, label, &path.display().to_string())
}

/// Reads one GAF release, keeping positive annotations whose evidence code
/// passes the filter and whose term (or alternate id) is in `dag`.
pub fn parse_gaf<R: BufRead>(
    reader: R,
    dag: &OntologyDag,
    options: &GafOptions,
    label: &str,
    source_name: &str,
) -> Result<AnnotationRelease> {
    if options.evidence.is_empty() {
        return Err(Error::Domain("evidence filter must not be empty".into()));
    }
    let mut stats = GafStats::default();
    let mut direct: BTreeMap<ProteinId, BTreeSet<crate::ontology::TermIdx>> = BTreeMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.starts_with('!') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if !(15..=17).contains(&cols.len()) {
            return Err(Error::parse(
                source_name,
                i + 1,
                format!("expected 15-17 tab-separated columns, found {}", cols.len()),
            ));
        }
        stats.rows += 1;

        if cols[3].split('|').any(|q| q.trim().eq_ignore_ascii_case("NOT")) {
            stats.negated += 1;
            continue;
        }
        if !options.evidence.contains(cols[6].trim()) {
            stats.evidence_filtered += 1;
            continue;
        }
        let Ok(term) = dag.lookup(cols[4].trim()) else {
            stats.unknown_term += 1;
            continue;
        };
        let raw = cols[1].trim();
        if raw.is_empty() {
            return Err(Error::parse(source_name, i + 1, "empty DB object id"));
        }
        let protein = options.protein_map.get(raw).map(String::as_str).unwrap_or(raw);
        if direct.entry(ProteinId::new(protein)).or_default().insert(term) {
            stats.kept += 1;
        } else {
            stats.duplicates += 1;
        }
    }

    if stats.unknown_term > 0 {
        warn!(
            "{source_name}: skipped {} rows with unknown or obsolete GO terms",
            stats.unknown_term
        );
    }
    if direct.is_empty() {
        warn!("{source_name}: release {label} is empty after filtering");
    }
    Ok(AnnotationRelease {
        label: label.to_string(),
        evidence: options.evidence.clone(),
        direct,
        stats,
    })
}

/// Writes `release` as GAF 2.1 rows with a single evidence code.
pub fn write_gaf<W: std::io::Write>(release: &AnnotationRelease, dag: &OntologyDag, evidence: &str, mut w: W) -> Result<()> {
    writeln!(w, "!gaf-version: 2.1")?;
    for (protein, terms) in release.iter() {
        for &t in terms {
            let aspect = dag.branch(t).map(|b| b.aspect()).unwrap_or('P');
            writeln!(
                w,
                "UniProtKB\t{p}\t{p}\t\t{id}\tGO_REF:0000000\t{evidence}\t\t{aspect}\t\t\tprotein\ttaxon:0\t20200101\tnegsel\t\t",
                p = protein.as_str(),
                id = dag.id(t),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{Branch, DagBuilder};

    fn dag() -> OntologyDag {
        let mut b = DagBuilder::new();
        b.term("GO:0000001", "a", Branch::Bp).unwrap();
        b.term("GO:0000002", "b", Branch::Bp).unwrap();
        b.edge("GO:0000002", "GO:0000001");
        b.build().unwrap()
    }

    fn row(protein: &str, qualifier: &str, term: &str, evidence: &str, reference: &str) -> String {
        format!(
            "UniProtKB\t{protein}\tSYM\t{qualifier}\t{term}\t{reference}\t{evidence}\t\tP\tname\t\tprotein\ttaxon:559292\t20170101\tSGD\t\t\n"
        )
    }

    fn parse(text: &str) -> Result<AnnotationRelease> {
        parse_gaf(text.as_bytes(), &dag(), &GafOptions::default(), "t", "t.gaf")
    }

    #[test]
    fn evidence_filter_keeps_experimental_rows() {
        let text = format!(
            "!gaf-version: 2.1\n{}{}",
            row("P1", "", "GO:0000002", "IDA", "PMID:1"),
            row("P2", "", "GO:0000002", "IEA", "PMID:2")
        );
        let rel = parse(&text).unwrap();
        assert_eq!(rel.protein_count(), 1);
        assert!(rel.terms_of(&ProteinId::new("P1")).is_some());
        assert_eq!(rel.stats.evidence_filtered, 1);
    }

    #[test]
    fn negated_rows_are_dropped() {
        let text = format!(
            "{}{}",
            row("P1", "NOT", "GO:0000002", "IDA", "PMID:1"),
            row("P2", "NOT|enables", "GO:0000002", "IMP", "PMID:1")
        );
        let rel = parse(&text).unwrap();
        assert_eq!(rel.protein_count(), 0);
        assert_eq!(rel.stats.negated, 2);
    }

    #[test]
    fn duplicate_pairs_collapse() {
        let text = format!(
            "{}{}",
            row("P1", "", "GO:0000002", "IDA", "PMID:1"),
            row("P1", "", "GO:0000002", "IMP", "PMID:7")
        );
        let rel = parse(&text).unwrap();
        assert_eq!(rel.annotation_count(), 1);
        assert_eq!(rel.stats.duplicates, 1);
    }

    #[test]
    fn unknown_terms_are_counted_not_fatal() {
        let rel = parse(&row("P1", "", "GO:7777777", "IDA", "PMID:1")).unwrap();
        assert_eq!(rel.protein_count(), 0);
        assert_eq!(rel.stats.unknown_term, 1);
    }

    #[test]
    fn wrong_column_count_is_a_parse_error() {
        match parse("!c\nUniProtKB\tP1\tSYM\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn protein_map_applies_to_column_two() {
        let mut opts = GafOptions::default();
        opts.protein_map.insert("ALIAS".into(), "P9".into());
        let text = row("ALIAS", "", "GO:0000001", "IDA", "PMID:1");
        let rel = parse_gaf(text.as_bytes(), &dag(), &opts, "t", "t.gaf").unwrap();
        assert!(rel.terms_of(&ProteinId::new("P9")).is_some());
    }

    #[test]
    fn written_gaf_parses_back() {
        let dag = dag();
        let rel = AnnotationRelease::from_pairs(
            "w",
            [(ProteinId::new("P1"), crate::ontology::TermIdx(1)), (ProteinId::new("P2"), crate::ontology::TermIdx(0))],
        );
        let mut out = Vec::new();
        write_gaf(&rel, &dag, "IDA", &mut out).unwrap();
        let back = parse_gaf(out.as_slice(), &dag, &GafOptions::default(), "w", "w.gaf").unwrap();
        assert_eq!(back.annotation_count(), 2);
        assert_eq!(back.stats.rows, 2);
    }

    #[test]
    fn empty_evidence_filter_rejected() {
        assert!(GafOptions::default().with_evidence(Vec::<String>::new()).is_err());
    }
}
