//! OBO 1.2/1.4 flat-file reader, restricted to the tags needed to build the
//! GO term graph.

use std::collections::{BTreeSet, HashSet};
use std::io::BufRead;
use std::path::Path;

use log::warn;

use super::{Branch, DagBuilder, OntologyDag, TermId, TermSpec};
use crate::error::{Error, Result};

/// Relations treated as child→parent edges. `is_a` is one of the names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRelations(BTreeSet<String>);

impl Default for EdgeRelations {
    fn default() -> Self {
        EdgeRelations::from_names(["is_a", "part_of"])
    }
}

impl EdgeRelations {
    pub fn is_a_only() -> Self {
        EdgeRelations::from_names(["is_a"])
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        EdgeRelations(names.into_iter().map(|s| s.as_ref().trim().to_string()).collect())
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.0.contains(relation)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct OboStats {
    pub terms: usize,
    pub obsolete_dropped: usize,
    pub edges: usize,
    pub edges_to_obsolete_dropped: usize,
    pub cross_branch_dropped: usize,
}

#[derive(Default)]
struct Stanza {
    line: usize,
    id: Option<String>,
    name: String,
    namespace: Option<String>,
    alt_ids: Vec<String>,
    parents: Vec<String>,
    obsolete: bool,
}

pub fn parse_obo_path(path: &Path, relations: &EdgeRelations) -> Result<(OntologyDag, OboStats)> {
    let reader = crate::io::open_text(path)?;
    parse_obo(reader, relations, &path.display().to_string())
}

/// Parses OBO text into a validated DAG. Obsolete terms and every edge that
/// touches them are dropped; edges between different branches are dropped
/// with a warning.
pub fn parse_obo<R: BufRead>(
    reader: R,
    relations: &EdgeRelations,
    source_name: &str,
) -> Result<(OntologyDag, OboStats)> {
    let mut stanzas: Vec<Stanza> = Vec::new();
    let mut current: Option<Stanza> = None;
    let mut in_term = false;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::parse(source_name, lineno, "unterminated stanza header"));
            }
            if let Some(st) = current.take() {
                stanzas.push(st);
            }
            in_term = line == "[Term]";
            if in_term {
                current = Some(Stanza {
                    line: lineno,
                    ..Stanza::default()
                });
            }
            continue;
        }
        let (tag, value) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(source_name, lineno, format!("expected `tag: value`, got {line:?}")))?;
        let Some(st) = current.as_mut().filter(|_| in_term) else {
            continue;
        };
        let value = value.trim();
        match tag.trim() {
            "id" => st.id = Some(first_token(value).to_string()),
            "name" => st.name = value.to_string(),
            "namespace" => st.namespace = Some(value.to_string()),
            "alt_id" => st.alt_ids.push(first_token(value).to_string()),
            "is_obsolete" => st.obsolete = value == "true",
            "is_a" => {
                if relations.contains("is_a") {
                    st.parents.push(first_token(value).to_string());
                }
            }
            "relationship" => {
                let mut parts = value.split_whitespace();
                let (Some(rel), Some(target)) = (parts.next(), parts.next()) else {
                    return Err(Error::parse(source_name, lineno, "relationship needs a type and a target"));
                };
                if relations.contains(rel) {
                    st.parents.push(target.to_string());
                }
            }
            _ => {}
        }
    }
    if let Some(st) = current.take() {
        stanzas.push(st);
    }

    let mut stats = OboStats::default();
    let mut specs = Vec::with_capacity(stanzas.len());
    let mut branch_of = std::collections::HashMap::new();
    let mut obsolete: HashSet<String> = HashSet::new();
    for st in &stanzas {
        let id = st
            .id
            .as_deref()
            .ok_or_else(|| Error::parse(source_name, st.line, "[Term] stanza without id"))?;
        let term_id = TermId::new(id).map_err(|e| Error::parse(source_name, st.line, e.to_string()))?;
        if st.obsolete {
            obsolete.insert(id.to_string());
            obsolete.extend(st.alt_ids.iter().cloned());
            stats.obsolete_dropped += 1;
            continue;
        }
        let ns = st
            .namespace
            .as_deref()
            .ok_or_else(|| Error::parse(source_name, st.line, format!("term {id} has no namespace")))?;
        let branch = Branch::from_namespace(ns)
            .ok_or_else(|| Error::parse(source_name, st.line, format!("unknown namespace {ns:?}")))?;
        branch_of.insert(id.to_string(), branch);
        for alt in &st.alt_ids {
            branch_of.insert(alt.clone(), branch);
        }
        specs.push(TermSpec {
            id: term_id,
            name: st.name.clone(),
            branch,
            alt_ids: st.alt_ids.clone(),
        });
    }

    let mut builder = DagBuilder::new();
    for st in stanzas.iter().filter(|s| !s.obsolete) {
        let child = st.id.as_deref().unwrap();
        for parent in &st.parents {
            if obsolete.contains(parent) {
                stats.edges_to_obsolete_dropped += 1;
                continue;
            }
            if let Some(&pb) = branch_of.get(parent.as_str()) {
                if pb != branch_of[child] {
                    warn!("dropping cross-branch edge {child} -> {parent}");
                    stats.cross_branch_dropped += 1;
                    continue;
                }
            }
            builder.edge(child, parent);
        }
    }
    stats.terms = specs.len();
    for spec in specs {
        builder.term_spec(spec);
    }
    let dag = builder.build()?;
    stats.edges = dag.edge_count();
    Ok((dag, stats))
}

fn first_token(value: &str) -> &str {
    value.split_whitespace().next().unwrap_or("")
}

/// Writes `dag` as an OBO 1.2 file with every edge as `is_a`.
pub fn write_obo<W: std::io::Write>(dag: &OntologyDag, mut w: W) -> Result<()> {
    writeln!(w, "format-version: 1.2")?;
    for t in dag.terms() {
        writeln!(w, "\n[Term]")?;
        writeln!(w, "id: {}", dag.id(t))?;
        writeln!(w, "name: {}", dag.name(t))?;
        if let Some(b) = dag.branch(t) {
            writeln!(w, "namespace: {}", b.namespace())?;
        }
        for &p in dag.parents(t) {
            writeln!(w, "is_a: {} ! {}", dag.id(p), dag.name(p))?;
        }
    }
    Ok(())
}
