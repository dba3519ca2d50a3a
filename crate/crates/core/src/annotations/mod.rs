//! Annotation releases, label matrices and the true path rule.

mod gaf;

pub use gaf::{parse_gaf, parse_gaf_path, write_gaf, GafOptions, GafStats, EXPERIMENTAL_CODES};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{Branch, OntologyDag, TermIdx};

/// Row index into a [`LabelMatrix`].
pub type ProteinIdx = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProteinId(String);

impl ProteinId {
    pub fn new(accession: &str) -> Self {
        ProteinId(accession.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProteinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Direct annotations of one temporal release.
#[derive(Clone, Debug)]
pub struct AnnotationRelease {
    pub label: String,
    pub evidence: BTreeSet<String>,
    direct: BTreeMap<ProteinId, BTreeSet<TermIdx>>,
    pub stats: GafStats,
}

impl AnnotationRelease {
    pub fn from_pairs<I>(label: &str, pairs: I) -> Self
    where
        I: IntoIterator<Item = (ProteinId, TermIdx)>,
    {
        let mut direct: BTreeMap<ProteinId, BTreeSet<TermIdx>> = BTreeMap::new();
        for (p, t) in pairs {
            direct.entry(p).or_default().insert(t);
        }
        AnnotationRelease {
            label: label.to_string(),
            evidence: BTreeSet::new(),
            direct,
            stats: GafStats::default(),
        }
    }

    pub fn protein_count(&self) -> usize {
        self.direct.len()
    }

    pub fn annotation_count(&self) -> usize {
        self.direct.values().map(BTreeSet::len).sum()
    }

    pub fn proteins(&self) -> impl Iterator<Item = &ProteinId> {
        self.direct.keys()
    }

    pub fn terms_of(&self, protein: &ProteinId) -> Option<&BTreeSet<TermIdx>> {
        self.direct.get(protein)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProteinId, &BTreeSet<TermIdx>)> {
        self.direct.iter()
    }
}

/// Sparse boolean protein × term matrix, stored both by row and by column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMatrix {
    rows: Vec<Vec<TermIdx>>,
    cols: Vec<Vec<ProteinIdx>>,
    annotated: usize,
}

impl LabelMatrix {
    /// `rows[i]` lists the terms of protein `i`; order and duplicates do not matter.
    pub fn from_rows(n_terms: usize, mut rows: Vec<Vec<TermIdx>>) -> Self {
        let mut cols: Vec<Vec<ProteinIdx>> = vec![Vec::new(); n_terms];
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            for t in row.iter() {
                cols[t.ix()].push(i as ProteinIdx);
            }
        }
        let annotated = rows.iter().filter(|r| !r.is_empty()).count();
        LabelMatrix {
            rows,
            cols,
            annotated,
        }
    }

    pub fn n_proteins(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.cols.len()
    }

    /// Number of proteins with at least one annotation.
    pub fn annotated_proteins(&self) -> usize {
        self.annotated
    }

    pub fn row(&self, i: ProteinIdx) -> &[TermIdx] {
        &self.rows[i as usize]
    }

    pub fn col(&self, t: TermIdx) -> &[ProteinIdx] {
        &self.cols[t.ix()]
    }

    pub fn get(&self, i: ProteinIdx, t: TermIdx) -> bool {
        self.rows[i as usize].binary_search(&t).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Applies the true path rule: every annotation is copied to all ancestors
/// of the annotated term. The dummy root is never annotated.
pub fn tpr_close(direct: &LabelMatrix, dag: &OntologyDag) -> LabelMatrix {
    let rows: Vec<Vec<TermIdx>> = direct
        .rows
        .par_iter()
        .map(|row| {
            let mut closed: Vec<TermIdx> = row
                .iter()
                .flat_map(|&t| dag.ancestors(t).iter().copied().chain(std::iter::once(t)))
                .collect();
            closed.sort_unstable();
            closed.dedup();
            closed
        })
        .collect();
    LabelMatrix::from_rows(direct.n_terms(), rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    Direct,
    Closed,
}

impl std::str::FromStr for MatrixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(MatrixMode::Direct),
            "closed" => Ok(MatrixMode::Closed),
            _ => Err(Error::Domain(format!("unknown matrix mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Labels {
    pub direct: LabelMatrix,
    pub closed: LabelMatrix,
}

impl Labels {
    fn new(direct: LabelMatrix, dag: &OntologyDag) -> Self {
        let closed = tpr_close(&direct, dag);
        Labels { direct, closed }
    }

    pub fn matrix(&self, mode: MatrixMode) -> &LabelMatrix {
        match mode {
            MatrixMode::Direct => &self.direct,
            MatrixMode::Closed => &self.closed,
        }
    }
}

/// Terms whose protein set grew between two releases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoveltySet {
    pub term: TermIdx,
    pub proteins: Vec<ProteinIdx>,
}

/// Two releases aligned over the union of their protein universes. A protein
/// missing from a release has an all-zero row there.
#[derive(Clone, Debug)]
pub struct Holdout {
    proteins: Vec<ProteinId>,
    pub old: Labels,
    pub new: Labels,
    pub old_label: String,
    pub new_label: String,
}

impl Holdout {
    pub fn new(dag: &OntologyDag, old: &AnnotationRelease, new: &AnnotationRelease) -> Self {
        let proteins: Vec<ProteinId> = old
            .proteins()
            .chain(new.proteins())
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let rows_of = |rel: &AnnotationRelease| -> Vec<Vec<TermIdx>> {
            proteins
                .iter()
                .map(|p| rel.terms_of(p).map(|s| s.iter().copied().collect()).unwrap_or_default())
                .collect()
        };
        let old_direct = LabelMatrix::from_rows(dag.len(), rows_of(old));
        let new_direct = LabelMatrix::from_rows(dag.len(), rows_of(new));
        Holdout {
            proteins,
            old: Labels::new(old_direct, dag),
            new: Labels::new(new_direct, dag),
            old_label: old.label.clone(),
            new_label: new.label.clone(),
        }
    }

    /// A holdout whose two sides are the same release; used when only
    /// selection (no evaluation) is needed.
    pub fn single(dag: &OntologyDag, release: &AnnotationRelease) -> Self {
        Holdout::new(dag, release, release)
    }

    pub fn n_proteins(&self) -> usize {
        self.proteins.len()
    }

    pub fn proteins(&self) -> &[ProteinId] {
        &self.proteins
    }

    pub fn protein(&self, i: ProteinIdx) -> &ProteinId {
        &self.proteins[i as usize]
    }

    pub fn protein_index(&self, id: &ProteinId) -> Option<ProteinIdx> {
        self.proteins.binary_search(id).ok().map(|i| i as ProteinIdx)
    }

    pub fn novelty(&self, mode: MatrixMode) -> Vec<NoveltySet> {
        novelty(self.old.matrix(mode), self.new.matrix(mode))
    }
}

/// For every term, the proteins annotated in `new` but not in `old`.
/// Terms with no novel protein are omitted.
pub fn novelty(old: &LabelMatrix, new: &LabelMatrix) -> Vec<NoveltySet> {
    (0..new.n_terms() as u32)
        .map(TermIdx)
        .filter_map(|t| {
            let before = old.col(t);
            let proteins: Vec<ProteinIdx> = new
                .col(t)
                .iter()
                .copied()
                .filter(|p| before.binary_search(p).is_err())
                .collect();
            (!proteins.is_empty()).then_some(NoveltySet { term: t, proteins })
        })
        .collect()
}

/// Distinct proteins and total novel annotations over the terms of one branch.
pub fn novelty_totals(sets: &[NoveltySet], dag: &OntologyDag, branch: Branch) -> (usize, usize) {
    let mut proteins = BTreeSet::new();
    let mut annotations = 0;
    for set in sets.iter().filter(|s| dag.branch(s.term) == Some(branch)) {
        proteins.extend(set.proteins.iter().copied());
        annotations += set.proteins.len();
    }
    (proteins.len(), annotations)
}

/// Fraction of annotated proteins carrying term `k`. `closed` should be a
/// TPR-closed matrix; the denominator counts proteins with at least one
/// annotation.
pub fn term_frequency(closed: &LabelMatrix, k: TermIdx) -> Result<f64> {
    let n = closed.annotated_proteins();
    if n == 0 {
        return Err(Error::Domain("term frequency over an empty release".into()));
    }
    Ok(closed.col(k).len() as f64 / n as f64)
}
