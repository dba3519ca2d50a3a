//! Negative example selection heuristics under a fixed budget.
//!
//! Each heuristic defines a pool of candidate negatives for a term k among
//! the proteins with Y_ik = 0 (TPR-closed older release). The pool is
//! shuffled with a per-term seeded stream and truncated to the budget; if it
//! is too small, the remaining slots are filled uniformly from the other
//! Y_ik = 0 proteins. The order of the returned list does not depend on the
//! budget, so a smaller budget always yields a prefix of a larger one.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::annotations::{LabelMatrix, Labels, MatrixMode, ProteinIdx};
use crate::error::{Error, Result};
use crate::ontology::{OntologyDag, TermIdx};
use crate::rng::{self, StreamRng};
use crate::similarity::{Measure, SimilarityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "nsfs-j")]
    NsfsJaccard,
    #[serde(rename = "nsfs-l")]
    NsfsLin,
    #[serde(rename = "sibling")]
    Sibling,
    #[serde(rename = "noancdesc")]
    NoAncDesc,
    #[serde(rename = "snob")]
    Snob,
    #[serde(rename = "random")]
    Random,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::NsfsJaccard,
        Method::NsfsLin,
        Method::Sibling,
        Method::NoAncDesc,
        Method::Snob,
        Method::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::NsfsJaccard => "nsfs-j",
            Method::NsfsLin => "nsfs-l",
            Method::Sibling => "sibling",
            Method::NoAncDesc => "noancdesc",
            Method::Snob => "snob",
            Method::Random => "random",
        }
    }

    /// The similarity measure an NSFS variant runs on.
    pub fn measure(self) -> Option<Measure> {
        match self {
            Method::NsfsJaccard => Some(Measure::Jaccard),
            Method::NsfsLin => Some(Measure::Lin),
            _ => None,
        }
    }

    pub fn is_nsfs(self) -> bool {
        self.measure().is_some()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown selection method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionConfig {
    pub method: Method,
    pub budget: usize,
    /// NSFS quantile K in (0, 1); must be set exactly for NSFS methods.
    pub quantile: Option<f64>,
    pub seed: u64,
    /// Matrix used for SNOB's conditional probabilities and C_i.
    pub snob_mode: MatrixMode,
}

impl SelectionConfig {
    pub fn new(method: Method, budget: usize, seed: u64) -> Self {
        SelectionConfig {
            method,
            budget,
            quantile: None,
            seed,
            snob_mode: MatrixMode::Closed,
        }
    }

    pub fn with_quantile(mut self, k: f64) -> Self {
        self.quantile = Some(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Domain("budget must be at least 1".into()));
        }
        match (self.method.is_nsfs(), self.quantile) {
            (true, None) => Err(Error::Domain(format!("{} needs a quantile K", self.method))),
            (true, Some(k)) if !(k > 0.0 && k < 1.0) => {
                Err(Error::Domain(format!("quantile K = {k} outside (0, 1)")))
            }
            (false, Some(_)) => Err(Error::Domain(format!("{} takes no quantile K", self.method))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionResult {
    pub term: TermIdx,
    pub negatives: Vec<ProteinIdx>,
    /// Leading entries of `negatives` chosen by the heuristic itself; the rest are random fill.
    pub n_heuristic: usize,
    pub n_filled: usize,
}

impl SelectionResult {
    /// The selection a smaller budget would have produced.
    pub fn truncated(&self, budget: usize) -> SelectionResult {
        let len = budget.min(self.negatives.len());
        let n_heuristic = self.n_heuristic.min(len);
        SelectionResult {
            term: self.term,
            negatives: self.negatives[..len].to_vec(),
            n_heuristic,
            n_filled: len - n_heuristic,
        }
    }
}

/// Proteins with Y_ik = 0.
pub fn candidates(k: TermIdx, closed: &LabelMatrix) -> Vec<ProteinIdx> {
    let pos = closed.col(k);
    (0..closed.n_proteins() as ProteinIdx)
        .filter(|i| pos.binary_search(i).is_err())
        .collect()
}

fn without_annotations_in(k: TermIdx, closed: &LabelMatrix, blocked: &[bool], check: &LabelMatrix) -> Vec<ProteinIdx> {
    candidates(k, closed)
        .into_iter()
        .filter(|&i| !check.row(i).iter().any(|t| blocked[t.ix()]))
        .collect()
}

/// NSFS pool: Y_ik = 0 and no annotation to a term whose similarity to k
/// exceeds the K-th quantile of row k.
pub fn nsfs_pool(k: TermIdx, closed: &LabelMatrix, matrix: &SimilarityMatrix, quantile: f64) -> Result<Vec<ProteinIdx>> {
    let mut blocked = vec![false; closed.n_terms()];
    for t in matrix.terms_above_quantile(k, quantile)? {
        blocked[t.ix()] = true;
    }
    Ok(without_annotations_in(k, closed, &blocked, closed))
}

/// Sibling pool: Y_ik = 0 and annotated to at least one sibling of k.
pub fn sibling_pool(k: TermIdx, closed: &LabelMatrix, dag: &OntologyDag) -> Vec<ProteinIdx> {
    let mut hit = vec![false; closed.n_proteins()];
    for s in dag.siblings(k) {
        for &i in closed.col(s) {
            hit[i as usize] = true;
        }
    }
    candidates(k, closed)
        .into_iter()
        .filter(|&i| hit[i as usize])
        .collect()
}

/// NoAncDesc pool: Y_ik = 0 and no direct annotation to any ancestor or
/// descendant of k.
pub fn noancdesc_pool(k: TermIdx, labels: &Labels, dag: &OntologyDag) -> Vec<ProteinIdx> {
    let mut blocked = vec![false; labels.closed.n_terms()];
    for &t in dag.ancestors(k).iter().chain(dag.descendants(k)) {
        blocked[t.ix()] = true;
    }
    without_annotations_in(k, &labels.closed, &blocked, &labels.direct)
}

/// SNOB score σ_i = mean over s ∈ C_i of p̂(k | s), for every candidate i.
/// Proteins without annotations score 0.
pub fn snob_scores(k: TermIdx, closed: &LabelMatrix, labels: &LabelMatrix) -> Vec<(ProteinIdx, f64)> {
    let k_pos = closed.col(k);
    let mut with_k = vec![0usize; labels.n_terms()];
    for &i in labels.col(k) {
        for t in labels.row(i) {
            with_k[t.ix()] += 1;
        }
    }
    candidates(k, closed)
        .into_iter()
        .map(|i| {
            let row = labels.row(i);
            let sigma = if row.is_empty() {
                0.0
            } else {
                row.iter()
                    .map(|s| with_k[s.ix()] as f64 / labels.col(*s).len() as f64)
                    .sum::<f64>()
                    / row.len() as f64
            };
            debug_assert!(k_pos.binary_search(&i).is_err());
            (i, sigma)
        })
        .collect()
}

/// A heuristic's candidate set for one term, before the seeded draw.
#[derive(Clone, Debug, PartialEq)]
pub enum Pool {
    /// Unordered eligible proteins, subsampled uniformly.
    Set(Vec<ProteinIdx>),
    /// Every candidate with its score; lowest scores are taken first.
    Scored(Vec<(ProteinIdx, f64)>),
}

impl Pool {
    pub fn len(&self) -> usize {
        match self {
            Pool::Set(v) => v.len(),
            Pool::Scored(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Everything a selection needs besides its config.
#[derive(Clone, Copy)]
pub struct SelectionContext<'a> {
    pub dag: &'a OntologyDag,
    pub labels: &'a Labels,
    /// Required for NSFS methods; its measure must match the variant.
    pub matrix: Option<&'a SimilarityMatrix>,
}

/// The candidate pool of `config.method` for term `k`.
pub fn heuristic_pool(k: TermIdx, config: &SelectionConfig, ctx: SelectionContext<'_>) -> Result<Pool> {
    config.validate()?;
    let closed = &ctx.labels.closed;
    Ok(match config.method {
        Method::NsfsJaccard | Method::NsfsLin => {
            let matrix = ctx
                .matrix
                .ok_or_else(|| Error::Domain(format!("{} needs a similarity matrix", config.method)))?;
            if Some(matrix.measure) != config.method.measure() {
                return Err(Error::Domain(format!(
                    "{} cannot run on a {} matrix",
                    config.method, matrix.measure
                )));
            }
            Pool::Set(nsfs_pool(k, closed, matrix, config.quantile.unwrap())?)
        }
        Method::Sibling => Pool::Set(sibling_pool(k, closed, ctx.dag)),
        Method::NoAncDesc => Pool::Set(noancdesc_pool(k, ctx.labels, ctx.dag)),
        Method::Random => Pool::Set(candidates(k, closed)),
        Method::Snob => Pool::Scored(snob_scores(k, closed, ctx.labels.matrix(config.snob_mode))),
    })
}

/// Orders `pool` with `rng` and fills from the rest of `all` up to `budget`.
/// Returns the negatives and how many of them came from the pool.
pub fn draw(pool: &Pool, all: &[ProteinIdx], budget: usize, rng: &mut StreamRng) -> (Vec<ProteinIdx>, usize) {
    let mut ordered: Vec<ProteinIdx> = match pool {
        Pool::Set(v) => {
            let mut v = v.clone();
            v.shuffle(rng);
            v
        }
        Pool::Scored(v) => {
            let mut v = v.clone();
            v.shuffle(rng);
            v.sort_by(|a, b| a.1.total_cmp(&b.1));
            v.into_iter().map(|(i, _)| i).collect()
        }
    };
    let n_pool = ordered.len();
    if n_pool < budget {
        let in_pool: std::collections::HashSet<ProteinIdx> = ordered.iter().copied().collect();
        let mut rest: Vec<ProteinIdx> = all.iter().copied().filter(|i| !in_pool.contains(i)).collect();
        rest.shuffle(rng);
        ordered.extend(rest);
    }
    ordered.truncate(budget);
    let n_heuristic = n_pool.min(ordered.len());
    (ordered, n_heuristic)
}

/// Selects `config.budget` negatives for term `k`. `salt` separates
/// independent repeats that share a seed.
pub fn select(k: TermIdx, config: &SelectionConfig, ctx: SelectionContext<'_>, salt: u64) -> Result<SelectionResult> {
    let pool = heuristic_pool(k, config, ctx)?;
    let all = candidates(k, &ctx.labels.closed);
    let mut rng = rng::stream(config.seed, ctx.dag.id(k).as_str(), salt);
    let (negatives, n_heuristic) = draw(&pool, &all, config.budget, &mut rng);
    Ok(SelectionResult {
        term: k,
        n_filled: negatives.len() - n_heuristic,
        n_heuristic,
        negatives,
    })
}
