//! Choosing the NSFS quantile K from the older release alone.
//!
//! A random share of the direct annotations is hidden, the rest is closed
//! under the true path rule, and NSFS runs on the masked data for each grid
//! value. Selected proteins that carry the term in the unmasked closure are
//! pseudo-false negatives; the K with the lowest mean count wins.

use rand::seq::SliceRandom;
use serde::Serialize;

use rayon::prelude::*;

use super::count_in;
use crate::annotations::{novelty, tpr_close, LabelMatrix, Labels};
use crate::error::{Error, Result};
use crate::ontology::{Branch, OntologyDag, TermIdx};
use crate::rng;
use crate::selection::{self, Pool};
use crate::similarity::{annotated_scope, Measure, SimilarityMatrix};

pub const DEFAULT_GRID: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneConfig {
    pub grid: Vec<f64>,
    pub budget: usize,
    pub seed: u64,
    pub mask_fraction: f64,
    /// Independent masks; pseudo-FN is averaged over all of them.
    pub repeats: usize,
}

impl TuneConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        TuneConfig {
            grid: DEFAULT_GRID.to_vec(),
            budget,
            seed,
            mask_fraction: 0.1,
            repeats: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneResult {
    pub k: f64,
    /// (K, mean pseudo-FN) in ascending K.
    pub scores: Vec<(f64, f64)>,
    /// Pseudo-eligible terms summed over masks.
    pub terms: usize,
}

/// Hides `fraction` of the direct annotations, chosen with the stream for `salt`.
pub fn mask_annotations(direct: &LabelMatrix, fraction: f64, seed: u64, salt: u64) -> Result<LabelMatrix> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Empty(format!(
            "mask fraction {fraction} leaves no pseudo-positives to count"
        )));
    }
    let mut pairs: Vec<(u32, TermIdx)> = (0..direct.n_proteins() as u32)
        .flat_map(|i| direct.row(i).iter().map(move |&t| (i, t)))
        .collect();
    let n_mask = (fraction * pairs.len() as f64).round() as usize;
    if n_mask == 0 {
        return Err(Error::Empty("masking hides no annotation".into()));
    }
    let mut stream = rng::stream(seed, "mask", salt);
    pairs.shuffle(&mut stream);
    pairs.truncate(pairs.len() - n_mask);
    let mut rows = vec![Vec::new(); direct.n_proteins()];
    for (i, t) in pairs {
        rows[i as usize].push(t);
    }
    Ok(LabelMatrix::from_rows(direct.n_terms(), rows))
}

/// Picks K for the NSFS variant on `measure` by masked internal holdout on `old`.
pub fn tune_k(old: &Labels, dag: &OntologyDag, branch: Branch, measure: Measure, cfg: &TuneConfig) -> Result<TuneResult> {
    if cfg.grid.is_empty() {
        return Err(Error::Domain("K grid is empty".into()));
    }
    if let Some(k) = cfg.grid.iter().find(|k| !(**k > 0.0 && **k < 1.0)) {
        return Err(Error::Domain(format!("grid value {k} outside (0, 1)")));
    }
    if cfg.budget == 0 || cfg.repeats == 0 {
        return Err(Error::Domain("budget and repeats must be at least 1".into()));
    }
    let mut grid = cfg.grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut totals = vec![0usize; grid.len()];
    let mut n_terms = 0;
    for rep in 0..cfg.repeats {
        let direct = mask_annotations(&old.direct, cfg.mask_fraction, cfg.seed, rep as u64)?;
        let closed = tpr_close(&direct, dag);
        let terms: Vec<TermIdx> = novelty(&closed, &old.closed)
            .into_iter()
            .map(|s| s.term)
            .filter(|&t| dag.branch(t) == Some(branch))
            .collect();
        if terms.is_empty() {
            continue;
        }
        let scope = annotated_scope(dag, branch, &[&closed, &old.closed]);
        let matrix = SimilarityMatrix::build(measure, &closed, dag, branch, &scope)?;
        let counts: Vec<Vec<usize>> = terms
            .par_iter()
            .map(|&k| {
                let all = selection::candidates(k, &closed);
                let hidden = old.closed.col(k);
                grid.iter()
                    .map(|&q| {
                        let pool = Pool::Set(selection::nsfs_pool(k, &closed, &matrix, q)?);
                        let mut stream = rng::stream(cfg.seed, dag.id(k).as_str(), rep as u64);
                        let (negatives, _) = selection::draw(&pool, &all, cfg.budget, &mut stream);
                        Ok(count_in(&negatives, hidden))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for row in &counts {
            for (g, c) in row.iter().enumerate() {
                totals[g] += c;
            }
        }
        n_terms += terms.len();
    }
    if n_terms == 0 {
        return Err(Error::Empty("masking produced no pseudo-positives in this branch".into()));
    }

    let scores: Vec<(f64, f64)> = grid
        .iter()
        .zip(&totals)
        .map(|(&q, &t)| (q, t as f64 / n_terms as f64))
        .collect();
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |best, &(q, s)| match best {
            Some((_, bs)) if bs < s => best,
            _ => Some((q, s)),
        })
        .unwrap();
    Ok(TuneResult {
        k: best.0,
        scores,
        terms: n_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{AnnotationRelease, Holdout, ProteinId};
    use crate::ontology::DagBuilder;

    fn setup() -> (OntologyDag, Labels) {
        let mut bld = DagBuilder::new();
        bld.term("GO:0000001", "a", Branch::Bp).unwrap();
        for (id, n) in [("GO:0000002", "b"), ("GO:0000003", "c"), ("GO:0000004", "d")] {
            bld.term(id, n, Branch::Bp).unwrap();
            bld.edge(id, "GO:0000001");
        }
        let dag = bld.build().unwrap();
        let pairs: Vec<(ProteinId, TermIdx)> = (0..40)
            .flat_map(|i| {
                let p = ProteinId::new(&format!("P{i:03}"));
                [(p.clone(), TermIdx(1 + i % 3)), (p, TermIdx(1 + (i + 1) % 3))]
            })
            .collect();
        let rel = AnnotationRelease::from_pairs("old", pairs);
        let labels = Holdout::single(&dag, &rel).old;
        (dag, labels)
    }

    #[test]
    fn single_value_grid_returns_it() {
        let (dag, labels) = setup();
        let mut cfg = TuneConfig::new(5, 1);
        cfg.grid = vec![0.7];
        let r = tune_k(&labels, &dag, Branch::Bp, Measure::Jaccard, &cfg).unwrap();
        assert_eq!(r.k, 0.7);
    }

    #[test]
    fn guards() {
        let (dag, labels) = setup();
        let mut cfg = TuneConfig::new(5, 1);
        cfg.grid.clear();
        assert!(matches!(tune_k(&labels, &dag, Branch::Bp, Measure::Jaccard, &cfg), Err(Error::Domain(_))));
        let mut cfg = TuneConfig::new(5, 1);
        cfg.mask_fraction = 0.0;
        assert!(matches!(tune_k(&labels, &dag, Branch::Bp, Measure::Jaccard, &cfg), Err(Error::Empty(_))));
    }

    #[test]
    fn mask_hides_requested_share() {
        let (_, labels) = setup();
        let masked = mask_annotations(&labels.direct, 0.25, 3, 0).unwrap();
        assert_eq!(masked.nnz(), 60);
        for i in 0..masked.n_proteins() as u32 {
            assert!(masked.row(i).iter().all(|t| labels.direct.get(i, *t)));
        }
    }

    #[test]
    fn ties_prefer_larger_k() {
        let (dag, labels) = setup();
        // A budget covering every candidate makes all grid values score the same.
        let cfg = TuneConfig::new(1000, 2);
        let r = tune_k(&labels, &dag, Branch::Bp, Measure::Jaccard, &cfg).unwrap();
        assert!(r.scores.windows(2).all(|w| w[0].1 == w[1].1));
        assert_eq!(r.k, 0.95);
    }
}
