//! Temporal-holdout benchmark for negative selection.
//!
//! Negatives are selected on the older release and scored against the newer
//! one: a selected protein that the newer release annotates to the term is a
//! false negative (FN). Each term is drawn once per repeat at the largest
//! budget, and smaller budgets read FN off prefixes of that draw.

mod tune;
pub mod wilcoxon;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::annotations::{novelty, Holdout, LabelMatrix, MatrixMode, ProteinIdx};
use crate::error::{Error, Result};
use crate::ontology::{Branch, OntologyDag, TermIdx};
use crate::rng;
use crate::selection::{self, Method, SelectionConfig, SelectionContext, SelectionResult};
use crate::similarity::SimilarityMatrix;

pub use tune::{tune_k, TuneConfig, TuneResult, DEFAULT_GRID};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};

pub const DEFAULT_BUDGETS: [usize; 5] = [500, 750, 1000, 1250, 1500];
pub const DEFAULT_REPEATS: usize = 10;

/// Number of selected negatives annotated to `k` in `new`.
pub fn false_negatives(result: &SelectionResult, new: &LabelMatrix, k: TermIdx) -> usize {
    count_in(&result.negatives, new.col(k))
}

fn count_in(selected: &[ProteinIdx], positives: &[ProteinIdx]) -> usize {
    selected.iter().filter(|i| positives.binary_search(i).is_ok()).count()
}

/// Terms of `branch` that gain at least one protein between the TPR-closed releases.
pub fn eligible_terms(holdout: &Holdout, dag: &OntologyDag, branch: Branch) -> Vec<TermIdx> {
    novelty(&holdout.old.closed, &holdout.new.closed)
        .into_iter()
        .map(|s| s.term)
        .filter(|&t| dag.branch(t) == Some(branch))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    pub seed: u64,
    pub repeats: usize,
    /// K per NSFS variant.
    pub quantiles: BTreeMap<Method, f64>,
    /// Newer-release matrix used for the FN test.
    pub fn_mode: MatrixMode,
    pub snob_mode: MatrixMode,
}

impl BenchmarkConfig {
    pub fn new(methods: Vec<Method>, seed: u64) -> Self {
        BenchmarkConfig {
            methods,
            budgets: DEFAULT_BUDGETS.to_vec(),
            seed,
            repeats: DEFAULT_REPEATS,
            quantiles: BTreeMap::new(),
            fn_mode: MatrixMode::Closed,
            snob_mode: MatrixMode::Closed,
        }
    }

    fn method_config(&self, method: Method, budget: usize) -> SelectionConfig {
        let mut cfg = SelectionConfig::new(method, budget, self.seed);
        cfg.quantile = self.quantiles.get(&method).copied().filter(|_| method.is_nsfs());
        cfg.snob_mode = self.snob_mode;
        cfg
    }

    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Domain("no selection methods given".into()));
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return Err(Error::Domain("budgets must be a non-empty list of positive sizes".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Domain("repeats must be at least 1".into()));
        }
        for &m in &self.methods {
            self.method_config(m, 1).validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub other: Method,
    pub p_value: f64,
    pub n: usize,
    pub exact: bool,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub method: Method,
    pub budget: usize,
    pub mean_fn: f64,
    /// Per eligible term, FN averaged over repeats (same order as `BranchReport::terms`).
    pub per_term: Vec<f64>,
    /// Mean share of the negatives chosen by the heuristic rather than fill.
    pub heuristic_share: f64,
    pub comparisons: Vec<Comparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchReport {
    pub branch: Branch,
    pub terms: Vec<String>,
    pub cells: Vec<CellReport>,
}

impl BranchReport {
    pub fn cell(&self, method: Method, budget: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.method == method && c.budget == budget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub old_release: String,
    pub new_release: String,
    pub config: BenchmarkConfig,
    pub branches: Vec<BranchReport>,
}

/// Similarity matrices available to NSFS variants, looked up by measure and branch.
#[derive(Clone, Copy, Default)]
pub struct Matrices<'a> {
    pub list: &'a [SimilarityMatrix],
}

impl<'a> Matrices<'a> {
    pub fn for_method(&self, method: Method, branch: Branch) -> Result<Option<&'a SimilarityMatrix>> {
        let Some(measure) = method.measure() else {
            return Ok(None);
        };
        self.list
            .iter()
            .find(|m| m.measure == measure && m.branch == branch)
            .map(Some)
            .ok_or_else(|| Error::Domain(format!("{method} needs a {measure} matrix for {branch}")))
    }
}

struct TermOutcome {
    /// Indexed by budget position.
    fn_mean: Vec<f64>,
    heuristic_share: Vec<f64>,
}

fn run_term(
    k: TermIdx,
    method: Method,
    cfg: &BenchmarkConfig,
    budgets: &[usize],
    holdout: &Holdout,
    ctx: SelectionContext<'_>,
) -> Result<TermOutcome> {
    let max_budget = *budgets.last().unwrap();
    let scfg = cfg.method_config(method, max_budget);
    let pool = selection::heuristic_pool(k, &scfg, ctx)?;
    let all = selection::candidates(k, &ctx.labels.closed);
    let positives = holdout.new.matrix(cfg.fn_mode).col(k);
    let accession = ctx.dag.id(k).as_str();

    let mut fn_sum = vec![0usize; budgets.len()];
    let mut heuristic_sum = vec![0.0; budgets.len()];
    for rep in 0..cfg.repeats {
        let mut stream = rng::stream(cfg.seed, accession, rep as u64);
        let (negatives, n_heuristic) = selection::draw(&pool, &all, max_budget, &mut stream);
        for (bi, &b) in budgets.iter().enumerate() {
            let len = b.min(negatives.len());
            fn_sum[bi] += count_in(&negatives[..len], positives);
            if len > 0 {
                heuristic_sum[bi] += n_heuristic.min(len) as f64 / len as f64;
            }
        }
    }
    let reps = cfg.repeats as f64;
    Ok(TermOutcome {
        fn_mean: fn_sum.iter().map(|&s| s as f64 / reps).collect(),
        heuristic_share: heuristic_sum.iter().map(|&s| s / reps).collect(),
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Benchmarks every configured method on one branch.
pub fn run_branch(
    cfg: &BenchmarkConfig,
    holdout: &Holdout,
    dag: &OntologyDag,
    branch: Branch,
    matrices: Matrices<'_>,
) -> Result<BranchReport> {
    cfg.validate()?;
    let mut budgets = cfg.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let terms = eligible_terms(holdout, dag, branch);
    if terms.is_empty() {
        return Err(Error::Empty(format!("no eligible terms in {branch}")));
    }

    let mut per_method: Vec<(Method, Vec<TermOutcome>)> = Vec::new();
    for &method in &cfg.methods {
        if per_method.iter().any(|(m, _)| *m == method) {
            continue;
        }
        let ctx = SelectionContext {
            dag,
            labels: &holdout.old,
            matrix: matrices.for_method(method, branch)?,
        };
        let outcomes = terms
            .par_iter()
            .map(|&k| run_term(k, method, cfg, &budgets, holdout, ctx))
            .collect::<Result<Vec<_>>>()?;
        per_method.push((method, outcomes));
    }

    let mut cells = Vec::new();
    for (bi, &budget) in budgets.iter().enumerate() {
        let columns: Vec<(Method, Vec<f64>, f64)> = per_method
            .iter()
            .map(|(m, outcomes)| {
                let fn_values: Vec<f64> = outcomes.iter().map(|o| o.fn_mean[bi]).collect();
                let shares: Vec<f64> = outcomes.iter().map(|o| o.heuristic_share[bi]).collect();
                (*m, fn_values, mean(&shares))
            })
            .collect();
        for (method, per_term, heuristic_share) in &columns {
            let comparisons = columns
                .iter()
                .filter(|(other, ..)| other != method)
                .map(|(other, theirs, _)| {
                    let w = wilcoxon_signed_rank(per_term, theirs)?;
                    Ok(Comparison {
                        other: *other,
                        p_value: w.p_value,
                        n: w.n,
                        exact: w.exact,
                        degenerate: w.degenerate,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            cells.push(CellReport {
                method: *method,
                budget,
                mean_fn: mean(per_term),
                per_term: per_term.clone(),
                heuristic_share: *heuristic_share,
                comparisons,
            });
        }
    }
    Ok(BranchReport {
        branch,
        terms: terms.iter().map(|&t| dag.id(t).to_string()).collect(),
        cells,
    })
}

/// Runs the benchmark on each branch in `branches`. Branches without
/// eligible terms are skipped; if none remain the result is an
/// [`Error::Empty`].
pub fn run_benchmark(
    cfg: &BenchmarkConfig,
    holdout: &Holdout,
    dag: &OntologyDag,
    branches: &[Branch],
    matrices: Matrices<'_>,
) -> Result<EvaluationReport> {
    let mut reports = Vec::new();
    for &branch in branches {
        match run_branch(cfg, holdout, dag, branch, matrices) {
            Ok(r) => reports.push(r),
            Err(Error::Empty(msg)) => log::warn!("{msg}; skipping"),
            Err(e) => return Err(e),
        }
    }
    if reports.is_empty() {
        return Err(Error::Empty("no eligible terms".into()));
    }
    Ok(EvaluationReport {
        old_release: holdout.old_label.clone(),
        new_release: holdout.new_label.clone(),
        config: cfg.clone(),
        branches: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{AnnotationRelease, ProteinId};
    use crate::ontology::DagBuilder;

    // a <- b <- c, plus MF term m
    fn dag() -> OntologyDag {
        let mut bld = DagBuilder::new();
        bld.term("GO:0000001", "a", Branch::Bp).unwrap();
        bld.term("GO:0000002", "b", Branch::Bp).unwrap();
        bld.term("GO:0000003", "c", Branch::Bp).unwrap();
        bld.term("GO:0000010", "m", Branch::Mf).unwrap();
        bld.edge("GO:0000002", "GO:0000001").edge("GO:0000003", "GO:0000002");
        bld.build().unwrap()
    }

    fn release(label: &str, pairs: &[(&str, u32)]) -> AnnotationRelease {
        AnnotationRelease::from_pairs(label, pairs.iter().map(|(p, t)| (ProteinId::new(p), TermIdx(*t))))
    }

    #[test]
    fn identical_releases_have_no_eligible_terms() {
        let dag = dag();
        let r = release("r", &[("P1", 2), ("P2", 3)]);
        let h = Holdout::new(&dag, &r, &r);
        assert!(eligible_terms(&h, &dag, Branch::Bp).is_empty());
        let cfg = BenchmarkConfig::new(vec![Method::Random], 1);
        assert!(matches!(
            run_benchmark(&cfg, &h, &dag, &Branch::ALL, Matrices::default()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn closure_propagates_novelty() {
        let dag = dag();
        let old = release("old", &[("P1", 3)]);
        let new = release("new", &[("P1", 3), ("P2", 2)]);
        let h = Holdout::new(&dag, &old, &new);
        // One new annotation on the leaf c.
        assert_eq!(eligible_terms(&h, &dag, Branch::Bp), vec![TermIdx(0), TermIdx(1), TermIdx(2)]);
    }

    #[test]
    fn fn_counts_intersection() {
        let dag = dag();
        let old = release("old", &[("P1", 3), ("P2", 3), ("P3", 3), ("P4", 3)]);
        let new = release("new", &[("P1", 2), ("P2", 1)]);
        let h = Holdout::new(&dag, &old, &new);
        let r = SelectionResult {
            term: TermIdx(1),
            negatives: vec![0, 1, 2],
            n_heuristic: 3,
            n_filled: 0,
        };
        // b is closed-annotated on P1 (via c) and P2.
        assert_eq!(false_negatives(&r, &h.new.closed, TermIdx(1)), 2);
        assert_eq!(false_negatives(&r, &h.new.direct, TermIdx(1)), 1);
    }

    #[test]
    fn random_over_whole_pool_counts_every_novel_protein() {
        let dag = dag();
        let old = release("old", &[("P1", 3), ("P2", 3), ("P3", 3), ("P4", 3), ("P5", 3)]);
        let new = release("new", &[("P1", 3), ("P2", 3), ("P3", 3), ("P4", 3), ("P5", 3), ("P1", 1)]);
        let h = Holdout::new(&dag, &old, &new);
        let mut cfg = BenchmarkConfig::new(vec![Method::Random], 3);
        cfg.budgets = vec![100];
        cfg.repeats = 3;
        let r = run_branch(&cfg, &h, &dag, Branch::Bp, Matrices::default()).unwrap();
        // P1 gained b, and a through closure.
        assert_eq!(r.terms, vec!["GO:0000001", "GO:0000002"]);
        let cell = r.cell(Method::Random, 100).unwrap();
        assert_eq!(cell.per_term, vec![1.0, 1.0]);
        assert!(cell.comparisons.is_empty());
        let own = wilcoxon_signed_rank(&cell.per_term, &cell.per_term).unwrap();
        assert_eq!(own.p_value, 1.0);
        assert!(own.degenerate);
    }

    #[test]
    fn nsfs_without_matrix_is_an_error() {
        let dag = dag();
        let old = release("old", &[("P1", 3)]);
        let new = release("new", &[("P1", 3), ("P2", 2)]);
        let h = Holdout::new(&dag, &old, &new);
        let mut cfg = BenchmarkConfig::new(vec![Method::NsfsJaccard], 3);
        cfg.quantiles.insert(Method::NsfsJaccard, 0.8);
        assert!(matches!(
            run_branch(&cfg, &h, &dag, Branch::Bp, Matrices::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn report_means_match_per_term_rows() {
        let dag = dag();
        let old = release("old", &[("P1", 3), ("P2", 2), ("P3", 0), ("P4", 3)]);
        let new = release("new", &[("P1", 3), ("P2", 3), ("P3", 2), ("P4", 3), ("P5", 1)]);
        let h = Holdout::new(&dag, &old, &new);
        let mut cfg = BenchmarkConfig::new(vec![Method::Random, Method::Snob, Method::Sibling], 11);
        cfg.budgets = vec![1, 2, 3];
        let r = run_branch(&cfg, &h, &dag, Branch::Bp, Matrices::default()).unwrap();
        for c in &r.cells {
            let m = c.per_term.iter().sum::<f64>() / c.per_term.len() as f64;
            assert_eq!(m, c.mean_fn);
            assert!(c.per_term.iter().all(|&f| f <= c.budget as f64));
        }
        // Nested draws make FN non-decreasing in the budget.
        for m in &cfg.methods {
            let f: Vec<&Vec<f64>> = cfg.budgets.iter().map(|&b| &r.cell(*m, b).unwrap().per_term).collect();
            for w in f.windows(2) {
                assert!(w[0].iter().zip(w[1]).all(|(a, b)| a <= b));
            }
        }
    }
}
