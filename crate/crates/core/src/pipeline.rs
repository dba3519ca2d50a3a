//! End-to-end runs that read ontology and annotation files and write
//! CSV/JSON artifacts. Output bytes depend only on the inputs and the
//! configuration, never on thread count or wall-clock time.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{self, Category, CategoryRecord, ForkRecord, Proportions};
use crate::annotations::{
    novelty_totals, parse_gaf_path, GafOptions, GafStats, Holdout, LabelMatrix, MatrixMode,
};
use crate::error::{Error, Result};
use crate::evaluation::{self, BenchmarkConfig, EvaluationReport, Matrices, TuneConfig, TuneResult};
use crate::ontology::{parse_obo_path, Branch, EdgeRelations, OboStats, OntologyDag, TermIdx};
use crate::selection::{self, Method, SelectionConfig, SelectionContext};
use crate::similarity::{annotated_scope, Measure, SimilarityMatrix};
use crate::stats::DistributionSummary;

/// Parsed ontology plus an older and a newer annotation release.
pub struct Inputs {
    pub dag: OntologyDag,
    pub holdout: Holdout,
    pub obo_stats: OboStats,
    pub old_stats: GafStats,
    pub new_stats: GafStats,
}

pub fn load_inputs(
    obo: &Path,
    old_gaf: &Path,
    new_gaf: Option<&Path>,
    relations: &EdgeRelations,
    gaf: &GafOptions,
) -> Result<Inputs> {
    let (dag, obo_stats) = parse_obo_path(obo, relations)?;
    info!("{}: {} terms, {} edges", obo.display(), dag.len(), dag.edge_count());
    let old = parse_gaf_path(old_gaf, &dag, gaf, &file_label(old_gaf))?;
    let new = match new_gaf {
        Some(p) => Some(parse_gaf_path(p, &dag, gaf, &file_label(p))?),
        None => None,
    };
    let holdout = match &new {
        Some(n) => Holdout::new(&dag, &old, n),
        None => Holdout::single(&dag, &old),
    };
    Ok(Inputs {
        obo_stats,
        old_stats: old.stats.clone(),
        new_stats: new.map(|n| n.stats).unwrap_or_default(),
        dag,
        holdout,
    })
}

fn file_label(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Builds similarity matrices, reusing binary copies under `dir` when given.
#[derive(Clone, Debug, Default)]
pub struct MatrixCache {
    pub dir: Option<PathBuf>,
}

impl MatrixCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        MatrixCache { dir }
    }

    fn key(measure: Measure, closed: &LabelMatrix, dag: &OntologyDag, branch: Branch, scope: &[TermIdx]) -> String {
        let mut h = Sha256::new();
        h.update(b"negsel-matrix-v1\0");
        h.update(measure.as_str().as_bytes());
        h.update(branch.as_str().as_bytes());
        h.update((closed.annotated_proteins() as u64).to_le_bytes());
        for t in dag.terms_in(branch) {
            h.update(dag.id(t).as_str().as_bytes());
            for &p in dag.parents(t) {
                h.update(b"<");
                h.update(dag.id(p).as_str().as_bytes());
            }
            h.update(b"|");
            for &i in closed.col(t) {
                h.update(i.to_le_bytes());
            }
            h.update(b"\n");
        }
        h.update(b"scope");
        for t in scope {
            h.update(t.0.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get(
        &self,
        measure: Measure,
        closed: &LabelMatrix,
        dag: &OntologyDag,
        branch: Branch,
        scope: &[TermIdx],
    ) -> Result<SimilarityMatrix> {
        let Some(dir) = &self.dir else {
            return SimilarityMatrix::build(measure, closed, dag, branch, scope);
        };
        let path = dir.join(format!("{}.negsim", Self::key(measure, closed, dag, branch, scope)));
        let mut terms = scope.to_vec();
        terms.sort_unstable();
        terms.dedup();
        if path.exists() {
            match File::open(&path).map_err(Error::from).and_then(|f| {
                SimilarityMatrix::read_binary(std::io::BufReader::new(f), branch, terms.clone())
            }) {
                Ok(m) if m.measure == measure => {
                    debug!("matrix cache hit {}", path.display());
                    return Ok(m);
                }
                Ok(_) => log::warn!("{}: measure mismatch, rebuilding", path.display()),
                Err(e) => log::warn!("{}: {e}, rebuilding", path.display()),
            }
        }
        let mut m = SimilarityMatrix::build(measure, closed, dag, branch, scope)?;
        m.round_to_f32();
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            m.write_binary(&mut w)?;
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(m)
    }
}

/// Similarity matrix for `branch` over the terms annotated in either
/// release, with frequencies from the older closed matrix.
pub fn branch_matrix(inputs: &Inputs, measure: Measure, branch: Branch, cache: &MatrixCache) -> Result<SimilarityMatrix> {
    let h = &inputs.holdout;
    let scope = annotated_scope(&inputs.dag, branch, &[&h.old.closed, &h.new.closed]);
    if scope.is_empty() {
        return Err(Error::Empty(format!("no annotated terms in {branch}")));
    }
    cache.get(measure, &h.old.closed, &inputs.dag, branch, &scope)
}

fn create(out_dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out_dir)?;
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

fn write_json<T: Serialize>(out_dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(out_dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct NoveltyCounts {
    pub proteins: usize,
    pub annotations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankSummary {
    pub per_term: DistributionSummary,
    pub pooled: DistributionSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForkSummary {
    pub sib: Option<DistributionSummary>,
    pub other: Option<DistributionSummary>,
    pub all: Option<DistributionSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchSummary {
    pub branch: Branch,
    pub novelty_direct: NoveltyCounts,
    pub novelty_closed: NoveltyCounts,
    pub categories: Option<Proportions>,
    pub categories_per_protein: Option<Proportions>,
    pub ranks: BTreeMap<Measure, RankSummary>,
    pub forks: ForkSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisSummary {
    pub old_release: String,
    pub new_release: String,
    pub max_level: i32,
    pub branches: Vec<BranchSummary>,
}

fn summary_of(values: &[f64]) -> Option<DistributionSummary> {
    DistributionSummary::from_values(values).ok()
}

/// Writes categories.csv, ranks.csv, forks.csv and summary.json.
pub fn run_analysis(
    inputs: &Inputs,
    branches: &[Branch],
    measures: &[Measure],
    cache: &MatrixCache,
    out_dir: &Path,
) -> Result<AnalysisSummary> {
    let dag = &inputs.dag;
    let h = &inputs.holdout;
    let direct_novelty = h.novelty(MatrixMode::Direct);
    let closed_novelty = h.novelty(MatrixMode::Closed);
    let records = analysis::categorize_all(&direct_novelty, &h.old.direct, dag);
    let forks = analysis::fork_analysis(&records, dag)?;
    let acc = |t: TermIdx| dag.id(t).as_str();
    let prot = |i: u32| h.protein(i).as_str();

    let mut cat_w = create(out_dir, "categories.csv")?;
    writeln!(cat_w, "branch,protein,term,old_term,category")?;
    let mut rank_w = create(out_dir, "ranks.csv")?;
    writeln!(rank_w, "branch,measure,term,protein,old_term,rank")?;
    let mut fork_w = create(out_dir, "forks.csv")?;
    writeln!(fork_w, "branch,term,protein,old_term,case,fork_term,distance")?;

    let mut summaries = Vec::new();
    for &branch in branches {
        let in_branch = |t: TermIdx| dag.branch(t) == Some(branch);
        let mut mine: Vec<&CategoryRecord> = records.iter().filter(|r| in_branch(r.term)).collect();
        mine.sort_by_key(|r| (r.term, r.protein, r.old_term));
        for r in &mine {
            writeln!(
                cat_w,
                "{},{},{},{},{}",
                branch,
                prot(r.protein),
                acc(r.term),
                r.old_term.map(acc).unwrap_or(""),
                r.category
            )?;
        }
        let owned: Vec<CategoryRecord> = mine.iter().map(|r| (*r).clone()).collect();

        let mut ranks = BTreeMap::new();
        for &measure in measures {
            let matrix = match branch_matrix(inputs, measure, branch, cache) {
                Ok(m) => m,
                Err(Error::Empty(_)) => continue,
                Err(e) => return Err(e),
            };
            let ra = match analysis::rank_analysis(&direct_novelty, &h.old.direct, &matrix, dag) {
                Ok(ra) => ra,
                Err(Error::Domain(msg)) => {
                    info!("{msg}");
                    continue;
                }
                Err(e) => return Err(e),
            };
            let mut recs = ra.records.clone();
            recs.sort_by_key(|r| (r.term, r.protein, r.old_term));
            for r in &recs {
                writeln!(
                    rank_w,
                    "{},{},{},{},{},{}",
                    branch,
                    measure,
                    acc(r.term),
                    prot(r.protein),
                    acc(r.old_term),
                    r.rank
                )?;
            }
            ranks.insert(
                measure,
                RankSummary {
                    per_term: ra.summary,
                    pooled: ra.pooled,
                },
            );
        }

        let mut my_forks: Vec<&ForkRecord> = forks.iter().filter(|f| in_branch(f.term)).collect();
        my_forks.sort_by_key(|f| (f.term, f.protein, f.old_term));
        for f in &my_forks {
            writeln!(
                fork_w,
                "{},{},{},{},{},{},{}",
                branch,
                acc(f.term),
                prot(f.protein),
                acc(f.old_term),
                f.case,
                acc(f.fork_term),
                f.distance
            )?;
        }
        let dist = |case: Option<Category>| -> Vec<f64> {
            my_forks
                .iter()
                .filter(|f| case.is_none_or(|c| f.case == c))
                .map(|f| f.distance as f64)
                .collect()
        };

        let (dp, da) = novelty_totals(&direct_novelty, dag, branch);
        let (cp, ca) = novelty_totals(&closed_novelty, dag, branch);
        summaries.push(BranchSummary {
            branch,
            novelty_direct: NoveltyCounts {
                proteins: dp,
                annotations: da,
            },
            novelty_closed: NoveltyCounts {
                proteins: cp,
                annotations: ca,
            },
            categories: analysis::category_proportions(&owned, false).ok(),
            categories_per_protein: analysis::category_proportions(&owned, true).ok(),
            ranks,
            forks: ForkSummary {
                sib: summary_of(&dist(Some(Category::Sib))),
                other: summary_of(&dist(Some(Category::Other))),
                all: summary_of(&dist(None)),
            },
        });
    }
    cat_w.flush()?;
    rank_w.flush()?;
    fork_w.flush()?;

    let summary = AnalysisSummary {
        old_release: h.old_label.clone(),
        new_release: h.new_label.clone(),
        max_level: dag.max_level(),
        branches: summaries,
    };
    write_json(out_dir, "summary.json", &summary)?;
    Ok(summary)
}

/// Terms that selection runs on by default: branch terms with at least one
/// positive in the older closed matrix.
pub fn default_selection_terms(inputs: &Inputs, branch: Branch) -> Vec<TermIdx> {
    let closed = &inputs.holdout.old.closed;
    inputs.dag.terms_in(branch).filter(|&t| !closed.col(t).is_empty()).collect()
}

/// Selects negatives for each of `terms` and writes `term,protein,source` rows.
pub fn run_selection<W: Write>(
    inputs: &Inputs,
    config: &SelectionConfig,
    terms: &[TermIdx],
    matrix: Option<&SimilarityMatrix>,
    mut out: W,
) -> Result<usize> {
    let ctx = SelectionContext {
        dag: &inputs.dag,
        labels: &inputs.holdout.old,
        matrix,
    };
    let results = terms
        .par_iter()
        .map(|&k| selection::select(k, config, ctx, 0))
        .collect::<Result<Vec<_>>>()?;
    writeln!(out, "term,protein,source")?;
    let mut rows = 0;
    for r in &results {
        let term = inputs.dag.id(r.term);
        for (j, &i) in r.negatives.iter().enumerate() {
            let source = if j < r.n_heuristic { "heuristic" } else { "fill" };
            writeln!(out, "{},{},{}", term, inputs.holdout.protein(i).as_str(), source)?;
            rows += 1;
        }
    }
    out.flush()?;
    Ok(rows)
}

/// Measures needed by the NSFS variants among `methods`.
pub fn measures_for(methods: &[Method]) -> Vec<Measure> {
    let mut m: Vec<Measure> = methods.iter().filter_map(|m| m.measure()).collect();
    m.sort();
    m.dedup();
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct TunedK {
    pub branch: Branch,
    pub method: Method,
    pub result: TuneResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvaluationOutput {
    pub report: EvaluationReport,
    /// K chosen per (branch, NSFS method) when tuning was requested.
    pub tuned: Vec<TunedK>,
}

/// Benchmarks `config.methods` on each branch and writes fn_per_term.csv,
/// fn_curves.csv and report.json. NSFS methods without a fixed K in
/// `config.quantiles` are tuned per branch with `tune`.
pub fn run_evaluation(
    inputs: &Inputs,
    config: &BenchmarkConfig,
    tune: Option<&TuneConfig>,
    branches: &[Branch],
    cache: &MatrixCache,
    out_dir: &Path,
) -> Result<EvaluationOutput> {
    let dag = &inputs.dag;
    let h = &inputs.holdout;
    let mut branch_reports = Vec::new();
    let mut tuned = Vec::new();
    for &branch in branches {
        if evaluation::eligible_terms(h, dag, branch).is_empty() {
            log::warn!("no eligible terms in {branch}; skipping");
            continue;
        }
        let mut cfg = config.clone();
        let mut matrices = Vec::new();
        for measure in measures_for(&cfg.methods) {
            matrices.push(branch_matrix(inputs, measure, branch, cache)?);
        }
        for &method in config.methods.iter().filter(|m| m.is_nsfs()) {
            if cfg.quantiles.contains_key(&method) {
                continue;
            }
            let tc = tune.ok_or_else(|| Error::Domain(format!("{method} needs a fixed K or K tuning")))?;
            let result = evaluation::tune_k(&h.old, dag, branch, method.measure().unwrap(), tc)?;
            info!("{branch} {method}: tuned K = {}", result.k);
            cfg.quantiles.insert(method, result.k);
            tuned.push(TunedK { branch, method, result });
        }
        let report = evaluation::run_branch(&cfg, h, dag, branch, Matrices { list: &matrices })?;
        branch_reports.push((cfg, report));
    }
    if branch_reports.is_empty() {
        return Err(Error::Empty("no eligible terms".into()));
    }

    let mut per_term = create(out_dir, "fn_per_term.csv")?;
    writeln!(per_term, "branch,method,budget,term,fn")?;
    let mut curves = create(out_dir, "fn_curves.csv")?;
    writeln!(curves, "branch,method,budget,mean_fn")?;
    for (_, r) in &branch_reports {
        for c in &r.cells {
            for (term, f) in r.terms.iter().zip(&c.per_term) {
                writeln!(per_term, "{},{},{},{},{}", r.branch, c.method, c.budget, term, f)?;
            }
        }
        let mut cells: Vec<_> = r.cells.iter().collect();
        cells.sort_by_key(|c| (c.method, c.budget));
        for c in cells {
            writeln!(curves, "{},{},{},{}", r.branch, c.method, c.budget, c.mean_fn)?;
        }
    }
    per_term.flush()?;
    curves.flush()?;

    let report = EvaluationReport {
        old_release: h.old_label.clone(),
        new_release: h.new_label.clone(),
        config: config.clone(),
        branches: branch_reports.into_iter().map(|(_, r)| r).collect(),
    };
    let output = EvaluationOutput { report, tuned };
    write_json(out_dir, "report.json", &output)?;
    Ok(output)
}

/// Writes the matrix as CSV (`<stem>.csv`) and, if asked, binary (`<stem>.negsim`).
pub fn export_matrix(matrix: &SimilarityMatrix, dag: &OntologyDag, out_dir: &Path, stem: &str, binary: bool) -> Result<()> {
    let mut w = create(out_dir, &format!("{stem}.csv"))?;
    matrix.write_csv(&mut w, dag)?;
    w.flush()?;
    if binary {
        let mut w = create(out_dir, &format!("{stem}.negsim"))?;
        matrix.write_binary(&mut w)?;
        w.flush()?;
    }
    Ok(())
}
