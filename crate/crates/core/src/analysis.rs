//! Where do novel annotations land relative to a protein's existing ones?
//!
//! All three analyses work on direct annotations: C_i is the set of terms a
//! protein carried directly in the older release, and novelty is computed on
//! direct matrices.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::annotations::{LabelMatrix, NoveltySet, ProteinIdx};
use crate::error::{Error, Result};
use crate::ontology::{Branch, OntologyDag, TermIdx};
use crate::similarity::SimilarityMatrix;
use crate::stats::DistributionSummary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Category {
    First,
    Anc,
    Desc,
    Sib,
    Other,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::First,
        Category::Anc,
        Category::Desc,
        Category::Sib,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::First => "First",
            Category::Anc => "Anc",
            Category::Desc => "Desc",
            Category::Sib => "Sib",
            Category::Other => "Other",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryRecord {
    pub protein: ProteinIdx,
    pub term: TermIdx,
    pub old_term: Option<TermIdx>,
    pub category: Category,
}

/// Relation of a novel term `k` to an old term `s`. When several relations
/// hold, Desc wins over Anc, Anc over Sib.
pub fn pair_category(k: TermIdx, s: TermIdx, dag: &OntologyDag) -> Category {
    if dag.is_ancestor(s, k) {
        Category::Desc
    } else if dag.is_ancestor(k, s) {
        Category::Anc
    } else if dag.are_siblings(k, s) {
        Category::Sib
    } else {
        Category::Other
    }
}

/// Categorizes the novel annotation of protein `i` with `k` against every
/// term in `old_terms` (C_i). An empty C_i yields a single First record.
pub fn categorize(i: ProteinIdx, k: TermIdx, old_terms: &[TermIdx], dag: &OntologyDag) -> Vec<CategoryRecord> {
    if old_terms.is_empty() {
        return vec![CategoryRecord {
            protein: i,
            term: k,
            old_term: None,
            category: Category::First,
        }];
    }
    old_terms
        .iter()
        .map(|&s| CategoryRecord {
            protein: i,
            term: k,
            old_term: Some(s),
            category: pair_category(k, s, dag),
        })
        .collect()
}

/// Categorizes every (k, i ∈ V_np^k) pair. `novelty` must come from direct
/// matrices and `old_direct` is the older release's direct matrix.
pub fn categorize_all(novelty: &[NoveltySet], old_direct: &LabelMatrix, dag: &OntologyDag) -> Vec<CategoryRecord> {
    novelty
        .iter()
        .flat_map(|set| {
            set.proteins
                .iter()
                .flat_map(move |&i| categorize(i, set.term, old_direct.row(i), dag))
        })
        .collect()
}

/// Share of each category, in [`Category::ALL`] order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Proportions {
    #[serde(rename = "First")]
    pub first: f64,
    #[serde(rename = "Anc")]
    pub anc: f64,
    #[serde(rename = "Desc")]
    pub desc: f64,
    #[serde(rename = "Sib")]
    pub sib: f64,
    #[serde(rename = "Other")]
    pub other: f64,
}

impl Proportions {
    fn from_array(v: [f64; 5]) -> Self {
        Proportions {
            first: v[0],
            anc: v[1],
            desc: v[2],
            sib: v[3],
            other: v[4],
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.first, self.anc, self.desc, self.sib, self.other]
    }
}

/// Per-term category shares, averaged without weights across terms.
///
/// With `per_protein = false` every (i, s) pair counts once (a First record
/// counts as one pair). With `per_protein = true` every protein carries unit
/// weight, split evenly over its pairs.
pub fn category_proportions(records: &[CategoryRecord], per_protein: bool) -> Result<Proportions> {
    if records.is_empty() {
        return Err(Error::Domain("no category records".into()));
    }
    let mut by_term: BTreeMap<TermIdx, BTreeMap<ProteinIdx, Vec<Category>>> = BTreeMap::new();
    for r in records {
        by_term
            .entry(r.term)
            .or_default()
            .entry(r.protein)
            .or_default()
            .push(r.category);
    }
    let mut acc = [0.0; 5];
    for proteins in by_term.values() {
        let mut share = [0.0; 5];
        let mut total = 0.0;
        for cats in proteins.values() {
            let w = if per_protein { 1.0 / cats.len() as f64 } else { 1.0 };
            for c in cats {
                share[c.slot()] += w;
                total += w;
            }
        }
        for (a, s) in acc.iter_mut().zip(share) {
            *a += s / total;
        }
    }
    let terms = by_term.len() as f64;
    Ok(Proportions::from_array(acc.map(|a| a / terms)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankRecord {
    pub term: TermIdx,
    pub protein: ProteinIdx,
    pub old_term: TermIdx,
    pub rank: f64,
}

#[derive(Clone, Debug)]
pub struct RankAnalysis {
    pub branch: Branch,
    pub records: Vec<RankRecord>,
    /// Mean rank over each term's (i, s) pairs.
    pub term_means: Vec<(TermIdx, f64)>,
    /// Distribution of `term_means`.
    pub summary: DistributionSummary,
    /// Distribution of all pair ranks pooled together.
    pub pooled: DistributionSummary,
}

/// Normalized similarity ranks of the old terms s ∈ C_i (restricted to the
/// matrix branch) within the row of each novel term k, diagonal excluded.
pub fn rank_analysis(novelty: &[NoveltySet], old_direct: &LabelMatrix, matrix: &SimilarityMatrix, dag: &OntologyDag) -> Result<RankAnalysis> {
    let branch = matrix.branch;
    let mut records = Vec::new();
    let mut term_means = Vec::new();
    for set in novelty.iter().filter(|s| dag.branch(s.term) == Some(branch)) {
        let k = set.term;
        let diag = matrix
            .position(k)
            .ok_or_else(|| Error::Domain(format!("{} missing from similarity matrix", dag.id(k))))?;
        let mut off = matrix.row(k)?.to_vec();
        off.remove(diag);
        let start = records.len();
        for &i in &set.proteins {
            for &s in old_direct.row(i) {
                if dag.branch(s) != Some(branch) {
                    continue;
                }
                let j = matrix
                    .position(s)
                    .ok_or_else(|| Error::Domain(format!("{} missing from similarity matrix", dag.id(s))))?;
                debug_assert_ne!(j, diag, "a novel term is never among the old ones");
                records.push(RankRecord {
                    term: k,
                    protein: i,
                    old_term: s,
                    rank: crate::similarity::normalized_rank(&off, if j > diag { j - 1 } else { j }),
                });
            }
        }
        let mine = &records[start..];
        if !mine.is_empty() {
            term_means.push((k, mine.iter().map(|r| r.rank).sum::<f64>() / mine.len() as f64));
        }
    }
    if records.is_empty() {
        return Err(Error::Domain(format!(
            "no novel protein in {branch} has previous annotations in the branch"
        )));
    }
    let means: Vec<f64> = term_means.iter().map(|(_, m)| *m).collect();
    let pooled: Vec<f64> = records.iter().map(|r| r.rank).collect();
    Ok(RankAnalysis {
        branch,
        summary: DistributionSummary::from_values(&means)?,
        pooled: DistributionSummary::from_values(&pooled)?,
        records,
        term_means,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForkRecord {
    pub term: TermIdx,
    pub protein: ProteinIdx,
    pub old_term: TermIdx,
    pub case: Category,
    pub fork_term: TermIdx,
    pub distance: u32,
}

/// Locates the fork point q for a Sib or Other pair: the deepest shared
/// parent for siblings, the deepest common ancestor otherwise (dummy root
/// as last resort). Ties on level go to the smallest accession.
pub fn fork_point(k: TermIdx, s: TermIdx, case: Category, dag: &OntologyDag) -> Result<TermIdx> {
    match case {
        Category::Sib => dag
            .shared_parents(k, s)
            .into_iter()
            .max_by(|a, b| dag.level(*a).cmp(&dag.level(*b)).then(b.cmp(a)))
            .ok_or_else(|| Error::Domain("sibling pair without shared parent".into())),
        Category::Other => dag.deepest_fork_ancestor(k, s),
        _ => Err(Error::Domain(format!("{case} pairs do not create a fork"))),
    }
}

/// Longest-path distance from each Sib/Other old term to its fork point.
pub fn fork_analysis(records: &[CategoryRecord], dag: &OntologyDag) -> Result<Vec<ForkRecord>> {
    records
        .iter()
        .filter(|r| matches!(r.category, Category::Sib | Category::Other))
        .map(|r| {
            let s = r.old_term.expect("pair categories carry an old term");
            let q = fork_point(r.term, s, r.category, dag)?;
            Ok(ForkRecord {
                term: r.term,
                protein: r.protein,
                old_term: s,
                case: r.category,
                fork_term: q,
                distance: dag.longest_path_distance(q, s)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::tpr_close;
    use crate::ontology::DagBuilder;
    use crate::similarity::Measure;

    // root <- p <- {a, b}; root <- x; separate MF root m.
    fn dag() -> OntologyDag {
        let mut b = DagBuilder::new();
        for (id, n, br) in [
            ("GO:0000001", "root", Branch::Bp),
            ("GO:0000002", "p", Branch::Bp),
            ("GO:0000003", "a", Branch::Bp),
            ("GO:0000004", "b", Branch::Bp),
            ("GO:0000005", "x", Branch::Bp),
            ("GO:0000010", "m", Branch::Mf),
        ] {
            b.term(id, n, br).unwrap();
        }
        b.edge("GO:0000002", "GO:0000001")
            .edge("GO:0000003", "GO:0000002")
            .edge("GO:0000004", "GO:0000002")
            .edge("GO:0000005", "GO:0000001");
        b.build().unwrap()
    }

    const ROOT: TermIdx = TermIdx(0);
    const P: TermIdx = TermIdx(1);
    const A: TermIdx = TermIdx(2);
    const B: TermIdx = TermIdx(3);
    const X: TermIdx = TermIdx(4);
    const M: TermIdx = TermIdx(5);

    #[test]
    fn categories() {
        let dag = dag();
        assert_eq!(categorize(0, A, &[], &dag)[0].category, Category::First);
        assert_eq!(pair_category(A, B, &dag), Category::Sib);
        assert_eq!(pair_category(P, A, &dag), Category::Anc);
        assert_eq!(pair_category(A, P, &dag), Category::Desc);
        assert_eq!(pair_category(A, X, &dag), Category::Other);
        assert_eq!(pair_category(A, M, &dag), Category::Other);
        let recs = categorize(3, A, &[B, P, M], &dag);
        let cats: Vec<Category> = recs.iter().map(|r| r.category).collect();
        assert_eq!(cats, [Category::Sib, Category::Desc, Category::Other]);
    }

    fn rec(term: TermIdx, protein: ProteinIdx, category: Category) -> CategoryRecord {
        CategoryRecord {
            protein,
            term,
            old_term: Some(ROOT),
            category,
        }
    }

    #[test]
    fn proportions() {
        let only_first = categorize(0, A, &[], &dag());
        assert_eq!(category_proportions(&only_first, false).unwrap().first, 1.0);

        let pair = [rec(A, 0, Category::Sib), rec(A, 0, Category::Other)];
        let p = category_proportions(&pair, false).unwrap();
        assert_eq!((p.sib, p.other), (0.5, 0.5));

        // Two terms: [Sib] and [Anc, Anc, Other, Other] -> unweighted average.
        let recs = [
            rec(A, 0, Category::Sib),
            rec(B, 0, Category::Anc),
            rec(B, 1, Category::Anc),
            rec(B, 2, Category::Other),
            rec(B, 3, Category::Other),
        ];
        let p = category_proportions(&recs, false).unwrap();
        assert_eq!(p.as_array(), [0.0, 0.25, 0.0, 0.5, 0.25]);
        assert!((p.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(category_proportions(&[], false).is_err());

        // Per-protein weighting: protein 0 has {Anc, Other}, protein 1 has {Other}.
        let recs = [rec(A, 0, Category::Anc), rec(A, 0, Category::Other), rec(A, 1, Category::Other)];
        let p = category_proportions(&recs, true).unwrap();
        assert_eq!((p.anc, p.other), (0.25, 0.75));
    }

    #[test]
    fn fork_distances() {
        let dag = dag();
        let recs = vec![
            CategoryRecord {
                protein: 0,
                term: A,
                old_term: Some(B),
                category: Category::Sib,
            },
            CategoryRecord {
                protein: 0,
                term: A,
                old_term: Some(X),
                category: Category::Other,
            },
            CategoryRecord {
                protein: 0,
                term: A,
                old_term: Some(M),
                category: Category::Other,
            },
            CategoryRecord {
                protein: 0,
                term: A,
                old_term: Some(P),
                category: Category::Desc,
            },
        ];
        let forks = fork_analysis(&recs, &dag).unwrap();
        assert_eq!(forks.len(), 3);
        assert_eq!((forks[0].fork_term, forks[0].distance), (P, 1));
        assert_eq!((forks[1].fork_term, forks[1].distance), (ROOT, 1));
        assert!(dag.is_dummy(forks[2].fork_term));
        assert_eq!(forks[2].distance, (dag.level(M) + 1) as u32);
    }

    #[test]
    fn ranks_with_full_ties_sit_in_the_middle() {
        let dag = dag();
        // Every protein annotated to `x` only, so every Jaccard value in a's row is 0.
        let old = LabelMatrix::from_rows(dag.len(), vec![vec![X], vec![X]]);
        let closed = tpr_close(&old, &dag);
        let scope = [A, B, P, X];
        let mat = SimilarityMatrix::build(Measure::Jaccard, &closed, &dag, Branch::Bp, &scope).unwrap();
        let nov = vec![NoveltySet {
            term: A,
            proteins: vec![0, 1],
        }];
        let res = rank_analysis(&nov, &old, &mat, &dag).unwrap();
        // Off-diagonal row of a: [0, 0, 0] -> mid-rank 2 / 3.
        assert_eq!(res.summary.median, 2.0 / 3.0);
        assert_eq!(res.summary.mean, 2.0 / 3.0);
        assert_eq!(res.records.len(), 2);
    }
}
