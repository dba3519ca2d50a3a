//! Term-term similarity (Lin, Jaccard) over a TPR-closed label matrix.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotations::LabelMatrix;
use crate::error::{Error, Result};
use crate::ontology::{intersect_sorted, Branch, OntologyDag, TermIdx};

const MAGIC: &[u8; 8] = b"NEGSIMv1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Lin,
    Jaccard,
}

impl Measure {
    fn tag(self) -> u8 {
        match self {
            Measure::Lin => 1,
            Measure::Jaccard => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Measure> {
        match tag {
            1 => Some(Measure::Lin),
            2 => Some(Measure::Jaccard),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Lin => "lin",
            Measure::Jaccard => "jaccard",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lin" => Ok(Measure::Lin),
            "jaccard" => Ok(Measure::Jaccard),
            _ => Err(Error::Domain(format!("unknown similarity measure {s:?}"))),
        }
    }
}

/// Lin similarity from the three frequencies involved.
///
/// `nu_ma` is the lowest frequency among the common ancestors (or self) of
/// the two terms; pass 1.0 when they only meet at the dummy root.
pub fn lin_from_frequencies(nu_k: f64, nu_r: f64, nu_ma: f64, same_term: bool) -> f64 {
    if nu_k <= 0.0 || nu_r <= 0.0 {
        return 0.0;
    }
    if same_term {
        return 1.0;
    }
    let denom = nu_k.ln() + nu_r.ln();
    if denom == 0.0 {
        return 0.0;
    }
    (2.0 * nu_ma.ln() / denom).clamp(0.0, 1.0)
}

fn frequency(closed: &LabelMatrix, t: TermIdx) -> f64 {
    match closed.annotated_proteins() {
        0 => 0.0,
        n => closed.col(t).len() as f64 / n as f64,
    }
}

/// Lin similarity between `k` and `r` with frequencies taken from `closed`.
pub fn lin_similarity(k: TermIdx, r: TermIdx, closed: &LabelMatrix, dag: &OntologyDag) -> f64 {
    let common = intersect_sorted(&dag.ancestors_or_self(k), &dag.ancestors_or_self(r));
    let nu_ma = common
        .iter()
        .map(|&a| frequency(closed, a))
        .fold(1.0_f64, f64::min);
    lin_from_frequencies(frequency(closed, k), frequency(closed, r), nu_ma, k == r)
}

/// Jaccard index of the positive sets of `k` and `r`; 0 when both are empty.
pub fn jaccard_similarity(k: TermIdx, r: TermIdx, closed: &LabelMatrix) -> f64 {
    let a = closed.col(k);
    let b = closed.col(r);
    let inter = intersect_sorted(a, b).len();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Terms of `branch` annotated in at least one of the given matrices.
pub fn annotated_scope(dag: &OntologyDag, branch: Branch, matrices: &[&LabelMatrix]) -> Vec<TermIdx> {
    dag.terms_in(branch)
        .filter(|&t| matrices.iter().any(|m| !m.col(t).is_empty()))
        .collect()
}

/// Dense symmetric m×m similarity matrix over a fixed set of terms.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub measure: Measure,
    pub branch: Branch,
    terms: Vec<TermIdx>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds the matrix over `scope` (terms of `branch`, any order).
    pub fn build(
        measure: Measure,
        closed: &LabelMatrix,
        dag: &OntologyDag,
        branch: Branch,
        scope: &[TermIdx],
    ) -> Result<Self> {
        let mut terms = scope.to_vec();
        terms.sort_unstable();
        terms.dedup();
        if terms.is_empty() {
            return Err(Error::Domain(format!("branch {branch} has no terms in scope")));
        }
        if let Some(&t) = terms.iter().find(|&&t| dag.branch(t) != Some(branch)) {
            return Err(Error::Domain(format!("{} is not a {branch} term", dag.id(t))));
        }
        let values = match measure {
            Measure::Jaccard => jaccard_rows(closed, dag, &terms),
            Measure::Lin => lin_rows(closed, dag, &terms),
        };
        Ok(SimilarityMatrix {
            measure,
            branch,
            terms,
            values,
        })
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[TermIdx] {
        &self.terms
    }

    pub fn position(&self, t: TermIdx) -> Option<usize> {
        self.terms.binary_search(&t).ok()
    }

    pub fn contains(&self, t: TermIdx) -> bool {
        self.position(t).is_some()
    }

    fn pos_or_err(&self, t: TermIdx) -> Result<usize> {
        self.position(t).ok_or_else(|| {
            Error::Domain(format!("term index {} is not in the {} matrix", t.0, self.branch))
        })
    }

    pub fn row(&self, k: TermIdx) -> Result<&[f64]> {
        let i = self.pos_or_err(k)?;
        let m = self.m();
        Ok(&self.values[i * m..(i + 1) * m])
    }

    pub fn get(&self, k: TermIdx, s: TermIdx) -> Result<f64> {
        let i = self.pos_or_err(k)?;
        let j = self.pos_or_err(s)?;
        Ok(self.values[i * self.m() + j])
    }

    /// Mid-rank of φ(k, s) among the off-diagonal entries of row k, divided
    /// by their count m - 1. See [`normalized_rank`].
    pub fn normalized_rank(&self, k: TermIdx, s: TermIdx) -> Result<f64> {
        if k == s {
            return Err(Error::Domain("the diagonal is not ranked".into()));
        }
        let i = self.pos_or_err(k)?;
        let j = self.pos_or_err(s)?;
        let row = self.row(k)?;
        let off: Vec<f64> = row.iter().enumerate().filter(|&(c, _)| c != i).map(|(_, v)| *v).collect();
        Ok(normalized_rank(&off, if j > i { j - 1 } else { j }))
    }

    /// Terms whose similarity to `k` is strictly above the K-th quantile of row k.
    pub fn terms_above_quantile(&self, k: TermIdx, quantile: f64) -> Result<Vec<TermIdx>> {
        let row = self.row(k)?;
        let thr = quantile_threshold(row, quantile)?;
        Ok(row
            .iter()
            .zip(&self.terms)
            .filter(|(v, _)| **v > thr)
            .map(|(_, t)| *t)
            .collect())
    }

    pub fn max_asymmetry(&self) -> f64 {
        let m = self.m();
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in i + 1..m {
                worst = worst.max((self.values[i * m + j] - self.values[j * m + i]).abs());
            }
        }
        worst
    }

    /// Rounds every value through `f32`, the precision of the binary cache.
    pub fn round_to_f32(&mut self) {
        for v in &mut self.values {
            *v = *v as f32 as f64;
        }
    }

    /// Binary layout: 8-byte magic, measure tag (u8), m (u32 LE), then m×m
    /// row-major f32 LE values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[self.measure.tag()])?;
        w.write_all(&(self.m() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for &v in &self.values {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a matrix written by [`write_binary`](Self::write_binary). The
    /// term list is not stored in the file and must be supplied by the caller.
    pub fn read_binary<R: Read>(mut r: R, branch: Branch, terms: Vec<TermIdx>) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Cache("bad magic header".into()));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let measure = Measure::from_tag(tag[0])
            .ok_or_else(|| Error::Cache(format!("unknown measure tag {}", tag[0])))?;
        let mut m = [0u8; 4];
        r.read_exact(&mut m)?;
        let m = u32::from_le_bytes(m) as usize;
        if m != terms.len() {
            return Err(Error::Cache(format!("matrix has {m} terms, expected {}", terms.len())));
        }
        let mut raw = vec![0u8; m * m * 4];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(SimilarityMatrix {
            measure,
            branch,
            terms,
            values,
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W, dag: &OntologyDag) -> Result<()> {
        write!(w, "term")?;
        for &t in &self.terms {
            write!(w, ",{}", dag.id(t))?;
        }
        writeln!(w)?;
        let m = self.m();
        for (i, &t) in self.terms.iter().enumerate() {
            write!(w, "{}", dag.id(t))?;
            for v in &self.values[i * m..(i + 1) * m] {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn jaccard_rows(closed: &LabelMatrix, dag: &OntologyDag, terms: &[TermIdx]) -> Vec<f64> {
    let m = terms.len();
    let mut pos = vec![u32::MAX; dag.len()];
    for (j, t) in terms.iter().enumerate() {
        pos[t.ix()] = j as u32;
    }
    let sizes: Vec<usize> = terms.iter().map(|&t| closed.col(t).len()).collect();
    let rows: Vec<Vec<f64>> = terms
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            // Co-occurrence counts via the rows of k's positives.
            let mut shared = vec![0usize; m];
            for &p in closed.col(k) {
                for t in closed.row(p) {
                    let j = pos[t.ix()];
                    if j != u32::MAX {
                        shared[j as usize] += 1;
                    }
                }
            }
            (0..m)
                .map(|j| {
                    let union = sizes[i] + sizes[j] - shared[j];
                    if union == 0 {
                        0.0
                    } else {
                        shared[j] as f64 / union as f64
                    }
                })
                .collect()
        })
        .collect();
    rows.concat()
}

fn lin_rows(closed: &LabelMatrix, dag: &OntologyDag, terms: &[TermIdx]) -> Vec<f64> {
    let nu: Vec<f64> = (0..dag.len() as u32).map(|t| frequency(closed, TermIdx(t))).collect();
    let lineage: Vec<Vec<TermIdx>> = terms.iter().map(|&t| dag.ancestors_or_self(t)).collect();
    let rows: Vec<Vec<f64>> = (0..terms.len())
        .into_par_iter()
        .map(|i| {
            (0..terms.len())
                .map(|j| {
                    let nu_ma = min_common_frequency(&lineage[i], &lineage[j], &nu);
                    lin_from_frequencies(nu[terms[i].ix()], nu[terms[j].ix()], nu_ma, i == j)
                })
                .collect()
        })
        .collect();
    rows.concat()
}

fn min_common_frequency(a: &[TermIdx], b: &[TermIdx], nu: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut best = 1.0_f64;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                best = best.min(nu[a[i].ix()]);
                i += 1;
                j += 1;
            }
        }
    }
    best
}

/// Position of `row[idx]` in the increasingly sorted row, divided by the row
/// length. Tied values share the mean of the positions they occupy, so the
/// largest value scores 1 and higher always means more similar.
pub fn normalized_rank(row: &[f64], idx: usize) -> f64 {
    let x = row[idx];
    let below = row.iter().filter(|&&v| v < x).count();
    let tied = row.iter().filter(|&&v| v == x).count();
    (below as f64 + (tied as f64 + 1.0) / 2.0) / row.len() as f64
}

/// Lower empirical K-quantile: the value at 1-based position ⌈K·m⌉ of the
/// increasingly sorted row.
pub fn quantile_threshold(row: &[f64], quantile: f64) -> Result<f64> {
    if row.is_empty() {
        return Err(Error::Domain("quantile of an empty row".into()));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Domain(format!("quantile {quantile} outside (0, 1)")));
    }
    let m = row.len();
    let mut sorted = row.to_vec();
    sorted.sort_by(f64::total_cmp);
    // K·m can land a hair above an integer in floating point (0.95·100).
    let pos = ((quantile * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    Ok(sorted[pos - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::tpr_close;
    use crate::ontology::DagBuilder;

    #[test]
    fn lin_reference_values() {
        assert_eq!(lin_from_frequencies(0.3, 0.3, 0.3, true), 1.0);
        assert_eq!(lin_from_frequencies(0.3, 0.2, 1.0, false), 0.0);
        // log(0.2)/log(0.1), evaluated independently to 0.69897000433601880479
        let v = lin_from_frequencies(0.1, 0.1, 0.2, false);
        assert!((v - 0.698_970_004_336_018_8).abs() < 1e-12, "{v}");
    }

    #[test]
    fn lin_degenerate_cases() {
        assert_eq!(lin_from_frequencies(0.0, 0.5, 0.5, false), 0.0);
        assert_eq!(lin_from_frequencies(0.0, 0.0, 1.0, true), 0.0);
        assert_eq!(lin_from_frequencies(1.0, 1.0, 1.0, true), 1.0);
        assert_eq!(lin_from_frequencies(1.0, 1.0, 1.0, false), 0.0);
    }

    #[test]
    fn jaccard_counts() {
        let rows = vec![
            vec![TermIdx(0), TermIdx(1)],
            vec![TermIdx(0), TermIdx(1)],
            vec![TermIdx(0)],
            vec![TermIdx(1)],
            vec![TermIdx(0)],
            vec![TermIdx(2)],
        ];
        let m = LabelMatrix::from_rows(4, rows);
        assert!((jaccard_similarity(TermIdx(0), TermIdx(1), &m) - 0.4).abs() < 1e-15);
        assert_eq!(jaccard_similarity(TermIdx(0), TermIdx(0), &m), 1.0);
        assert_eq!(jaccard_similarity(TermIdx(0), TermIdx(2), &m), 0.0);
        assert_eq!(jaccard_similarity(TermIdx(3), TermIdx(3), &m), 0.0);
    }

    #[test]
    fn rank_examples() {
        let row: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(normalized_rank(&row, 9), 1.0);
        assert_eq!(normalized_rank(&row, 0), 0.1);
        assert_eq!(normalized_rank(&[0.0, 0.0, 0.0, 0.5], 1), 0.5);
    }

    #[test]
    fn quantile_examples() {
        let row: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(quantile_threshold(&row, 0.9).unwrap(), 0.8);
        assert_eq!(quantile_threshold(&[0.3; 7], 0.42).unwrap(), 0.3);
        assert_eq!(quantile_threshold(&[0.7], 0.5).unwrap(), 0.7);
        let hundred: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(quantile_threshold(&hundred, 0.95).unwrap(), 94.0);
        assert!(quantile_threshold(&row, 1.0).is_err());
        assert!(quantile_threshold(&row, 0.0).is_err());
        assert!(quantile_threshold(&[], 0.5).is_err());
    }

    fn toy() -> (OntologyDag, LabelMatrix) {
        let mut b = DagBuilder::new();
        for (id, n) in [("GO:0000001", "a"), ("GO:0000002", "b"), ("GO:0000003", "c")] {
            b.term(id, n, Branch::Bp).unwrap();
        }
        b.edge("GO:0000002", "GO:0000001").edge("GO:0000003", "GO:0000001");
        let dag = b.build().unwrap();
        let direct = LabelMatrix::from_rows(
            3,
            vec![vec![TermIdx(1)], vec![TermIdx(1), TermIdx(2)], vec![TermIdx(2)], vec![TermIdx(0)]],
        );
        let closed = tpr_close(&direct, &dag);
        (dag, closed)
    }

    #[test]
    fn matrix_matches_pairwise_calls() {
        let (dag, closed) = toy();
        let scope: Vec<TermIdx> = dag.terms().collect();
        for measure in [Measure::Lin, Measure::Jaccard] {
            let mat = SimilarityMatrix::build(measure, &closed, &dag, Branch::Bp, &scope).unwrap();
            assert_eq!(mat.max_asymmetry(), 0.0);
            for &k in &scope {
                for &r in &scope {
                    let expect = match measure {
                        Measure::Lin => lin_similarity(k, r, &closed, &dag),
                        Measure::Jaccard => jaccard_similarity(k, r, &closed),
                    };
                    assert_eq!(mat.get(k, r).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn one_term_branch() {
        let mut b = DagBuilder::new();
        b.term("GO:0000001", "a", Branch::Cc).unwrap();
        let dag = b.build().unwrap();
        let annotated = LabelMatrix::from_rows(1, vec![vec![TermIdx(0)]]);
        let empty = LabelMatrix::from_rows(1, vec![vec![]]);
        for measure in [Measure::Lin, Measure::Jaccard] {
            let m = SimilarityMatrix::build(measure, &annotated, &dag, Branch::Cc, &[TermIdx(0)]).unwrap();
            assert_eq!(m.row(TermIdx(0)).unwrap(), &[1.0]);
            let m = SimilarityMatrix::build(measure, &empty, &dag, Branch::Cc, &[TermIdx(0)]).unwrap();
            assert_eq!(m.row(TermIdx(0)).unwrap(), &[0.0]);
        }
    }

    #[test]
    fn binary_round_trip_at_f32_precision() {
        let (dag, closed) = toy();
        let scope: Vec<TermIdx> = dag.terms().collect();
        let mut mat = SimilarityMatrix::build(Measure::Lin, &closed, &dag, Branch::Bp, &scope).unwrap();
        let mut buf = Vec::new();
        mat.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 1 + 4 + 9 * 4);
        let back = SimilarityMatrix::read_binary(&buf[..], Branch::Bp, scope.clone()).unwrap();
        mat.round_to_f32();
        assert_eq!(back, mat);
        assert!(SimilarityMatrix::read_binary(&buf[..], Branch::Bp, scope[..2].to_vec()).is_err());
        assert!(SimilarityMatrix::read_binary(&b"garbage!"[..], Branch::Bp, scope).is_err());
    }

    #[test]
    fn terms_from_other_branches_rejected() {
        let (dag, closed) = toy();
        assert!(SimilarityMatrix::build(Measure::Lin, &closed, &dag, Branch::Mf, &[TermIdx(0)]).is_err());
        assert!(SimilarityMatrix::build(Measure::Lin, &closed, &dag, Branch::Bp, &[]).is_err());
    }
}
