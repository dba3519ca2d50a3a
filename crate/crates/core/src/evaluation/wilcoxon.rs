//! Two-sided Wilcoxon signed-rank test for paired samples.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by the exact distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Non-zero differences kept.
    pub n: usize,
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    pub p_value: f64,
    pub exact: bool,
    /// Every difference was zero; `p_value` is 1.
    pub degenerate: bool,
}

/// Non-zero differences x - y and their mid-ranks by absolute value.
fn signed_ranks(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite paired difference".into()));
    }
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut ranks = vec![0.0; d.len()];
    let mut i = 0;
    while i < d.len() {
        let mut j = i;
        while j + 1 < d.len() && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        ranks[i..=j].fill(mid);
        i = j + 1;
    }
    Ok((d, ranks))
}

fn w_plus(d: &[f64], ranks: &[f64]) -> f64 {
    d.iter().zip(ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum()
}

/// Exact two-sided p-value from the sign-flip distribution of W+ over
/// the given (possibly tied) ranks.
pub fn exact_p(ranks: &[f64], w: f64) -> f64 {
    // Mid-ranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w2 = (2.0 * w).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let lower: f64 = counts[..=w2].iter().sum::<f64>() / all;
    let upper: f64 = counts[w2..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
pub fn approx_p(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let mut j = i;
        while j + 1 < ranks.len() && ranks[j + 1] == ranks[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided test of x against y. Zero differences are dropped; the exact
/// distribution is used up to [`EXACT_MAX_N`] remaining pairs.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    let (d, ranks) = signed_ranks(x, y)?;
    if d.is_empty() {
        return Ok(WilcoxonResult {
            n: 0,
            w_plus: 0.0,
            p_value: 1.0,
            exact: true,
            degenerate: true,
        });
    }
    let w = w_plus(&d, &ranks);
    let exact = d.len() <= EXACT_MAX_N;
    let p_value = if exact { exact_p(&ranks, w) } else { approx_p(&ranks, w) };
    Ok(WilcoxonResult {
        n: d.len(),
        w_plus: w,
        p_value,
        exact,
        degenerate: false,
    })
}

/// Same as [`wilcoxon_signed_rank`] but always uses the normal approximation.
pub fn wilcoxon_signed_rank_approx(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    let (d, ranks) = signed_ranks(x, y)?;
    if d.is_empty() {
        return wilcoxon_signed_rank(x, y);
    }
    let w = w_plus(&d, &ranks);
    Ok(WilcoxonResult {
        n: d.len(),
        w_plus: w,
        p_value: approx_p(&ranks, w),
        exact: false,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_degenerate() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn six_positive_differences() {
        let x = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!(r.exact);
        assert_eq!(r.w_plus, 21.0);
        assert!((r.p_value - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn ties_use_mid_ranks() {
        let (d, ranks) = signed_ranks(&[1.0, -1.0, 2.0, 0.0], &[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn symmetric_in_arguments() {
        let x = [3.1, 2.0, 5.5, 1.0, 0.2, 7.0, 4.4];
        let y = [1.0, 2.5, 3.0, 1.5, 0.1, 2.0, 4.0];
        let a = wilcoxon_signed_rank(&x, &y).unwrap().p_value;
        let b = wilcoxon_signed_rank(&y, &x).unwrap().p_value;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn large_n_uses_approximation() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 1.01).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 7.3) % 13.0).collect();
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }
}
