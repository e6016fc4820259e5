//! Two-sided Mann-Whitney-Wilcoxon rank-sum test.

use crate::error::{Error, Result};

/// Groups smaller than this use the exact null distribution.
pub const EXACT_BELOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RanksumResult {
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

impl RanksumResult {
    pub fn significant(&self) -> bool {
        self.p < 0.05
    }
}

/// Twice the mid-ranks of the pooled sample (integers even with ties), the
/// first `a.len()` belonging to `a`, and the tie-group sizes.
fn doubled_ranks(a: &[f64], b: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1) + (j+1)) / 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Invalid("NaN score".into()));
    }
    Ok(())
}

fn u_statistic(ranks: &[u64], n1: usize) -> f64 {
    let r1: u64 = ranks[..n1].iter().sum();
    r1 as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0
}

/// Exact two-sided p from the permutation distribution of the (mid-)rank
/// sum, counted by dynamic programming over subsets of the smaller group's
/// size.
pub fn ranksum_exact(a: &[f64], b: &[f64]) -> Result<RanksumResult> {
    check(a, b)?;
    let (ranks, _) = doubled_ranks(a, b);
    let (n1, n2) = (a.len(), b.len());
    let u = u_statistic(&ranks, n1);
    let k = n1.min(n2);
    let max_sum: u64 = {
        let mut r = ranks.clone();
        r.sort_unstable();
        r[r.len() - k..].iter().sum()
    };
    let width = max_sum as usize + 1;
    // ways[j * width + s]: subsets of size j with doubled rank sum s
    let mut ways = vec![0f64; (k + 1) * width];
    ways[0] = 1.0;
    for &r in &ranks {
        let r = r as usize;
        for j in (1..=k).rev() {
            let (lower, upper) = ways.split_at_mut(j * width);
            let src = &lower[(j - 1) * width..];
            for s in (r..width).rev() {
                upper[s] += src[s - r];
            }
        }
    }
    let row = &ways[k * width..];
    let total: f64 = row.iter().sum();
    // U of a subset of size k with doubled sum s, measured from its mean
    let mean = (n1 * n2) as f64 / 2.0;
    let observed = (u - mean).abs();
    let hits: f64 = row
        .iter()
        .enumerate()
        .filter(|&(s, &w)| w > 0.0 && ((s as f64 / 2.0 - (k * (k + 1)) as f64 / 2.0) - mean).abs() >= observed - 1e-9)
        .map(|(_, &w)| w)
        .sum();
    Ok(RanksumResult {
        u,
        p: (hits / total).min(1.0),
        exact: true,
    })
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn ranksum_normal(a: &[f64], b: &[f64]) -> Result<RanksumResult> {
    check(a, b)?;
    let (ranks, ties) = doubled_ranks(a, b);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let u = u_statistic(&ranks, a.len());
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0)).max(1.0);
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - n1 * n2 / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(RanksumResult { u, p, exact: false })
}

/// Exact when either group has fewer than [`EXACT_BELOW`] values, normal
/// approximation otherwise.
pub fn ranksum_test(a: &[f64], b: &[f64]) -> Result<RanksumResult> {
    if a.len().min(b.len()) < EXACT_BELOW {
        ranksum_exact(a, b)
    } else {
        ranksum_normal(a, b)
    }
}
