use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Largest sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Population standard deviation (divisor `n`).
pub fn std_dev(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    Ok((samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// The first sample tends to be larger.
    Greater,
    /// The first sample tends to be smaller.
    Less,
}

impl FromStr for Alternative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "two_sided" => Ok(Self::TwoSided),
            "greater" => Ok(Self::Greater),
            "less" => Ok(Self::Less),
            other => Err(format!("unknown alternative {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UTestMethod {
    Exact,
    NormalApprox,
}

impl fmt::Display for UTestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::NormalApprox => "normal_approx",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UTestResult {
    /// U of the first sample.
    pub u_statistic: f64,
    pub p_value: f64,
    pub method: UTestMethod,
}

/// Mid-ranks of the pooled sample, doubled so they stay integral, plus the
/// tie group sizes.
pub(crate) fn doubled_ranks(pooled: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j+1 share the mid-rank (i + j + 2) / 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        ties.push((j - i + 1) as u64);
        i = j + 1;
    }
    (ranks, ties)
}

/// Mann-Whitney U test of `a` against `b`.
///
/// With both samples of at most [`EXACT_LIMIT`] values the p-value comes
/// from the exact permutation distribution of the rank sum, ties included.
/// Larger samples use the tie-corrected normal approximation with a
/// continuity correction of one half.
pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> Result<UTestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_ranks(&pooled);
    let w: u64 = ranks[..n1].iter().sum();
    let u1 = w as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    if n1 <= EXACT_LIMIT && n2 <= EXACT_LIMIT {
        let (le, ge) = exact_tails(&ranks, n1, w);
        let p = match alternative {
            Alternative::Greater => ge,
            Alternative::Less => le,
            Alternative::TwoSided => (2.0 * le.min(ge)).min(1.0),
        };
        return Ok(UTestResult {
            u_statistic: u1,
            p_value: p,
            method: UTestMethod::Exact,
        });
    }

    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let sigma = (f1 * f2 / 12.0 * ((n + 1.0) - tie_term)).sqrt();
    let mu = f1 * f2 / 2.0;
    let p = if sigma == 0.0 {
        1.0
    } else {
        let normal = Normal::standard();
        match alternative {
            Alternative::Greater => normal.sf((u1 - mu - 0.5) / sigma),
            Alternative::Less => normal.cdf((u1 - mu + 0.5) / sigma),
            Alternative::TwoSided => (2.0 * normal.sf(((u1 - mu).abs() - 0.5) / sigma)).min(1.0),
        }
    };
    Ok(UTestResult {
        u_statistic: u1,
        p_value: p.clamp(0.0, 1.0),
        method: UTestMethod::NormalApprox,
    })
}

/// `P(W <= w)` and `P(W >= w)` where `W` is the sum of `n1` of the given
/// doubled ranks chosen uniformly at random.
fn exact_tails(ranks: &[u64], n1: usize, w: u64) -> (f64, f64) {
    let max: u64 = ranks.iter().sum();
    let width = max as usize + 1;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u64; width]; n1 + 1];
    ways[0][0] = 1;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=n1).rev() {
            for s in (r..width).rev() {
                ways[k][s] += ways[k - 1][s - r];
            }
        }
    }
    let dist = &ways[n1];
    let total: u64 = dist.iter().sum();
    let w = w as usize;
    let le: u64 = dist[..=w].iter().sum();
    let ge: u64 = dist[w..].iter().sum();
    (le as f64 / total as f64, ge as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_dev_examples() {
        assert_eq!(std_dev(&[5.0, 5.0, 5.0]), Ok(0.0));
        assert_eq!(std_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), Ok(2.0));
        assert_eq!(std_dev(&[3.5]), Ok(0.0));
        assert_eq!(std_dev(&[]), Err(StatsError::EmptySample));
    }

    #[test]
    fn separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::Less).unwrap();
        assert_eq!(r.u_statistic, 0.0);
        assert!((r.p_value - 0.05).abs() < 1e-15);
        assert_eq!(r.method, UTestMethod::Exact);
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::TwoSided).unwrap();
        assert!((r.p_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(mann_whitney_u(&a, &a, Alternative::TwoSided).unwrap().p_value, 1.0);
        let big: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        let r = mann_whitney_u(&big, &big, Alternative::TwoSided).unwrap();
        assert_eq!(r.method, UTestMethod::NormalApprox);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn mid_ranks_are_doubled() {
        let (ranks, ties) = doubled_ranks(&[10.0, 20.0, 10.0, 30.0]);
        assert_eq!(ranks, [3, 6, 3, 8]);
        assert_eq!(ties, [2, 1, 1]);
    }

    #[test]
    fn normal_approximation_matches_reference() {
        // untied 21 vs 21, checked against the closed form
        let a: Vec<f64> = (0..21).map(f64::from).collect();
        let b: Vec<f64> = (10..31).map(|x| f64::from(x) + 0.5).collect();
        let r = mann_whitney_u(&a, &b, Alternative::TwoSided).unwrap();
        let u1 = r.u_statistic;
        // pairs with a > b: 11 beats 10.5, 12 beats two, ... 20 beats ten
        assert_eq!(u1, 55.0);
        let sigma = (21.0f64 * 21.0 * 43.0 / 12.0).sqrt();
        let z = ((u1 - 220.5).abs() - 0.5) / sigma;
        let want = 2.0 * Normal::standard().sf(z);
        assert!((r.p_value - want).abs() < 1e-12);
        assert!(mann_whitney_u(&[], &[1.0], Alternative::Less).is_err());
    }
}
