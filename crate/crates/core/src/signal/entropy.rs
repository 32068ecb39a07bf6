//! Template-matching regularity measures with a tolerance relative to the
//! series' standard deviation.

use super::population_std;

#[inline]
fn within(a: &[f64], b: &[f64], r: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= r)
}

/// Sample entropy `-ln(A / B)`.
///
/// B counts pairs of distinct length-`m` templates within Chebyshev distance
/// `r = r_factor * std`, A the same pairs still matching at length `m + 1`.
/// Both use the first `N - m` templates. `None` when the series is constant,
/// too short, or either count is zero.
pub fn sample_entropy(series: &[f64], m: usize, r_factor: f64) -> Option<f64> {
    let n = series.len();
    if m == 0 || n < m + 2 {
        return None;
    }
    let r = r_factor * population_std(series);
    if !(r > 0.0) {
        return None;
    }
    let templates = n - m;
    let mut b = 0u64;
    let mut a = 0u64;
    for i in 0..templates {
        for j in (i + 1)..templates {
            if within(&series[i..i + m], &series[j..j + m], r) {
                b += 1;
                if (series[i + m] - series[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return None;
    }
    Some(-(a as f64 / b as f64).ln())
}

/// Approximate entropy `Phi(m) - Phi(m + 1)`, self-matches included.
///
/// A constant series has every template matching every other and gives 0.
pub fn approximate_entropy(series: &[f64], m: usize, r_factor: f64) -> Option<f64> {
    let n = series.len();
    if m == 0 || n < m + 2 {
        return None;
    }
    let r = r_factor * population_std(series);
    Some(phi(series, m, r) - phi(series, m + 1, r))
}

fn phi(series: &[f64], m: usize, r: f64) -> f64 {
    let count = series.len() - m + 1;
    let mut total = 0.0;
    for i in 0..count {
        let ti = &series[i..i + m];
        let matches = (0..count)
            .filter(|&j| within(ti, &series[j..j + m], r))
            .count();
        total += (matches as f64 / count as f64).ln();
    }
    total / count as f64
}
