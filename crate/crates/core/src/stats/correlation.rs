use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use crate::rng;

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

/// Two-sided p for a correlation coefficient via the t approximation.
pub fn correlation_p(rho: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    student_t_two_sided(t, df)
}

/// Spearman's rho with a t-approximation p-value. Needs three pairs and
/// non-constant inputs.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<Correlation> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return None;
    }
    let rho = pearson(&mid_ranks(x), &mid_ranks(y))?;
    Some(Correlation {
        rho,
        p: correlation_p(rho, n),
        n,
    })
}

/// Spearman over pairs where both sides are present.
pub fn spearman_complete(x: &[Option<f64>], y: &[Option<f64>]) -> Option<Correlation> {
    let (a, b): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| a.zip(*b))
        .unzip();
    spearman(&a, &b)
}

/// Spearman with a permutation p-value: `(1 + #{|rho*| ≥ |rho|}) / (1 + B)`.
pub fn spearman_permutation(
    x: &[f64],
    y: &[f64],
    permutations: usize,
    seed: u64,
) -> Option<Correlation> {
    let observed = spearman(x, y)?;
    let rx = mid_ranks(x);
    let mut ry = mid_ranks(y);
    let mut rng = rng::seeded(seed);
    let mut extreme = 0usize;
    for _ in 0..permutations {
        ry.shuffle(&mut rng);
        let rho = pearson(&rx, &ry).unwrap_or(0.0);
        if rho.abs() >= observed.rho.abs() - 1e-12 {
            extreme += 1;
        }
    }
    Some(Correlation {
        p: (1 + extreme) as f64 / (1 + permutations) as f64,
        ..observed
    })
}
