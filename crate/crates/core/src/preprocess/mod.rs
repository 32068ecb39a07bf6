//! Fold-local imputation, min-max scaling and SMOTE.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Row-major dense matrix.
pub type Dense = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeFit {
    pub means: Vec<f64>,
    /// Columns with no present training value; filled with 0.
    pub all_missing: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFit {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    pub impute: ImputeFit,
    pub scale: ScaleFit,
    pub fit_row_ids: Vec<usize>,
}

pub fn fit_impute(train: &[Vec<Option<f64>>], width: usize) -> ImputeFit {
    let mut sums = vec![0.0; width];
    let mut counts = vec![0usize; width];
    for row in train {
        for (j, v) in row.iter().enumerate() {
            if let Some(v) = v {
                sums[j] += v;
                counts[j] += 1;
            }
        }
    }
    ImputeFit {
        means: sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect(),
        all_missing: counts.iter().map(|&c| c == 0).collect(),
    }
}

pub fn apply_impute(fit: &ImputeFit, rows: &[Vec<Option<f64>>]) -> Dense {
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(&fit.means)
                .map(|(v, m)| v.unwrap_or(*m))
                .collect()
        })
        .collect()
}

/// Fills missing cells of both splits with training column means.
pub fn fit_apply_impute(
    train: &[Vec<Option<f64>>],
    test: &[Vec<Option<f64>>],
    width: usize,
) -> (Dense, Dense, ImputeFit) {
    let fit = fit_impute(train, width);
    (apply_impute(&fit, train), apply_impute(&fit, test), fit)
}

pub fn fit_scale(train: &[Vec<f64>], width: usize) -> ScaleFit {
    let mut mins = vec![f64::INFINITY; width];
    let mut maxs = vec![f64::NEG_INFINITY; width];
    for row in train {
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    for j in 0..width {
        if !mins[j].is_finite() {
            mins[j] = 0.0;
            maxs[j] = 0.0;
        }
    }
    ScaleFit { mins, maxs }
}

/// `(x − min)/(max − min)` clipped to `[0, 1]`; constant columns map to 0.
pub fn apply_scale(fit: &ScaleFit, rows: &[Vec<f64>]) -> Dense {
    rows.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let range = fit.maxs[j] - fit.mins[j];
                    if range > 0.0 {
                        ((v - fit.mins[j]) / range).clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn fit_apply_minmax(train: &[Vec<f64>], test: &[Vec<f64>], width: usize) -> (Dense, Dense, ScaleFit) {
    let fit = fit_scale(train, width);
    (apply_scale(&fit, train), apply_scale(&fit, test), fit)
}

/// Imputation then scaling, both fitted on `train` only.
pub fn fit_transform(
    train: &[Vec<Option<f64>>],
    test: &[Vec<Option<f64>>],
    width: usize,
    fit_row_ids: Vec<usize>,
) -> (Dense, Dense, FittedTransform) {
    let (train_i, test_i, impute) = fit_apply_impute(train, test, width);
    let (train_s, test_s, scale) = fit_apply_minmax(&train_i, &test_i, width);
    (
        train_s,
        test_s,
        FittedTransform {
            impute,
            scale,
            fit_row_ids,
        },
    )
}

impl FittedTransform {
    pub fn apply(&self, rows: &[Vec<Option<f64>>]) -> Dense {
        apply_scale(&self.scale, &apply_impute(&self.impute, rows))
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Oversamples the minority class to the majority count. Originals come
/// first in input order, synthetic rows are appended. Each synthetic row is
/// `x + u·(nb − x)` for a random minority row `x`, one of its `k` nearest
/// minority neighbours `nb` and `u ~ U[0, 1)`.
pub fn smote(x: &[Vec<f64>], y: &[u8], k: usize, seed: u64) -> Result<(Dense, Vec<u8>)> {
    let ones = y.iter().filter(|&&c| c == 1).count();
    let zeros = y.len() - ones;
    let mut out_x = x.to_vec();
    let mut out_y = y.to_vec();
    if ones == zeros {
        return Ok((out_x, out_y));
    }
    let minority_class = u8::from(ones < zeros);
    let minority: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_class).collect();
    let m = minority.len();
    if m < 2 {
        return Err(Error::InsufficientMinority(m));
    }
    let k = k.clamp(1, m - 1);
    let neighbours: Vec<Vec<usize>> = minority
        .iter()
        .map(|&i| {
            let mut d: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (squared_distance(&x[i], &x[j]), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let needed = ones.max(zeros) - m;
    let mut rng = rng::seeded(seed);
    for _ in 0..needed {
        let a = rng.random_range(0..m);
        let nb = neighbours[a][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let base = &x[minority[a]];
        let row = base
            .iter()
            .zip(&x[nb])
            .map(|(p, q)| p + u * (q - p))
            .collect();
        out_x.push(row);
        out_y.push(minority_class);
    }
    Ok((out_x, out_y))
}
