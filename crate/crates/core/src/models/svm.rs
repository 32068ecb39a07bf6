use serde::{Deserialize, Serialize};

use super::gbt::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Inverse regularisation strength.
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 500,
            learning_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Logistic link `sigmoid(a·margin + b)` fitted on training margins.
    pub platt_a: f64,
    pub platt_b: f64,
}

impl SvmModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.platt_a * self.margin(x) + self.platt_b)
    }
}

fn objective(w: &[f64], b: f64, x: &[Vec<f64>], s: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(s)
        .map(|(row, si)| {
            let m = b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
            (1.0 - si * m).max(0.0)
        })
        .sum();
    0.5 * lambda * w.iter().map(|a| a * a).sum::<f64>() + hinge / x.len() as f64
}

/// Full-batch subgradient descent on `λ/2·|w|² + mean hinge` with
/// `λ = 1/(C·n)` and step `lr/√t`; the best iterate seen is kept. Margins
/// are then mapped to probabilities with Platt scaling.
pub fn fit_svm(x: &[Vec<f64>], y: &[u8], params: &SvmParams) -> SvmModel {
    let n = y.len();
    let d = x.first().map_or(0, Vec::len);
    let lambda = 1.0 / (params.c * n as f64);
    let s: Vec<f64> = y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best = (objective(&w, b, x, &s, lambda), w.clone(), b);
    let mut grad = vec![0.0; d];
    for t in 1..=params.epochs {
        grad.iter_mut().zip(&w).for_each(|(g, wi)| *g = lambda * wi);
        let mut gb = 0.0;
        for (row, si) in x.iter().zip(&s) {
            let m = b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
            if si * m < 1.0 {
                for (g, v) in grad.iter_mut().zip(row) {
                    *g -= si * v / n as f64;
                }
                gb -= si / n as f64;
            }
        }
        let step = params.learning_rate / (t as f64).sqrt();
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= step * g;
        }
        b -= step * gb;
        let obj = objective(&w, b, x, &s, lambda);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }
    let (_, weights, bias) = best;
    let mut model = SvmModel {
        weights,
        bias,
        platt_a: 1.0,
        platt_b: 0.0,
    };
    let margins: Vec<f64> = x.iter().map(|r| model.margin(r)).collect();
    let (a, b) = platt(&margins, y);
    model.platt_a = a;
    model.platt_b = b;
    model
}

/// Platt's sigmoid fit with smoothed targets, by damped Newton iterations.
pub fn platt(margins: &[f64], y: &[u8]) -> (f64, f64) {
    let pos = y.iter().filter(|&&c| c == 1).count() as f64;
    let neg = y.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let t: Vec<f64> = y.iter().map(|&c| if c == 1 { hi } else { lo }).collect();
    let nll = |a: f64, b: f64| -> f64 {
        margins
            .iter()
            .zip(&t)
            .map(|(&m, &ti)| {
                let z = a * m + b;
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                softplus - ti * z
            })
            .sum()
    };
    let (mut a, mut b) = (1.0, ((pos + 1.0) / (neg + 1.0)).ln());
    let mut f = nll(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&m, &ti) in margins.iter().zip(&t) {
            let p = sigmoid(a * m + b);
            let r = p - ti;
            let w = p * (1.0 - p);
            ga += r * m;
            gb += r;
            haa += w * m * m;
            hab += w * m;
            hbb += w;
        }
        if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = if det > 0.0 {
            ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det)
        } else {
            (ga, gb)
        };
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a - step * da, b - step * db);
            let nf = nll(na, nb);
            if nf < f {
                a = na;
                b = nb;
                f = nf;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    // keep the link increasing in the margin
    (a.max(1e-6), b)
}
