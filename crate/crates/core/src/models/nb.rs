use serde::{Deserialize, Serialize};

pub const DEFAULT_VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub log_prior: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub fn fit_nb(x: &[Vec<f64>], y: &[u8], var_floor: f64) -> NbModel {
    let d = x.first().map_or(0, Vec::len);
    let n = y.len() as f64;
    let mut counts = [0usize; 2];
    let mut means = [vec![0.0; d], vec![0.0; d]];
    for (row, &c) in x.iter().zip(y) {
        let c = usize::from(c);
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..2 {
        for m in &mut means[c] {
            *m /= counts[c] as f64;
        }
    }
    let mut variances = [vec![0.0; d], vec![0.0; d]];
    for (row, &c) in x.iter().zip(y) {
        let c = usize::from(c);
        for j in 0..d {
            variances[c][j] += (row[j] - means[c][j]).powi(2);
        }
    }
    for c in 0..2 {
        for v in &mut variances[c] {
            *v = (*v / counts[c] as f64).max(var_floor);
        }
    }
    NbModel {
        log_prior: [
            (counts[0] as f64 / n).ln(),
            (counts[1] as f64 / n).ln(),
        ],
        means,
        variances,
    }
}

impl NbModel {
    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let mut acc = self.log_prior[c];
        for ((v, m), s2) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
            acc -= 0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m).powi(2) / s2);
        }
        acc
    }

    /// Posterior probability of class 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        let l0 = self.log_joint(0, x);
        let l1 = self.log_joint(1, x);
        super::gbt::sigmoid(l1 - l0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> (Vec<Vec<f64>>, Vec<u8>) {
        let offsets = [-0.1, -0.05, 0.0, 0.05, 0.1];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for o in offsets {
            x.push(vec![0.3 + o]);
            y.push(0);
            x.push(vec![0.7 + o]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn midpoint_is_even_odds() {
        let (x, y) = symmetric();
        let m = fit_nb(&x, &y, DEFAULT_VAR_FLOOR);
        assert!((m.score(&[0.5]) - 0.5).abs() < 1e-6);
        assert!(m.score(&[0.55]) > 0.5 && m.score(&[0.45]) < 0.5);
    }

    #[test]
    fn class_swap_mirrors_score() {
        let (x, y) = symmetric();
        let swapped: Vec<u8> = y.iter().map(|c| 1 - c).collect();
        let a = fit_nb(&x, &y, DEFAULT_VAR_FLOOR);
        let b = fit_nb(&x, &swapped, DEFAULT_VAR_FLOOR);
        for v in [0.0, 0.2, 0.41, 0.5, 0.66, 1.0] {
            assert!((a.score(&[v]) + b.score(&[v]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_floor_applies_to_constant_feature() {
        let x = vec![vec![0.5, 0.0], vec![0.5, 1.0], vec![0.5, 0.1], vec![0.5, 0.9]];
        let m = fit_nb(&x, &[0, 1, 0, 1], DEFAULT_VAR_FLOOR);
        assert_eq!(m.variances[0][0], DEFAULT_VAR_FLOOR);
        assert!(m.score(&[0.5, 0.95]).is_finite());
    }
}
