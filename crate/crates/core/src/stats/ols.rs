use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use crate::labels::Position;

/// Relative column norm below which a column is treated as linearly dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Indices of the design columns that were estimable.
    pub columns: Vec<usize>,
    pub dropped: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Covariance of `coefficients`, row-major.
    pub covariance: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub df: usize,
    pub sigma2: f64,
}

impl OlsFit {
    pub fn std_error(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }

    /// Estimate, standard error and two-sided p for the contrast `c·β`.
    pub fn contrast(&self, c: &[f64]) -> (f64, f64, Option<f64>) {
        let estimate: f64 = c.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum();
        let mut var = 0.0;
        for (i, ci) in c.iter().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                var += ci * cj * self.covariance[i][j];
            }
        }
        let se = var.max(0.0).sqrt();
        (estimate, se, t_p_value(estimate, se, self.df))
    }
}

fn t_p_value(estimate: f64, se: f64, df: usize) -> Option<f64> {
    if df == 0 {
        return None;
    }
    if se == 0.0 {
        return Some(if estimate == 0.0 { 1.0 } else { 0.0 });
    }
    Some(student_t_two_sided(estimate / se, df as f64))
}

/// Least squares through modified Gram-Schmidt QR. Columns whose residual
/// norm after orthogonalisation falls below `RANK_TOL` of their original norm
/// are dropped; the fit is over the remaining columns.
pub fn ols(design: &[Vec<f64>], y: &[f64]) -> Option<OlsFit> {
    let n = y.len();
    if n == 0 || design.len() != n {
        return None;
    }
    let p = design[0].len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut columns = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..p {
        let mut v: Vec<f64> = design.iter().map(|row| row[j]).collect();
        let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut coeffs = Vec::with_capacity(q.len());
        for qk in &q {
            let d: f64 = qk.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(qk) {
                *vi -= d * qi;
            }
            coeffs.push(d);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm0 == 0.0 || norm <= RANK_TOL * norm0 {
            dropped.push(j);
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        coeffs.push(norm);
        q.push(v);
        r.push(coeffs);
        columns.push(j);
    }
    let k = q.len();
    if k == 0 {
        return None;
    }
    // r[j] holds column j of the upper-triangular R
    let rij = |i: usize, j: usize| if i <= j { r[j][i] } else { 0.0 };
    let qty: Vec<f64> = q
        .iter()
        .map(|qk| qk.iter().zip(y).map(|(a, b)| a * b).sum())
        .collect();
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in i + 1..k {
            s -= rij(i, j) * beta[j];
        }
        beta[i] = s / rij(i, i);
    }
    let y_norm2: f64 = y.iter().map(|v| v * v).sum();
    let col_norm = |c: usize| design.iter().map(|row| row[c] * row[c]).sum::<f64>().sqrt();
    let fitted_rss = |beta: &[f64]| -> f64 {
        design
            .iter()
            .zip(y)
            .map(|(row, yi)| yi - columns.iter().zip(beta).map(|(&c, b)| row[c] * b).sum::<f64>())
            .map(|e| e * e)
            .sum()
    };
    if fitted_rss(&beta) <= 1e-24 * y_norm2 {
        // exact fit: coefficients at rounding level are zero
        for (b, &c) in beta.iter_mut().zip(&columns) {
            if b.abs() * col_norm(c) <= 1e-12 * y_norm2.sqrt() {
                *b = 0.0;
            }
        }
    }
    let residuals: Vec<f64> = design
        .iter()
        .zip(y)
        .map(|(row, yi)| yi - columns.iter().zip(&beta).map(|(&c, b)| row[c] * b).sum::<f64>())
        .collect();
    let df = n.saturating_sub(k);
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = if df > 0 && rss > 1e-24 * y_norm2 { rss / df as f64 } else { 0.0 };

    // R^{-1} by back substitution, then Cov = σ² R^{-1} R^{-T}
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..=c).rev() {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for j in i + 1..=c {
                s -= rij(i, j) * rinv[j][c];
            }
            rinv[i][c] = s / rij(i, i);
        }
    }
    let mut covariance = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let s: f64 = (i.max(j)..k).map(|m| rinv[i][m] * rinv[j][m]).sum();
            covariance[i][j] = sigma2 * s;
        }
    }
    Some(OlsFit {
        columns,
        dropped,
        coefficients: beta,
        covariance,
        residuals,
        df,
        sigma2,
    })
}

/// One match for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendObservation {
    pub subject_id: String,
    pub date: NaiveDate,
    pub position: Position,
    pub hit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub label: String,
    pub slope: f64,
    pub std_error: Option<f64>,
    pub p: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSlopeTest {
    pub mean: f64,
    pub t: f64,
    pub p: f64,
    pub players: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub season_start: NaiveDate,
    pub reference: Position,
    pub coefficients: Vec<Coefficient>,
    /// Design terms removed for rank deficiency.
    pub dropped_terms: Vec<String>,
    /// Combined time slope per position (reference slope plus interaction).
    pub position_slopes: Vec<SlopeEstimate>,
    pub player_slopes: Vec<SlopeEstimate>,
    pub mean_slope: Option<MeanSlopeTest>,
    pub n: usize,
}

impl TrendResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

pub fn interaction_term(position: Position) -> String {
    format!("day:position[{}]", position.as_str())
}

pub fn dummy_term(position: Position) -> String {
    format!("position[{}]", position.as_str())
}

/// Hit percentage regressed on days since `season_start` with position
/// dummies and position-by-time interactions. The reference position is
/// outside hitter when present, otherwise the first position observed.
pub fn ols_trend(obs: &[TrendObservation], season_start: NaiveDate) -> Option<TrendResult> {
    if obs.is_empty() {
        return None;
    }
    let present: BTreeSet<Position> = obs.iter().map(|o| o.position).collect();
    let reference = if present.contains(&Position::Outside) {
        Position::Outside
    } else {
        *present.iter().next()?
    };
    let others: Vec<Position> = present.iter().copied().filter(|p| *p != reference).collect();

    let mut names = vec!["intercept".to_string(), "day".to_string()];
    names.extend(others.iter().map(|p| dummy_term(*p)));
    names.extend(others.iter().map(|p| interaction_term(*p)));
    let day = |d: NaiveDate| (d - season_start).num_days() as f64;
    let design: Vec<Vec<f64>> = obs
        .iter()
        .map(|o| {
            let t = day(o.date);
            let mut row = vec![1.0, t];
            row.extend(others.iter().map(|p| f64::from(u8::from(o.position == *p))));
            row.extend(others.iter().map(|p| if o.position == *p { t } else { 0.0 }));
            row
        })
        .collect();
    let y: Vec<f64> = obs.iter().map(|o| o.hit).collect();
    let fit = ols(&design, &y)?;

    let coefficients: Vec<Coefficient> = fit
        .columns
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let se = fit.std_error(i);
            Coefficient {
                name: names[c].clone(),
                estimate: fit.coefficients[i],
                std_error: se,
                p: t_p_value(fit.coefficients[i], se, fit.df),
            }
        })
        .collect();
    let dropped_terms = fit.dropped.iter().map(|&c| names[c].clone()).collect();

    let slot = |name: &str| fit.columns.iter().position(|&c| names[c] == name);
    let mut position_slopes = Vec::new();
    if let Some(day_slot) = slot("day") {
        let mut c = vec![0.0; fit.columns.len()];
        c[day_slot] = 1.0;
        let (slope, se, p) = fit.contrast(&c);
        position_slopes.push(SlopeEstimate {
            label: reference.as_str().into(),
            slope,
            std_error: Some(se),
            p,
            n: obs.iter().filter(|o| o.position == reference).count(),
        });
        for pos in &others {
            let Some(inter) = slot(&interaction_term(*pos)) else {
                continue;
            };
            let mut c = vec![0.0; fit.columns.len()];
            c[day_slot] = 1.0;
            c[inter] = 1.0;
            let (slope, se, p) = fit.contrast(&c);
            position_slopes.push(SlopeEstimate {
                label: pos.as_str().into(),
                slope,
                std_error: Some(se),
                p,
                n: obs.iter().filter(|o| o.position == *pos).count(),
            });
        }
    }

    let player_slopes = player_slopes(obs, season_start);
    let mean_slope = mean_slope_test(&player_slopes);
    Some(TrendResult {
        season_start,
        reference,
        coefficients,
        dropped_terms,
        position_slopes,
        player_slopes,
        mean_slope,
        n: obs.len(),
    })
}

/// Simple linear slope of hits on day per player with at least two distinct days.
pub fn player_slopes(obs: &[TrendObservation], season_start: NaiveDate) -> Vec<SlopeEstimate> {
    let mut by_player: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for o in obs {
        by_player
            .entry(&o.subject_id)
            .or_default()
            .push(((o.date - season_start).num_days() as f64, o.hit));
    }
    by_player
        .into_iter()
        .filter_map(|(id, pts)| {
            let design: Vec<Vec<f64>> = pts.iter().map(|(t, _)| vec![1.0, *t]).collect();
            let y: Vec<f64> = pts.iter().map(|(_, h)| *h).collect();
            let fit = ols(&design, &y)?;
            if fit.columns != [0, 1] {
                return None;
            }
            let se = (fit.df > 0).then(|| fit.std_error(1));
            Some(SlopeEstimate {
                label: id.to_string(),
                slope: fit.coefficients[1],
                std_error: se,
                p: se.and_then(|se| t_p_value(fit.coefficients[1], se, fit.df)),
                n: pts.len(),
            })
        })
        .collect()
}

/// One-sample t-test of the player slopes against zero.
pub fn mean_slope_test(slopes: &[SlopeEstimate]) -> Option<MeanSlopeTest> {
    let k = slopes.len();
    if k < 2 {
        return None;
    }
    let values: Vec<f64> = slopes.iter().map(|s| s.slope).collect();
    let mean = values.iter().sum::<f64>() / k as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let se = (var / k as f64).sqrt();
    let (t, p) = if se == 0.0 {
        (0.0, if mean == 0.0 { 1.0 } else { 0.0 })
    } else {
        let t = mean / se;
        (t, student_t_two_sided(t, (k - 1) as f64))
    };
    Some(MeanSlopeTest {
        mean,
        t,
        p,
        players: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(offset: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2023, 1, 13).unwrap() + chrono::Duration::days(offset)
    }

    #[test]
    fn exact_line() {
        let design: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 0.5 * i as f64).collect();
        let fit = ols(&design, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn duplicate_column_dropped() {
        let design: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| (i * i) as f64).collect();
        let fit = ols(&design, &y).unwrap();
        assert_eq!(fit.dropped, vec![2]);
        assert_eq!(fit.columns, vec![0, 1]);
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let design: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![1.0, t, (t * 0.3).sin(), if i % 3 == 0 { t } else { 0.0 }]
            })
            .collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 7919) % 97) as f64 / 97.0).collect();
        let fit = ols(&design, &y).unwrap();
        for j in 0..4 {
            let col: Vec<f64> = design.iter().map(|r| r[j]).collect();
            let scale = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = col.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
            assert!((dot / scale).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_hits_give_flat_slopes() {
        let mut obs = Vec::new();
        for (s, pos) in [("a", Position::Outside), ("b", Position::Middle)] {
            for d in [0, 5, 10] {
                obs.push(TrendObservation { subject_id: s.into(), date: date(d), position: pos, hit: 0.25 });
            }
        }
        let res = ols_trend(&obs, date(0)).unwrap();
        for s in &res.position_slopes {
            assert!(s.slope.abs() < 1e-12);
            assert_eq!(s.p, Some(1.0));
        }
        assert!(res.mean_slope.unwrap().mean.abs() < 1e-12);
    }

    #[test]
    fn single_position_has_no_interactions() {
        let obs: Vec<TrendObservation> = (0..5)
            .map(|d| TrendObservation { subject_id: "a".into(), date: date(d), position: Position::Setter, hit: d as f64 / 10.0 })
            .collect();
        let res = ols_trend(&obs, date(0)).unwrap();
        assert_eq!(res.reference, Position::Setter);
        assert_eq!(res.coefficients.len(), 2);
        assert!((res.position_slopes[0].slope - 0.1).abs() < 1e-12);
    }

    #[test]
    fn two_point_player_slope_is_exact() {
        let obs = vec![
            TrendObservation { subject_id: "a".into(), date: date(2), position: Position::Outside, hit: 0.1 },
            TrendObservation { subject_id: "a".into(), date: date(12), position: Position::Outside, hit: 0.3 },
        ];
        let slopes = player_slopes(&obs, date(0));
        assert!((slopes[0].slope - 0.02).abs() < 1e-14);
        assert_eq!(slopes[0].p, None);
    }
}
