//! Collinearity pruning followed by univariate two-group F-tests.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{display_name, FeatureMatrix};
use crate::labels::LabeledMatrix;
use crate::stats::{f_sf, format_p};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub cutoff: f64,
    pub alpha: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            cutoff: 0.7,
            alpha: 0.05,
        }
    }
}

/// Pearson correlation over rows where both values are present.
pub fn pearson_pairwise(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = a.iter().zip(b).filter_map(|(a, b)| a.zip(*b)).unzip();
    crate::stats::pearson(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearPair {
    pub kept: String,
    pub dropped: String,
    pub r: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollinearityReport {
    /// Surviving column indices, in schema order.
    pub kept: Vec<usize>,
    pub dropped: Vec<CollinearPair>,
    /// Features with fewer than two distinct present values.
    pub constant: Vec<String>,
}

fn is_constant(col: &[Option<f64>]) -> bool {
    let mut present = col.iter().flatten();
    match present.next() {
        None => true,
        Some(first) => present.all(|v| v == first),
    }
}

/// Walks features in schema order and keeps each one unless it is constant
/// or correlates above `cutoff` (in absolute value) with a feature already kept.
pub fn collinearity_filter(matrix: &FeatureMatrix, rows: &[usize], cutoff: f64) -> CollinearityReport {
    let columns: Vec<Vec<Option<f64>>> = (0..matrix.feature_names.len())
        .into_par_iter()
        .map(|j| matrix.column_rows(j, rows))
        .collect();
    let mut report = CollinearityReport::default();
    for (j, col) in columns.iter().enumerate() {
        if is_constant(col) {
            report.constant.push(matrix.feature_names[j].clone());
            continue;
        }
        let clash = report.kept.iter().find_map(|&k| {
            pearson_pairwise(&columns[k], col)
                .filter(|r| r.abs() > cutoff)
                .map(|r| (k, r))
        });
        match clash {
            Some((k, r)) => report.dropped.push(CollinearPair {
                kept: matrix.feature_names[k].clone(),
                dropped: matrix.feature_names[j].clone(),
                r,
            }),
            None => report.kept.push(j),
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
}

impl GroupStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        GroupStats {
            n,
            mean,
            sd: if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 },
        }
    }

    /// `"49.326 (19.131)"`.
    pub fn display(&self) -> String {
        format!("{:.3} ({:.3})", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTestResult {
    pub feature: String,
    pub f: f64,
    pub p: f64,
    pub good: GroupStats,
    pub poor: GroupStats,
}

/// One-way ANOVA between class 0 and class 1 over present values. `None`
/// unless each class has at least two values.
pub fn f_test(column: &[Option<f64>], classes: &[u8]) -> Option<(f64, f64, GroupStats, GroupStats)> {
    let mut groups: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (v, &c) in column.iter().zip(classes) {
        if let Some(v) = v {
            groups[usize::from(c)].push(*v);
        }
    }
    if groups.iter().any(|g| g.len() < 2) {
        return None;
    }
    let n = (groups[0].len() + groups[1].len()) as f64;
    let grand = groups.iter().flatten().sum::<f64>() / n;
    let stats = [GroupStats::of(&groups[0]), GroupStats::of(&groups[1])];
    let ssb: f64 = stats.iter().map(|s| s.n as f64 * (s.mean - grand).powi(2)).sum();
    let ssw: f64 = groups
        .iter()
        .zip(&stats)
        .map(|(g, s)| g.iter().map(|v| (v - s.mean).powi(2)).sum::<f64>())
        .sum();
    let df_within = n - 2.0;
    let (f, p) = if ssb == 0.0 {
        (0.0, 1.0)
    } else if ssw == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ssb / (ssw / df_within);
        (f, f_sf(f, 1.0, df_within))
    };
    Some((f, p, stats[0], stats[1]))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub collinearity: CollinearityReport,
    /// F-tests of the collinearity survivors, by descending F.
    pub f_results: Vec<FTestResult>,
    /// Selected features in schema order.
    pub kept: Vec<String>,
    pub kept_indices: Vec<usize>,
    pub alpha: f64,
}

impl SelectionReport {
    /// F-test rows of the selected features, by descending F.
    pub fn kept_results(&self) -> Vec<&FTestResult> {
        self.f_results.iter().filter(|r| self.kept.contains(&r.feature)).collect()
    }
}

/// Collinearity pruning then F-tests on the given rows only.
pub fn select_features(data: &LabeledMatrix, rows: &[usize], cfg: &SelectConfig) -> Result<SelectionReport> {
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let matrix = &data.matrix;
    let collinearity = collinearity_filter(matrix, rows, cfg.cutoff);
    let classes: Vec<u8> = rows.iter().map(|&i| data.classes[i]).collect();
    let tested: Vec<(usize, FTestResult)> = collinearity
        .kept
        .par_iter()
        .filter_map(|&j| {
            let (f, p, good, poor) = f_test(&matrix.column_rows(j, rows), &classes)?;
            Some((
                j,
                FTestResult {
                    feature: matrix.feature_names[j].clone(),
                    f,
                    p,
                    good,
                    poor,
                },
            ))
        })
        .collect();
    let kept_indices: Vec<usize> = tested.iter().filter(|(_, r)| r.p < cfg.alpha).map(|(j, _)| *j).collect();
    let kept = kept_indices.iter().map(|&j| matrix.feature_names[j].clone()).collect();
    let mut f_results: Vec<FTestResult> = tested.into_iter().map(|(_, r)| r).collect();
    f_results.sort_by(|a, b| b.f.total_cmp(&a.f).then_with(|| a.feature.cmp(&b.feature)));
    Ok(SelectionReport {
        collinearity,
        f_results,
        kept,
        kept_indices,
        alpha: cfg.alpha,
    })
}

/// `feature,F,p,good,poor` for the selected features, by descending F.
pub fn write_selection_csv<W: Write>(report: &SelectionReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "F", "p", "good", "poor"])?;
    for r in report.kept_results() {
        w.write_record([
            display_name(&r.feature),
            format!("{:.3}", r.f),
            format_p(r.p),
            r.good.display(),
            r.poor.display(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<selection report>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DayFeatureRow;
    use chrono::NaiveDate;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(cols: &[Vec<f64>], classes: Vec<u8>) -> LabeledMatrix {
        let n = classes.len();
        let names = (0..cols.len()).map(|j| format!("f{j}")).collect();
        let mut m = FeatureMatrix::empty(names);
        for i in 0..n {
            m.rows.push(DayFeatureRow {
                subject_id: format!("s{}", i % 4),
                date: NaiveDate::from_ymd_opt(2022, 12, 1).unwrap(),
                phase: 2,
                values: cols.iter().map(|c| Some(c[i])).collect(),
            });
        }
        LabeledMatrix { matrix: m, classes }
    }

    #[test]
    fn duplicate_column_pruned_once() {
        let a: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let lm = matrix(&[a.clone(), a, (0..20).map(|i| ((i * 7) % 5) as f64).collect()], vec![0; 20]);
        let rows: Vec<usize> = (0..20).collect();
        let rep = collinearity_filter(&lm.matrix, &rows, 0.7);
        assert_eq!(rep.kept, vec![0, 2]);
        assert_eq!(rep.dropped.len(), 1);
        assert_eq!(rep.dropped[0].dropped, "f1");
    }

    #[test]
    fn correlated_triple_has_one_survivor() {
        let mut rng = crate::rng::seeded(1);
        let base: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let noisy = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            base.iter().map(|b| b + 0.05 * rng.random::<f64>()).collect()
        };
        let cols = [noisy(&mut rng), noisy(&mut rng), noisy(&mut rng)];
        let lm = matrix(&cols, vec![0; 200]);
        let rows: Vec<usize> = (0..200).collect();
        assert_eq!(collinearity_filter(&lm.matrix, &rows, 0.7).kept, vec![0]);
    }

    #[test]
    fn constant_feature_dropped() {
        let lm = matrix(&[vec![1.0; 10], (0..10).map(f64::from).collect()], vec![0; 10]);
        let rep = collinearity_filter(&lm.matrix, &(0..10).collect::<Vec<_>>(), 0.7);
        assert_eq!(rep.constant, vec!["f0".to_string()]);
        assert_eq!(rep.kept, vec![1]);
    }

    #[test]
    fn f_test_degenerate_cases() {
        let col: Vec<Option<f64>> = [1.0, 1.0, 1.0, 1.0].map(Some).to_vec();
        let (f, p, _, _) = f_test(&col, &[0, 0, 1, 1]).unwrap();
        assert_eq!((f, p), (0.0, 1.0));
        assert!(f_test(&col, &[0, 0, 0, 1]).is_none());
        assert!(f_test(&[Some(1.0), None, Some(2.0), Some(3.0)], &[0, 0, 1, 1]).is_none());
    }

    #[test]
    fn informative_feature_selected_over_noise() {
        let mut rng = crate::rng::seeded(7);
        let n = 300;
        let classes: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let signal: Vec<f64> = classes.iter().map(|&c| f64::from(c) * 2.0 + rng.random::<f64>()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let lm = matrix(&[signal, noise], classes);
        let rep = select_features(&lm, &(0..n).collect::<Vec<_>>(), &SelectConfig::default()).unwrap();
        assert_eq!(rep.kept, vec!["f0".to_string()]);
        assert_eq!(rep.f_results[0].feature, "f0");
        assert!(matches!(
            select_features(&lm, &[], &SelectConfig::default()),
            Err(Error::NoRows)
        ));
    }

    #[test]
    fn hrv_generator_parameters_are_strongly_separated() {
        let mut rng = crate::rng::seeded(11);
        let good = Normal::new(49.326, 19.131).unwrap();
        let poor = Normal::new(87.000, 29.455).unwrap();
        let mut col = Vec::new();
        let mut classes = Vec::new();
        for i in 0..600 {
            let c = u8::from(i % 5 == 0);
            classes.push(c);
            col.push(Some(if c == 1 { poor.sample(&mut rng) } else { good.sample(&mut rng) }));
        }
        let (f, p, g, _) = f_test(&col, &classes).unwrap();
        assert!(f > 50.0 && p < 0.001);
        assert!((g.mean - 49.326).abs() < 3.0);
    }

    #[test]
    fn table_formatting() {
        let g = GroupStats { n: 10, mean: 49.3264, sd: 19.1309 };
        assert_eq!(g.display(), "49.326 (19.131)");
    }

    proptest::proptest! {
        #[test]
        fn f_nonnegative_and_p_in_unit_interval(
            vals in proptest::collection::vec(-1e3f64..1e3, 6..60)
        ) {
            let classes: Vec<u8> = (0..vals.len()).map(|i| (i % 2) as u8).collect();
            let col: Vec<Option<f64>> = vals.iter().copied().map(Some).collect();
            if let Some((f, p, _, _)) = f_test(&col, &classes) {
                proptest::prop_assert!(f >= 0.0);
                proptest::prop_assert!(p > 0.0 || f.is_infinite() || f > 1e3);
                proptest::prop_assert!(p <= 1.0);
            }
        }

        #[test]
        fn p_decreases_in_f(f1 in 0.0f64..50.0, df in 3.0f64..500.0, bump in 0.0f64..10.0) {
            proptest::prop_assert!(f_sf(f1 + bump, 1.0, df) <= f_sf(f1, 1.0, df));
        }
    }
}
