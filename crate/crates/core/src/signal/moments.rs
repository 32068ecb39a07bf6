#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    /// Fisher g1; needs at least 3 values and non-zero spread.
    pub skewness: Option<f64>,
    /// Excess kurtosis g2 (0 for a normal distribution).
    pub kurtosis: Option<f64>,
}

pub fn moment_stats(series: &[f64]) -> Option<MomentStats> {
    if series.is_empty() {
        return None;
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();

    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };

    let shape_defined = series.len() >= 3 && m2 > 0.0;
    Some(MomentStats {
        mean,
        std,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        median,
        skewness: shape_defined.then(|| m3 / m2.powf(1.5)),
        kurtosis: shape_defined.then(|| m4 / (m2 * m2) - 3.0),
    })
}
