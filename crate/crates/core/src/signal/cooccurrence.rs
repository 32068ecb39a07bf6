//! Second-order statistics of a quantized lag-pair distribution.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooccurrenceStats {
    /// Σ (i-j)² P(i,j)
    pub inertia: f64,
    /// Σ P(i,j) / (1 + (i-j)²)
    pub local_homogeneity: f64,
    /// `None` when the marginal variance is zero.
    pub correlation: Option<f64>,
    /// Σ P(i,j)²
    pub energy: f64,
}

/// Equal-width bins over the series' own range; the maximum falls into the
/// top bin. A constant series maps entirely to bin 0.
pub fn quantize(series: &[f64], levels: usize) -> Vec<usize> {
    assert!(levels >= 1, "at least one quantization level");
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    series
        .iter()
        .map(|&x| {
            if range > 0.0 {
                (((x - min) / range * levels as f64) as usize).min(levels - 1)
            } else {
                0
            }
        })
        .collect()
}

/// Symmetrized, normalized co-occurrence matrix of `(x_t, x_{t+lag})`.
pub fn cooccurrence_matrix(series: &[f64], levels: usize, lag: usize) -> Option<Vec<Vec<f64>>> {
    if lag == 0 || levels == 0 || series.len() < lag + 1 || series.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let q = quantize(series, levels);
    let mut counts = vec![vec![0u64; levels]; levels];
    for t in 0..q.len() - lag {
        counts[q[t]][q[t + lag]] += 1;
        counts[q[t + lag]][q[t]] += 1;
    }
    let total = (2 * (q.len() - lag)) as f64;
    Some(
        counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64 / total).collect())
            .collect(),
    )
}

pub fn cooccurrence_stats(series: &[f64], levels: usize, lag: usize) -> Option<CooccurrenceStats> {
    let p = cooccurrence_matrix(series, levels, lag)?;
    let mut inertia = 0.0;
    let mut homogeneity = 0.0;
    let mut energy = 0.0;
    let mut mu = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &pij) in row.iter().enumerate() {
            let d = i as f64 - j as f64;
            inertia += d * d * pij;
            homogeneity += pij / (1.0 + d * d);
            energy += pij * pij;
            mu += i as f64 * pij;
        }
    }
    // P is symmetric, so both marginals share mean and variance
    let mut var = 0.0;
    let mut cov = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &pij) in row.iter().enumerate() {
            let di = i as f64 - mu;
            let dj = j as f64 - mu;
            var += di * di * pij;
            cov += di * dj * pij;
        }
    }
    let correlation = (var > 0.0).then(|| cov / var);
    Some(CooccurrenceStats {
        inertia,
        local_homogeneity: homogeneity,
        correlation,
        energy,
    })
}
