//! Detrended fluctuation analysis with order-1 detrending.

use std::fmt;

/// Window sizes (in samples, i.e. minutes) used for DFA features and the
/// Hurst exponent.
pub const DFA_WINDOWS: [usize; 6] = [10, 20, 30, 40, 50, 60];

/// Minimum samples per window for a meaningful linear fit.
const MIN_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsufficientData {
    pub needed: usize,
    pub available: usize,
}

impl fmt::Display for InsufficientData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "insufficient data: need {} samples, have {}", self.needed, self.available)
    }
}

impl std::error::Error for InsufficientData {}

/// Fluctuation function F(n).
///
/// The mean-centred series is integrated, cut into non-overlapping windows
/// of `window` samples from the start and again from the end, each window is
/// detrended with a least-squares line, and F(n) is the root of the mean
/// residual variance over all 2·floor(N/n) windows.
pub fn dfa_fluctuation(series: &[f64], window: usize) -> Result<f64, InsufficientData> {
    let needed = (2 * window).max(2 * MIN_WINDOW);
    if window < MIN_WINDOW || series.len() < needed {
        return Err(InsufficientData {
            needed,
            available: series.len(),
        });
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut profile = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &x in series {
        acc += x - mean;
        profile.push(acc);
    }

    let segments = n / window;
    let mut total = 0.0;
    for k in 0..segments {
        total += detrended_variance(&profile[k * window..(k + 1) * window]);
    }
    for k in 0..segments {
        let end = n - k * window;
        total += detrended_variance(&profile[end - window..end]);
    }
    let f = (total / (2 * segments) as f64).sqrt();
    // rounding residue of an exactly linear profile
    let scale = profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if f <= 1e-10 * scale { 0.0 } else { f })
}

/// Mean squared residual of a least-squares line through `y` against 0..len.
fn detrended_variance(y: &[f64]) -> f64 {
    let len = y.len() as f64;
    let x_mean = (len - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / len;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (v - y_mean);
    }
    let slope = sxy / sxx;
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            let r = v - y_mean - slope * (i as f64 - x_mean);
            r * r
        })
        .sum::<f64>()
        / len
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfaResult {
    /// Strictly increasing window sizes with a positive fluctuation.
    pub window_sizes: Vec<usize>,
    pub fluctuations: Vec<f64>,
    /// Least-squares slope of ln F(n) against ln n.
    pub hurst: f64,
}

/// Computes F(n) over `windows` and the scaling exponent. Windows that are
/// too long for the series, or whose fluctuation is zero, are skipped;
/// fewer than three usable windows gives `None`.
pub fn dfa(series: &[f64], windows: &[usize]) -> Option<DfaResult> {
    let mut sizes: Vec<usize> = windows.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let mut window_sizes = Vec::new();
    let mut fluctuations = Vec::new();
    for n in sizes {
        if let Ok(f) = dfa_fluctuation(series, n) {
            if f > 0.0 && f.is_finite() {
                window_sizes.push(n);
                fluctuations.push(f);
            }
        }
    }
    if window_sizes.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = window_sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = fluctuations.iter().map(|f| f.ln()).collect();
    let hurst = ols_slope(&xs, &ys);
    Some(DfaResult {
        window_sizes,
        fluctuations,
        hurst,
    })
}

pub fn hurst_from_dfa(series: &[f64], windows: &[usize]) -> Option<f64> {
    dfa(series, windows).map(|r| r.hurst)
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
