use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[u8], truth: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (1, 1) => c.tp += 1,
                (1, _) => c.fp += 1,
                (_, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Six metrics with class 1 as positive. `auroc` and `auprc` are NaN when
/// the truths contain a single class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub auroc: f64,
    pub auprc: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 6] = ["accuracy", "f1", "precision", "recall", "auroc", "auprc"];

    pub fn values(&self) -> [f64; 6] {
        [self.accuracy, self.f1, self.precision, self.recall, self.auroc, self.auprc]
    }

    pub fn from_values(v: [f64; 6]) -> Self {
        Metrics {
            accuracy: v[0],
            f1: v[1],
            precision: v[2],
            recall: v[3],
            auroc: v[4],
            auprc: v[5],
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores thresholded at 0.5.
pub fn metrics(scores: &[f64], truth: &[u8]) -> Metrics {
    let predicted: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    let c = Confusion::from_predictions(&predicted, truth);
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        accuracy: ratio(c.tp + c.tn, c.total()),
        f1,
        precision,
        recall,
        auroc: auroc(scores, truth),
        auprc: average_precision(scores, truth),
    }
}

/// Indices by descending score, grouped into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Trapezoidal area under the ROC curve with tied scores as one step.
pub fn auroc(scores: &[f64], truth: &[u8]) -> f64 {
    let pos = truth.iter().filter(|&&t| t == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return f64::NAN;
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    for g in tie_groups(scores) {
        let gp = g.iter().filter(|&&i| truth[i] == 1).count();
        let gn = g.len() - gp;
        // trapezoid in count units: Δfp · (tp + tp') / 2
        area += gn as f64 * (2 * tp + gp) as f64 / 2.0;
        tp += gp;
        fp += gn;
    }
    debug_assert_eq!((tp, fp), (pos, neg));
    area / (pos as f64 * neg as f64)
}

/// Average precision: Σ (R_k − R_{k−1}) · P_k over distinct score thresholds.
pub fn average_precision(scores: &[f64], truth: &[u8]) -> f64 {
    let pos = truth.iter().filter(|&&t| t == 1).count();
    if pos == 0 || pos == truth.len() {
        return f64::NAN;
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    for g in tie_groups(scores) {
        let gp = g.iter().filter(|&&i| truth[i] == 1).count();
        tp += gp;
        seen += g.len();
        if gp > 0 {
            ap += (gp as f64 / pos as f64) * (tp as f64 / seen as f64);
        }
    }
    ap
}
