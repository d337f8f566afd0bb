//! Final matching decision: fixed-width feature vector from the normalized
//! cross-correlation, a max-margin linear classifier trained by SMO with a
//! logistic calibrator, and the plain threshold rule used in analysis work.

mod model_file;
mod smo;

pub use model_file::{load_model, save_model};
pub use smo::train_svm;

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{CoreError, Result};
use crate::signal::CrossCorrelation;

/// Number of entries in the feature vector: 500 to each side of the
/// correlation peak plus the peak itself.
pub const FEATURE_LEN: usize = 1001;
/// Zero-based index of the correlation peak inside the vector.
pub const CENTER_INDEX: usize = 500;

/// Uniformly resampled cross-correlation centered on its absolute peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_LEN {
            return Err(CoreError::InputError(format!(
                "feature vector must have {FEATURE_LEN} entries, got {}",
                values.len()
            )));
        }
        let center = values[CENTER_INDEX].abs();
        if values.iter().any(|v| v.abs() > center + 1e-12) {
            return Err(CoreError::InputError(
                "feature vector peak must sit at the center".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; FEATURE_LEN],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The correlation peak, `values[501]` in one-based indexing.
    pub fn center_value(&self) -> f64 {
        self.values[CENTER_INDEX]
    }
}

/// Builds the 1001-point feature vector: the peak of `|h|` goes to the
/// center, 500 uniform samples of `h` between lag 0 and the peak fill the
/// left half, and 500 uniform samples between the peak and the end fill the
/// right half. Fractional positions are linearly interpolated.
pub fn build_feature_vector(h: &CrossCorrelation) -> FeatureVector {
    let values = h.values();
    assert!(!values.is_empty(), "cross-correlation must be non-empty");
    if values.len() == 1 {
        let mut out = vec![0.0; FEATURE_LEN];
        out[CENTER_INDEX] = values[0];
        return FeatureVector { values: out };
    }
    let t_m = h.peak_index() as f64;
    let t_e = (values.len() - 1) as f64;

    let mut out = Vec::with_capacity(FEATURE_LEN);
    for n in 1..=500u32 {
        out.push(sample_linear(values, n as f64 * t_m / 500.0));
    }
    out.push(values[t_m as usize]);
    for n in 1..=500u32 {
        out.push(sample_linear(values, t_m + n as f64 * (t_e - t_m) / 500.0));
    }
    FeatureVector { values: out }
}

fn sample_linear(values: &[f64], pos: f64) -> f64 {
    let pos = pos.clamp(0.0, (values.len() - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        values[lo]
    } else {
        let frac = pos - lo as f64;
        values[lo] * (1.0 - frac) + values[hi] * frac
    }
}

/// Trained linear decision function plus its logistic calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Probability = sigmoid(slope * score + intercept).
    pub calibration: (f64, f64),
    pub meta: ModelMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ModelMeta {
    pub n_examples: u32,
    pub n_positive: u32,
    pub n_negative: u32,
    pub created_unix: i64,
    pub config_digest: String,
}

impl ClassifierModel {
    /// Raw margin for a feature vector.
    pub fn decision_value(&self, fv: &FeatureVector) -> f64 {
        self.weights
            .iter()
            .zip(fv.values())
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias
    }
}

/// Binary class labels for training examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    NonMatch = 0,
    Match = 1,
}

/// A labeled training example plus the corpus indices it came from.
#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub fv: FeatureVector,
    pub label: Label,
    pub source: (usize, usize),
}

/// Final matching verdict with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchDecision {
    pub is_match: bool,
    /// Raw margin of the decision function.
    pub score: f64,
    /// Calibrated match probability.
    pub probability: f64,
    /// Correlation peak of the surviving signals.
    pub max_xcorr: f64,
}

/// Classifies a feature vector: positive margin means match, the calibrated
/// probability comes from the logistic map.
pub fn classify(model: &ClassifierModel, fv: &FeatureVector) -> MatchDecision {
    let score = model.decision_value(fv);
    let (slope, intercept) = model.calibration;
    let probability = sigmoid(slope * score + intercept);
    MatchDecision {
        is_match: score > 0.0,
        score,
        probability,
        max_xcorr: fv.center_value(),
    }
}

/// The plain binary rule: match iff `m > th`.
pub fn threshold_rule(m: f64, th: f64) -> bool {
    debug_assert!((0.0..=1.0 + 1e-9).contains(&m), "m must be a peak in [0, 1]");
    m > th
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains the soft-margin linear classifier with SMO and fits the logistic
/// calibrator on the training decision values. No feature standardization is
/// applied.
pub fn train_classifier(
    examples: &[LabeledExample],
    hyper: &TrainConfig,
) -> Result<ClassifierModel> {
    let n_pos = examples.iter().filter(|e| e.label == Label::Match).count();
    let n_neg = examples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CoreError::DegenerateTrainingSet(
            "both classes must be present",
        ));
    }
    let (weights, bias) = train_svm(examples, hyper);

    let scores: Vec<f64> = examples
        .iter()
        .map(|e| {
            e.fv.values()
                .iter()
                .zip(&weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
                + bias
        })
        .collect();
    let labels: Vec<bool> = examples.iter().map(|e| e.label == Label::Match).collect();
    let calibration = fit_logistic(&scores, &labels);

    Ok(ClassifierModel {
        weights,
        bias,
        calibration,
        meta: ModelMeta {
            n_examples: examples.len() as u32,
            n_positive: n_pos as u32,
            n_negative: n_neg as u32,
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs() as i64)
                .unwrap_or(0),
            config_digest: String::new(),
        },
    })
}

/// Platt-style sigmoid fit: finds (slope, intercept) maximizing the
/// likelihood of P(match | score) = sigmoid(slope * score + intercept),
/// by Newton iterations with backtracking.
fn fit_logistic(scores: &[f64], labels: &[bool]) -> (f64, f64) {
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    // Platt's regularized targets.
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&l| if l { t_pos } else { t_neg })
        .collect();

    // Parameterized as p = sigmoid(a*s + b).
    let mut a = 1.0f64;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln() * -1.0;
    let nll = |a: f64, b: f64| -> f64 {
        scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| {
                let z = a * s + b;
                // -t*log(p) - (1-t)*log(1-p), numerically stable.
                let log1p_exp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                -t * (z - log1p_exp) + (1.0 - t) * log1p_exp
            })
            .sum()
    };
    let mut f = nll(a, b);
    for _ in 0..100 {
        let (mut g_a, mut g_b) = (0.0f64, 0.0f64);
        let (mut h_aa, mut h_ab, mut h_bb) = (1e-12f64, 0.0f64, 1e-12f64);
        for (&s, &t) in scores.iter().zip(&targets) {
            let p = sigmoid(a * s + b);
            let d = p - t;
            g_a += d * s;
            g_b += d;
            let w = p * (1.0 - p);
            h_aa += w * s * s;
            h_ab += w * s;
            h_bb += w;
        }
        let det = h_aa * h_bb - h_ab * h_ab;
        if det.abs() < 1e-18 {
            break;
        }
        let step_a = (h_bb * g_a - h_ab * g_b) / det;
        let step_b = (h_aa * g_b - h_ab * g_a) / det;
        let mut lr = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let na = a - lr * step_a;
            let nb = b - lr * step_b;
            let nf = nll(na, nb);
            if nf < f {
                a = na;
                b = nb;
                f = nf;
                improved = true;
                break;
            }
            lr *= 0.5;
        }
        if !improved || (step_a.abs() + step_b.abs()) < 1e-10 {
            break;
        }
    }
    (a, b)
}

/// Writes the training set as CSV: 1001 feature columns, the label and the
/// source pair indices.
pub fn write_training_csv(examples: &[LabeledExample], path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    let header: Vec<String> = (1..=FEATURE_LEN).map(|i| format!("f{i:04}")).collect();
    writeln!(out, "{},label,acc_id,mic_id", header.join(","))?;
    for ex in examples {
        for v in ex.fv.values() {
            write!(out, "{v},")?;
        }
        writeln!(
            out,
            "{},{},{}",
            ex.label as u8, ex.source.0, ex.source.1
        )?;
    }
    Ok(())
}
