//! Soft-margin linear SVM trained by pairwise coordinate ascent on the dual
//! (sequential minimal optimization). The weight vector is maintained
//! incrementally, so evaluating the decision function stays O(d).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::config::TrainConfig;

use super::{Label, LabeledExample};

/// Returns `(weights, bias)` of the trained decision function.
pub fn train_svm(examples: &[LabeledExample], cfg: &TrainConfig) -> (Vec<f64>, f64) {
    let n = examples.len();
    let d = examples[0].fv.values().len();
    let x = |i: usize| examples[i].fv.values();
    let y: Vec<f64> = examples
        .iter()
        .map(|e| if e.label == Label::Match { 1.0 } else { -1.0 })
        .collect();

    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };
    let self_dot: Vec<f64> = (0..n).map(|i| dot(x(i), x(i))).collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    let c = cfg.c;
    let tol = cfg.tolerance;
    let mut quiet_passes = 0usize;
    let mut sweeps = 0usize;

    while quiet_passes < cfg.max_passes && sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = dot(&w, x(i)) + b - y[i];
            let viol = (y[i] * e_i < -tol && alpha[i] < c) || (y[i] * e_i > tol && alpha[i] > 0.0);
            if !viol {
                continue;
            }
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let e_j = dot(&w, x(j)) + b - y[j];

            let (a_i_old, a_j_old) = (alpha[i], alpha[j]);
            let (lo, hi) = if y[i] != y[j] {
                ((a_j_old - a_i_old).max(0.0), (c + a_j_old - a_i_old).min(c))
            } else {
                ((a_i_old + a_j_old - c).max(0.0), (a_i_old + a_j_old).min(c))
            };
            if lo >= hi {
                continue;
            }
            let k_ij = dot(x(i), x(j));
            let eta = 2.0 * k_ij - self_dot[i] - self_dot[j];
            if eta >= 0.0 {
                continue;
            }
            let mut a_j = a_j_old - y[j] * (e_i - e_j) / eta;
            a_j = a_j.clamp(lo, hi);
            if (a_j - a_j_old).abs() < 1e-7 {
                continue;
            }
            let a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j);
            alpha[i] = a_i;
            alpha[j] = a_j;

            let di = y[i] * (a_i - a_i_old);
            let dj = y[j] * (a_j - a_j_old);
            for ((wk, xi), xj) in w.iter_mut().zip(x(i)).zip(x(j)) {
                *wk += di * xi + dj * xj;
            }

            let b1 = b - e_i - di * self_dot[i] - dj * k_ij;
            let b2 = b - e_j - di * k_ij - dj * self_dot[j];
            b = if alpha[i] > 0.0 && alpha[i] < c {
                b1
            } else if alpha[j] > 0.0 && alpha[j] < c {
                b2
            } else {
                (b1 + b2) / 2.0
            };
            changed += 1;
        }
        if changed == 0 {
            quiet_passes += 1;
        } else {
            quiet_passes = 0;
        }
    }
    (w, b)
}
