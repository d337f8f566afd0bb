//! End-to-end matching: pre-process both channels, segment on the body
//! envelope, filter segments, assemble survivors, decide, and emit the
//! cleaned microphone signal plus a diagnostic report.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{DecisionMode, PipelineConfig};
use crate::decision::{
    build_feature_vector, classify, threshold_rule, ClassifierModel, FeatureVector, Label,
    LabeledExample, MatchDecision,
};
use crate::error::{CoreError, Result};
use crate::par;
use crate::segment::{assemble_surviving, filter_segment, segment_signals, SegmentDiagnostic};
use crate::signal::{
    align, apply_envelope, clip_spikes, energy_envelope, highpass_filter, normalize_unity,
    resample, xcorr_normalized, EnvelopeParams, SampledSignal,
};

/// Why the pipeline declined to match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoMatchReason {
    /// The body-channel envelope never rose above the floor.
    NoEnvelope,
    /// Segments existed but every one was dropped by the rules.
    NoSurvivingSegments,
    /// Survivors reached the classifier and were rejected.
    ClassifierReject,
}

/// The final verdict of a matching run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportDecision {
    Match(MatchDecision),
    NoMatch { reason: NoMatchReason },
}

impl ReportDecision {
    pub fn is_match(&self) -> bool {
        matches!(self, ReportDecision::Match(d) if d.is_match)
    }
}

/// Wall-clock cost of each stage, milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub preprocess_ms: f64,
    pub segmentation_ms: f64,
    pub decision_ms: f64,
    pub total_ms: f64,
}

/// Everything a matching run produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchReport {
    pub decision: ReportDecision,
    /// Microphone signal with every non-surviving region zeroed; empty on no
    /// match or when the caller asked to skip audio.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cleaned_mic: Option<CleanedAudio>,
    pub segments: Vec<SegmentDiagnostic>,
    pub stage_timings_ms: StageTimings,
    pub config_digest: String,
}

/// Serializable audio payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanedAudio {
    pub rate_hz: f64,
    pub samples: Vec<f64>,
}

impl CleanedAudio {
    pub fn to_signal(&self) -> Result<SampledSignal> {
        SampledSignal::new(self.samples.clone(), self.rate_hz)
    }
}

pub(crate) enum FrontOutcome {
    Features {
        fv: FeatureVector,
        mic_final: SampledSignal,
        segments: Vec<SegmentDiagnostic>,
    },
    Rejected {
        reason: NoMatchReason,
        segments: Vec<SegmentDiagnostic>,
    },
}

/// Pre-processing plus per-segment analysis up to the feature vector.
/// Errors only on unusable inputs; every analysable rejection becomes a
/// [`FrontOutcome::Rejected`].
pub(crate) fn run_front(
    acc: &SampledSignal,
    mic: &SampledSignal,
    cfg: &PipelineConfig,
) -> Result<(FrontOutcome, f64, f64)> {
    let t0 = Instant::now();
    let pre = &cfg.preprocess;
    if acc.duration_sec() < 0.1 || mic.duration_sec() < 0.1 {
        return Err(CoreError::InputError(
            "both channels must cover at least 100 ms".into(),
        ));
    }

    // Movement artifacts live below 100 Hz on the body channel only.
    let acc = highpass_filter(acc, pre.highpass_cutoff_hz.min(acc.rate_hz() / 2.0 - 1.0))?;
    let acc = resample(&acc, pre.target_rate_hz)?;
    let mic = resample(mic, pre.target_rate_hz)?;

    let window = (pre.spike_window_sec * pre.target_rate_hz).round() as usize;
    let acc = clip_spikes(&acc, window.max(8), pre.spike_k_sigma);
    let mic = clip_spikes(&mic, window.max(8), pre.spike_k_sigma);

    let acc = normalize_unity(&acc)
        .map_err(|_| CoreError::InputError("body channel is all zero".into()))?;
    let mic = normalize_unity(&mic)
        .map_err(|_| CoreError::InputError("microphone channel is all zero".into()))?;

    let (_shift, acc, mic) = align(&acc, &mic)?;

    let frame_len = (pre.envelope_frame_sec * pre.target_rate_hz).round() as usize;
    let env_params = EnvelopeParams {
        threshold_frac: pre.envelope_threshold_frac,
        noise_floor: pre.envelope_noise_floor,
        close_gap_sec: pre.envelope_close_gap_sec,
    };
    let env = energy_envelope(&acc, frame_len.max(1), &env_params);
    let mic = apply_envelope(&env, &mic)?;
    let preprocess_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let pairs = segment_signals(&acc, &mic, &env);
    if pairs.is_empty() {
        return Ok((
            FrontOutcome::Rejected {
                reason: NoMatchReason::NoEnvelope,
                segments: Vec::new(),
            },
            preprocess_ms,
            t1.elapsed().as_secs_f64() * 1e3,
        ));
    }
    let filtered = par::map_items(&pairs, |p| filter_segment(p.clone(), &cfg.rules, &cfg.pitch));
    let segments: Vec<SegmentDiagnostic> = filtered.iter().map(|p| p.diagnostic()).collect();

    let assembled = assemble_surviving(&filtered, pre.target_rate_hz);
    let segmentation_ms = t1.elapsed().as_secs_f64() * 1e3;
    match assembled {
        Ok((acc_final, mic_final)) => {
            let h = xcorr_normalized(&acc_final, &mic_final)?;
            let fv = build_feature_vector(&h);
            Ok((
                FrontOutcome::Features {
                    fv,
                    mic_final,
                    segments,
                },
                preprocess_ms,
                segmentation_ms,
            ))
        }
        Err(CoreError::NoSurvivingSegments) => Ok((
            FrontOutcome::Rejected {
                reason: NoMatchReason::NoSurvivingSegments,
                segments,
            },
            preprocess_ms,
            segmentation_ms,
        )),
        Err(e) => Err(e),
    }
}

/// Runs the full matching pipeline on one channel pair.
pub fn match_pair(
    acc: &SampledSignal,
    mic: &SampledSignal,
    model: &ClassifierModel,
    cfg: &PipelineConfig,
) -> Result<MatchReport> {
    let t0 = Instant::now();
    let (front, preprocess_ms, segmentation_ms) = run_front(acc, mic, cfg)?;
    let t2 = Instant::now();
    let (decision, cleaned_mic, segments) = match front {
        FrontOutcome::Rejected { reason, segments } => {
            (ReportDecision::NoMatch { reason }, None, segments)
        }
        FrontOutcome::Features {
            fv,
            mic_final,
            segments,
        } => {
            let verdict = match cfg.decision.mode {
                DecisionMode::Classifier => classify(model, &fv),
                DecisionMode::Threshold { th } => {
                    let m = fv.center_value().abs().min(1.0);
                    MatchDecision {
                        is_match: threshold_rule(m, th),
                        score: m,
                        probability: m,
                        max_xcorr: fv.center_value(),
                    }
                }
            };
            if verdict.is_match {
                (
                    ReportDecision::Match(verdict),
                    Some(CleanedAudio {
                        rate_hz: mic_final.rate_hz(),
                        samples: mic_final.into_samples(),
                    }),
                    segments,
                )
            } else {
                (
                    ReportDecision::NoMatch {
                        reason: NoMatchReason::ClassifierReject,
                    },
                    None,
                    segments,
                )
            }
        }
    };
    let decision_ms = t2.elapsed().as_secs_f64() * 1e3;
    Ok(MatchReport {
        decision,
        cleaned_mic,
        segments,
        stage_timings_ms: StageTimings {
            preprocess_ms,
            segmentation_ms,
            decision_ms,
            total_ms: t0.elapsed().as_secs_f64() * 1e3,
        },
        config_digest: cfg.digest(),
    })
}

/// Aggregate counts of an all-versus-all matching run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchTable {
    pub n_true: usize,
    pub n_false: usize,
    pub true_matched: usize,
    pub false_matched: usize,
}

impl MatchTable {
    pub fn tp_rate(&self) -> f64 {
        if self.n_true == 0 {
            f64::NAN
        } else {
            self.true_matched as f64 / self.n_true as f64
        }
    }

    pub fn fp_rate(&self) -> f64 {
        if self.n_false == 0 {
            f64::NAN
        } else {
            self.false_matched as f64 / self.n_false as f64
        }
    }
}

/// All-versus-all outcome: one report per `(row, col)` pair in row-major
/// order plus the aggregate table.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub n: usize,
    pub reports: Vec<MatchReport>,
    pub table: MatchTable,
}

impl BatchOutcome {
    pub fn report(&self, row: usize, col: usize) -> &MatchReport {
        &self.reports[row * self.n + col]
    }
}

/// Matches every body-channel recording against every microphone recording.
/// True pairs sit on the diagonal. Reports omit the cleaned audio to bound
/// memory; unusable pairs count as non-matches.
pub fn batch_match(
    pairs: &[(SampledSignal, SampledSignal)],
    model: &ClassifierModel,
    cfg: &PipelineConfig,
) -> BatchOutcome {
    let n = pairs.len();
    let mut reports = par::map_indices(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        match_pair(&pairs[i].0, &pairs[j].1, model, cfg).unwrap_or_else(|e| MatchReport {
            decision: ReportDecision::NoMatch {
                reason: NoMatchReason::NoEnvelope,
            },
            cleaned_mic: None,
            segments: Vec::new(),
            stage_timings_ms: StageTimings::default(),
            config_digest: format!("input_error: {e}"),
        })
    });
    for r in reports.iter_mut() {
        r.cleaned_mic = None;
    }
    let mut table = MatchTable::default();
    for (idx, r) in reports.iter().enumerate() {
        let (i, j) = (idx / n, idx % n);
        let matched = r.decision.is_match();
        if i == j {
            table.n_true += 1;
            table.true_matched += usize::from(matched);
        } else {
            table.n_false += 1;
            table.false_matched += usize::from(matched);
        }
    }
    BatchOutcome { n, reports, table }
}

/// Builds the labeled training set by running the front of the pipeline over
/// every `(body, mic)` recording pair; the label is positive exactly on the
/// diagonal. Pairs the pipeline cannot analyse contribute a zero feature
/// vector with their natural label. Positive examples appear `replication`
/// times in total.
pub fn build_training_set(
    acc_recordings: &[SampledSignal],
    mic_recordings: &[SampledSignal],
    replication: usize,
    cfg: &PipelineConfig,
) -> Result<Vec<LabeledExample>> {
    assert!(replication >= 1, "replication factor must be at least 1");
    if acc_recordings.len() != mic_recordings.len() {
        return Err(CoreError::InputError(
            "need equally many body and microphone recordings".into(),
        ));
    }
    let n = acc_recordings.len();
    let base = par::map_indices(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let fv = match run_front(&acc_recordings[i], &mic_recordings[j], cfg) {
            Ok((FrontOutcome::Features { fv, .. }, _, _)) => fv,
            _ => FeatureVector::zeros(),
        };
        LabeledExample {
            fv,
            label: if i == j { Label::Match } else { Label::NonMatch },
            source: (i, j),
        }
    });
    let mut out = Vec::with_capacity(n * n + n * (replication - 1));
    for ex in base {
        let copies = if ex.label == Label::Match {
            replication
        } else {
            1
        };
        for _ in 0..copies {
            out.push(ex.clone());
        }
    }
    Ok(out)
}
