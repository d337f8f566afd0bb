//! Adversary simulations against the matching pipeline: reconstructed
//! (mangled) voice, replay and impersonation cross-pairing, and acoustic
//! injection into the body channel, plus the false-positive decay checker.

mod mfcc;
mod montecarlo;

pub use mfcc::{
    mfcc_extract, mfcc_invert, spectral_envelope_correlation, MfccMatrix, MfccParams,
};
pub use montecarlo::{fp_decay_montecarlo, FpDecayRow, ScoreDistribution, UniformScores};

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::decision::ClassifierModel;
use crate::par;
use crate::pipeline::match_pair;
use crate::signal::SampledSignal;
use crate::synth::{make_noise, NoiseKind, SpeakerCorpus, UtterancePair};

/// Which adversary a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackScenario {
    Mangled,
    Replay,
    Impersonation,
    AcousticInjection,
}

/// Outcome of an attack run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scenario: AttackScenario,
    pub trials: usize,
    pub accepted: usize,
    /// `1 - accepted/trials`; NaN when no trials ran.
    pub rejection_rate: f64,
}

impl AttackReport {
    fn new(scenario: AttackScenario, trials: usize, accepted: usize) -> Self {
        let rejection_rate = if trials == 0 {
            f64::NAN
        } else {
            1.0 - accepted as f64 / trials as f64
        };
        Self {
            scenario,
            trials,
            accepted,
            rejection_rate,
        }
    }
}

fn accepts(
    acc: &SampledSignal,
    mic: &SampledSignal,
    model: &ClassifierModel,
    cfg: &PipelineConfig,
) -> bool {
    match_pair(acc, mic, model, cfg)
        .map(|r| r.decision.is_match())
        .unwrap_or(false)
}

/// Reconstructed-voice attack: for every utterance and band count, the
/// microphone signal is reduced to MFCCs, rebuilt, and matched against the
/// genuine body-channel signal.
pub fn run_mangled_attack(
    corpus: &[UtterancePair],
    model: &ClassifierModel,
    cfg: &PipelineConfig,
    base_params: &MfccParams,
    bands: &[usize],
    phase_iters: usize,
) -> AttackReport {
    let jobs: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|i| bands.iter().map(move |&b| (i, b)))
        .collect();
    let results = par::map_items(&jobs, |&(i, n_bands)| {
        let pair = &corpus[i];
        let p = MfccParams {
            n_mel_bands: n_bands,
            rate_hz: pair.mic.rate_hz(),
            ..base_params.clone()
        };
        let reconstructed = mfcc_extract(&pair.mic, &p)
            .and_then(|coeffs| mfcc_invert(&coeffs, &p, phase_iters));
        match reconstructed {
            Ok(mic) => accepts(&pair.acc, &mic, model, cfg),
            Err(_) => false,
        }
    });
    let accepted = results.into_iter().filter(|&a| a).count();
    AttackReport::new(AttackScenario::Mangled, jobs.len(), accepted)
}

/// Replay attack: within each speaker, every body-channel recording is
/// paired with the microphone recording of every *other* utterance of the
/// same speaker.
pub fn run_replay_attack(
    speakers: &[SpeakerCorpus],
    model: &ClassifierModel,
    cfg: &PipelineConfig,
) -> AttackReport {
    let mut jobs: Vec<(&SampledSignal, &SampledSignal)> = Vec::new();
    for sp in speakers {
        for (a, ua) in sp.utterances.iter().enumerate() {
            for (b, ub) in sp.utterances.iter().enumerate() {
                if a != b {
                    jobs.push((&ua.acc, &ub.mic));
                }
            }
        }
    }
    let accepted = par::map_items(&jobs, |&(acc, mic)| accepts(acc, mic, model, cfg))
        .into_iter()
        .filter(|&a| a)
        .count();
    AttackReport::new(AttackScenario::Replay, jobs.len(), accepted)
}

/// Impersonation attack: cross-speaker pairings, body channel of one speaker
/// against microphone recordings of every other speaker.
pub fn run_impersonation_attack(
    speakers: &[SpeakerCorpus],
    model: &ClassifierModel,
    cfg: &PipelineConfig,
) -> AttackReport {
    let mut jobs: Vec<(&SampledSignal, &SampledSignal)> = Vec::new();
    for sa in speakers {
        for sb in speakers {
            if sa.speaker_id == sb.speaker_id {
                continue;
            }
            for ua in &sa.utterances {
                for ub in &sb.utterances {
                    jobs.push((&ua.acc, &ub.mic));
                }
            }
        }
    }
    let accepted = par::map_items(&jobs, |&(acc, mic)| accepts(acc, mic, model, cfg))
        .into_iter()
        .filter(|&a| a)
        .count();
    AttackReport::new(AttackScenario::Impersonation, jobs.len(), accepted)
}

/// One sweep step of the injection attack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectionRow {
    pub level: f64,
    pub accepted: bool,
}

/// Injection sweep outcome: the aggregate report plus acceptance per induced
/// energy level.
#[derive(Debug, Clone)]
pub struct InjectionReport {
    pub report: AttackReport,
    pub rows: Vec<InjectionRow>,
}

/// Acoustic injection: sweeps the induced body-channel energy from zero to
/// `max_level` in `steps` while the adversary plays `mic_command` over the
/// air. The induced vibration is noise uncorrelated with the command.
pub fn run_injection_attack(
    max_level: f64,
    steps: usize,
    mic_command: &SampledSignal,
    model: &ClassifierModel,
    cfg: &PipelineConfig,
    seed: u64,
) -> InjectionReport {
    let levels: Vec<f64> = (0..=steps)
        .map(|i| max_level * i as f64 / steps.max(1) as f64)
        .collect();
    let rows: Vec<InjectionRow> = par::map_items(&levels, |&level| {
        let acc = make_noise(
            NoiseKind::White,
            level,
            mic_command.duration_sec(),
            seed ^ level.to_bits(),
        );
        InjectionRow {
            level,
            accepted: accepts(&acc, mic_command, model, cfg),
        }
    });
    let accepted = rows.iter().filter(|r| r.accepted).count();
    InjectionReport {
        report: AttackReport::new(AttackScenario::AcousticInjection, rows.len(), accepted),
        rows,
    }
}
