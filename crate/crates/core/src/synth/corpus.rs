//! Multi-speaker command corpora: several synthetic speakers, each with a
//! handful of distinct utterances, used by the evaluation and attack
//! benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;

use super::{synth_utterance, Formant, PlanItem, SynthConfig, UtterancePair};

/// A synthetic speaker and their recorded utterances.
#[derive(Debug, Clone)]
pub struct SpeakerCorpus {
    pub speaker_id: usize,
    pub f0_base_hz: f64,
    pub utterances: Vec<UtterancePair>,
}

/// Vowel-like formant targets the corpus draws words from.
const WORD_FORMANTS: &[(f64, f64, f64)] = &[
    (270.0, 2290.0, 3010.0),
    (390.0, 1990.0, 2550.0),
    (530.0, 1840.0, 2480.0),
    (660.0, 1720.0, 2410.0),
    (640.0, 1190.0, 2390.0),
    (730.0, 1090.0, 2440.0),
    (560.0, 920.0, 2410.0),
    (590.0, 880.0, 2540.0),
    (440.0, 1020.0, 2240.0),
    (300.0, 870.0, 2240.0),
    (490.0, 1350.0, 1690.0),
    (500.0, 1500.0, 2500.0),
];

/// Synthesizes `n_speakers` speakers with `utterances_each` distinct
/// utterances. Speakers differ in base pitch; utterances differ in word
/// content and per-word pitch contour. Deterministic in `seed`.
pub fn synth_command_corpus(
    seed: u64,
    n_speakers: usize,
    utterances_each: usize,
) -> Result<Vec<SpeakerCorpus>> {
    (0..n_speakers)
        .map(|sp| {
            let f0_base = 100.0 + 130.0 * sp as f64 / n_speakers.max(1) as f64;
            let utterances = (0..utterances_each)
                .map(|u| {
                    let utt_seed = seed
                        .wrapping_mul(0x9E3779B97F4A7C15)
                        .wrapping_add((sp as u64) << 32 | u as u64);
                    let mut rng = ChaCha20Rng::seed_from_u64(utt_seed);
                    let n_words = 2 + (rng.random::<u32>() % 2) as usize;
                    let mut plan = Vec::new();
                    for w in 0..n_words {
                        if w > 0 {
                            plan.push(PlanItem::pause(0.15 + 0.1 * rng.random::<f64>()));
                        }
                        let (f1, f2, f3) =
                            WORD_FORMANTS[rng.random_range(0..WORD_FORMANTS.len())];
                        let contour = 0.82 + 0.36 * rng.random::<f64>();
                        let f0 = (f0_base * contour).clamp(81.0, 332.0);
                        let dur = 0.24 + 0.12 * rng.random::<f64>();
                        plan.push(PlanItem::voiced(
                            f0,
                            vec![
                                Formant::new(f1, 90.0),
                                Formant::new(f2, 120.0),
                                Formant::new(f3, 160.0),
                            ],
                            dur,
                        ));
                    }
                    let cfg = SynthConfig {
                        f0_hz: f0_base.clamp(81.0, 332.0),
                        seed: utt_seed,
                        ..SynthConfig::default()
                    };
                    synth_utterance(&cfg, &plan)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SpeakerCorpus {
                speaker_id: sp,
                f0_base_hz: f0_base,
                utterances,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape_and_determinism() {
        let a = synth_command_corpus(5, 3, 4).unwrap();
        assert_eq!(a.len(), 3);
        for sp in &a {
            assert_eq!(sp.utterances.len(), 4);
        }
        let b = synth_command_corpus(5, 3, 4).unwrap();
        assert_eq!(
            a[1].utterances[2].mic.samples(),
            b[1].utterances[2].mic.samples()
        );
        let c = synth_command_corpus(6, 3, 4).unwrap();
        assert_ne!(
            a[1].utterances[2].mic.samples(),
            c[1].utterances[2].mic.samples()
        );
    }

    #[test]
    fn speakers_have_distinct_base_pitch() {
        let corpus = synth_command_corpus(1, 5, 1).unwrap();
        for w in corpus.windows(2) {
            assert!(w[1].f0_base_hz > w[0].f0_base_hz);
        }
    }
}
