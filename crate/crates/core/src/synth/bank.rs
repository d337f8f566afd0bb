//! The 44-entry phoneme bank: one two-word utterance pair per English
//! phoneme class, with formant targets loaded from a data file.

use serde::{Deserialize, Serialize};

use crate::config::fnv1a64;
use crate::error::{CoreError, Result};

use super::{synth_utterance, Formant, PlanItem, SynthConfig, UtterancePair};

const BANK_DATA: &str = include_str!("../../data/phoneme_bank.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhonemeKind {
    Vowel,
    Consonant,
}

#[derive(Debug, Clone, Deserialize)]
struct RawItem {
    #[serde(rename = "type")]
    kind: String,
    formants: Vec<(f64, f64)>,
    dur: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct RawEntry {
    name: String,
    kind: PhonemeKind,
    f0_hz: f64,
    items: Vec<RawItem>,
}

/// One synthesized phoneme example plus its identity.
#[derive(Debug, Clone)]
pub struct BankEntry {
    pub name: String,
    pub kind: PhonemeKind,
    pub f0_hz: f64,
    pub pair: UtterancePair,
}

/// Synthesizes the 44-phoneme bank: each entry says its phoneme in two short
/// words separated by a pause, with pairwise-distinct pitch and formant
/// plans. Deterministic in `seed`.
pub fn synth_phoneme_bank(seed: u64) -> Result<Vec<BankEntry>> {
    let raw: Vec<RawEntry> = serde_json::from_str(BANK_DATA)
        .map_err(|e| CoreError::InvalidConfig(format!("phoneme bank data: {e}")))?;
    raw.into_iter()
        .map(|entry| {
            let word = |f0_scale: f64, dur_scale: f64| -> Vec<PlanItem> {
                entry
                    .items
                    .iter()
                    .map(|item| {
                        let formants = item
                            .formants
                            .iter()
                            .map(|&(c, b)| Formant::new(c, b))
                            .collect();
                        if item.kind == "voiced" {
                            PlanItem::voiced(
                                entry.f0_hz * f0_scale,
                                formants,
                                item.dur * dur_scale,
                            )
                        } else {
                            PlanItem::unvoiced(formants, item.dur * dur_scale)
                        }
                    })
                    .collect()
            };
            let mut plan = word(1.0, 1.0);
            plan.push(PlanItem::pause(0.20));
            plan.extend(word(0.97, 1.1));

            let cfg = SynthConfig {
                f0_hz: entry.f0_hz,
                formants: Vec::new(),
                duration_sec: plan.iter().map(|p| p.duration_sec).sum(),
                seed: seed ^ fnv1a64(entry.name.as_bytes()),
                ..SynthConfig::default()
            };
            let pair = synth_utterance(&cfg, &plan)?;
            Ok(BankEntry {
                name: entry.name,
                kind: entry.kind,
                f0_hz: entry.f0_hz,
                pair,
            })
        })
        .collect()
}
