//! Synthetic respondents for exercising the study engine and the analysis.
//!
//! Each participant scores every stimulus on a page with a latent utility
//!
//! ```text
//! u = [algorithm = A] · (δ + γ·[modality = Group]) · (1 + κ·[musician]) + ε,   ε ~ N(0, σ²)
//! ```
//!
//! and ranks the page by descending utility (rank 1 = highest). Participants
//! go through the real engine on a manual clock, so exclusions and export
//! follow the same code paths as live sessions.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::condition::{Algorithm, Modality};
use crate::study::{
    AttentionCheck, FinalizeRequest, ManualClock, ResponseExport, StimulusAudio, StimulusRef,
    StudyConfig, StudyEngine, StudyError, DEFAULT_MIN_DURATION_S,
};

/// Expertise mix of the reference cohort, levels 1 to 6.
pub const REFERENCE_EXPERTISE_MIX: [f64; 6] = [6.0, 17.0, 8.0, 5.0, 15.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub participants: usize,
    pub seed: u64,
    /// δ: utility advantage of algorithm A.
    pub algorithm_effect: f64,
    /// γ: extra advantage of A when heard in the group arrangement.
    pub group_amplification: f64,
    /// κ: relative scaling of the A advantage for musicians.
    pub musician_amplification: f64,
    /// σ: standard deviation of the utility noise.
    pub noise: f64,
    pub expertise_weights: [f64; 6],
    /// Extra participants who fail the attention check.
    pub inattentive: usize,
    /// Extra participants who finish under the minimum duration.
    pub hasty: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            participants: 61,
            seed: 0,
            algorithm_effect: 0.7,
            group_amplification: 1.5,
            musician_amplification: 0.0,
            noise: 1.0,
            expertise_weights: REFERENCE_EXPERTISE_MIX,
            inattentive: 0,
            hasty: 0,
        }
    }
}

impl SimulationConfig {
    fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: &str| Err(StudyError::Config(m.to_string()));
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return bad("noise must be positive");
        }
        if ![
            self.algorithm_effect,
            self.group_amplification,
            self.musician_amplification,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return bad("effects must be finite");
        }
        if self
            .expertise_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
            || self.expertise_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("expertise weights must be non-negative with a positive sum");
        }
        Ok(())
    }

    /// Mean utility of a stimulus for one listener.
    pub fn mean_utility(&self, algorithm: Algorithm, modality: Modality, musician: bool) -> f64 {
        if algorithm == Algorithm::B {
            return 0.0;
        }
        let group = if modality == Modality::Group {
            1.0
        } else {
            0.0
        };
        let scale = 1.0
            + if musician {
                self.musician_amplification
            } else {
                0.0
            };
        (self.algorithm_effect + self.group_amplification * group) * scale
    }
}

/// Eight placeholder stimuli, four per algorithm.
pub fn synthetic_study_config() -> StudyConfig {
    let stimuli = Algorithm::ALL
        .iter()
        .flat_map(|&alg| {
            (1..=4).map(move |i| {
                let id = format!("{}{i}", alg.as_str().to_ascii_lowercase());
                StimulusRef {
                    audio: StimulusAudio {
                        piano: format!("{id}_piano.mp3"),
                        group: format!("{id}_group.mp3"),
                    },
                    id,
                    algorithm: alg,
                }
            })
        })
        .collect();
    StudyConfig::new(stimuli, AttentionCheck::default(), DEFAULT_MIN_DURATION_S)
        .expect("synthetic config is balanced")
}

#[derive(Clone, Copy, PartialEq)]
enum Behaviour {
    Diligent,
    Inattentive,
    Hasty,
}

/// Runs the whole cohort through an in-memory engine and exports the result.
pub fn simulate(config: &SimulationConfig) -> Result<ResponseExport, StudyError> {
    config.validate()?;
    let study = synthetic_study_config();
    let clock = Arc::new(ManualClock::new(1_700_000_000_000));
    let engine = StudyEngine::in_memory(study.clone(), config.seed, clock.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_cafe_f00d_d00d);
    let noise = Normal::new(0.0, config.noise).expect("validated noise");
    let expertise = WeightedIndex::new(config.expertise_weights).expect("validated weights");

    let mut cohort = vec![Behaviour::Diligent; config.participants];
    cohort.extend(std::iter::repeat_n(
        Behaviour::Inattentive,
        config.inattentive,
    ));
    cohort.extend(std::iter::repeat_n(Behaviour::Hasty, config.hasty));
    rand::seq::SliceRandom::shuffle(cohort.as_mut_slice(), &mut rng);

    for behaviour in cohort {
        let session = engine.create_session(true)?;
        let level = expertise.sample(&mut rng) as u8 + 1;
        let musician = level >= 3;
        for (slot, page) in session.pages.iter().enumerate() {
            let modality = session.modality_order[slot];
            let mut scored: Vec<(f64, &String)> = page
                .iter()
                .map(|id| {
                    let alg = study
                        .stimulus(id)
                        .expect("page ids come from the config")
                        .algorithm;
                    (
                        config.mean_utility(alg, modality, musician) + noise.sample(&mut rng),
                        id,
                    )
                })
                .collect();
            scored.sort_by(|x, y| y.0.total_cmp(&x.0));
            let order = scored.into_iter().map(|(_, id)| id.clone()).collect();
            engine.submit_ranking(&session.id, slot as u8 + 1, order)?;
        }
        let secs = match behaviour {
            Behaviour::Hasty => rng.random_range(60..study.min_duration_s),
            _ => rng.random_range(study.min_duration_s + 30..=900),
        };
        clock.advance_secs(secs);
        let check = &study.attention_check;
        let attention_answer = match behaviour {
            Behaviour::Inattentive => check
                .options
                .iter()
                .find(|o| **o != check.expected)
                .cloned()
                .unwrap_or_else(|| "no".into()),
            _ => check.expected.clone(),
        };
        let gender = match rng.random_range(0..3) {
            0 => None,
            1 => Some("female".to_string()),
            _ => Some("male".to_string()),
        };
        engine.finalize(
            &session.id,
            FinalizeRequest {
                age: Some(rng.random_range(18..=70)),
                gender,
                expertise: level,
                attention_answer,
            },
        )?;
    }
    Ok(engine.export())
}
