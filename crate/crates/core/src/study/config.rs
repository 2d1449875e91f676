use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::arrange::StimulusManifest;
use crate::condition::{Algorithm, Modality};

pub const STIMULUS_COUNT: usize = 8;
pub const PAGE_SIZE: usize = 4;
/// Three and a half minutes.
pub const DEFAULT_MIN_DURATION_S: u64 = 210;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusAudio {
    pub piano: String,
    pub group: String,
}

impl StimulusAudio {
    pub fn get(&self, modality: Modality) -> &str {
        match modality {
            Modality::PianoSolo => &self.piano,
            Modality::Group => &self.group,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusRef {
    pub id: String,
    pub algorithm: Algorithm,
    pub audio: StimulusAudio,
}

/// A forced-choice item with a known answer, shown on the final page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionCheck {
    pub prompt: String,
    #[serde(default)]
    pub options: Vec<String>,
    pub expected: String,
}

impl Default for AttentionCheck {
    fn default() -> Self {
        AttentionCheck {
            prompt:
                "To show that you are reading carefully, select the second option from this list."
                    .into(),
            options: vec![
                "Strongly agree".into(),
                "Agree".into(),
                "Disagree".into(),
                "Strongly disagree".into(),
            ],
            expected: "Agree".into(),
        }
    }
}

/// Settings that do not depend on the stimulus set (the `serve --config` file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySettings {
    pub attention_check: AttentionCheck,
    pub min_duration_s: u64,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            attention_check: AttentionCheck::default(),
            min_duration_s: DEFAULT_MIN_DURATION_S,
        }
    }
}

impl StudySettings {
    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let text = fs::read_to_string(path).map_err(|source| StudyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| StudyError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub stimuli: Vec<StimulusRef>,
    pub attention_check: AttentionCheck,
    pub min_duration_s: u64,
}

impl StudyConfig {
    pub fn new(
        stimuli: Vec<StimulusRef>,
        attention_check: AttentionCheck,
        min_duration_s: u64,
    ) -> Result<Self, StudyError> {
        let config = StudyConfig {
            stimuli,
            attention_check,
            min_duration_s,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_manifest(
        manifest: &StimulusManifest,
        settings: StudySettings,
    ) -> Result<Self, StudyError> {
        let stimuli = manifest
            .stimuli
            .iter()
            .map(|e| StimulusRef {
                id: e.id.clone(),
                algorithm: e.algorithm,
                audio: StimulusAudio {
                    piano: e.piano_audio.clone(),
                    group: e.group_audio.clone(),
                },
            })
            .collect();
        Self::new(stimuli, settings.attention_check, settings.min_duration_s)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |msg: String| Err(StudyError::Config(msg));
        if self.stimuli.len() != STIMULUS_COUNT {
            return bad(format!(
                "expected {STIMULUS_COUNT} stimuli, got {}",
                self.stimuli.len()
            ));
        }
        for alg in Algorithm::ALL {
            let n = self.stimuli.iter().filter(|s| s.algorithm == alg).count();
            if n != STIMULUS_COUNT / 2 {
                return bad(format!("algorithm {alg} has {n} stimuli, expected 4"));
            }
        }
        let mut ids = HashSet::new();
        for s in &self.stimuli {
            if s.id.is_empty() || !ids.insert(s.id.as_str()) {
                return bad(format!("stimulus id `{}` is empty or repeated", s.id));
            }
            if s.audio.piano.is_empty() || s.audio.group.is_empty() {
                return bad(format!(
                    "stimulus `{}` lacks audio for both modalities",
                    s.id
                ));
            }
        }
        if self.attention_check.expected.trim().is_empty() {
            return bad("attention check needs an expected answer".into());
        }
        Ok(())
    }

    pub fn stimulus(&self, id: &str) -> Option<&StimulusRef> {
        self.stimuli.iter().find(|s| s.id == id)
    }
}

#[cfg(test)]
pub(crate) fn sample_config() -> StudyConfig {
    let stimuli = (1..=8)
        .map(|i| StimulusRef {
            id: format!("m{i}"),
            algorithm: if i <= 4 { Algorithm::A } else { Algorithm::B },
            audio: StimulusAudio {
                piano: format!("m{i}_piano.mp3"),
                group: format!("m{i}_group.mp3"),
            },
        })
        .collect();
    StudyConfig::new(stimuli, AttentionCheck::default(), DEFAULT_MIN_DURATION_S).unwrap()
}
