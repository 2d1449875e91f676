use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ArrangeError;
use crate::condition::{Algorithm, Modality};

/// Files for one melody, relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead_sheet: Option<String>,
    pub piano_midi: String,
    pub group_midi: String,
    pub piano_audio: String,
    pub group_audio: String,
}

impl ManifestEntry {
    pub fn audio(&self, modality: Modality) -> &str {
        match modality {
            Modality::PianoSolo => &self.piano_audio,
            Modality::Group => &self.group_audio,
        }
    }

    pub fn midi(&self, modality: Modality) -> &str {
        match modality {
            Modality::PianoSolo => &self.piano_midi,
            Modality::Group => &self.group_midi,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusManifest {
    pub stimuli: Vec<ManifestEntry>,
}

impl StimulusManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<Self, ArrangeError> {
        let text = fs::read_to_string(path).map_err(|source| ArrangeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArrangeError> {
        fs::write(path, self.to_json()).map_err(|source| ArrangeError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
