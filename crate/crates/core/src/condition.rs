//! Experimental factors shared by the arranger, the study engine and the analysis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which melody generator produced a stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    A,
    B,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::A, Algorithm::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::A => "A",
            Algorithm::B => "B",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Algorithm::A),
            "B" | "b" => Ok(Algorithm::B),
            other => Err(format!("unknown algorithm tag `{other}`, expected A or B")),
        }
    }
}

/// How a stimulus is presented: melody alone on piano, or the group arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "piano")]
    PianoSolo,
    #[serde(rename = "group")]
    Group,
}

impl Modality {
    pub const ALL: [Modality; 2] = [Modality::PianoSolo, Modality::Group];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Modality {
        match self {
            Modality::PianoSolo => Modality::Group,
            Modality::Group => Modality::PianoSolo,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::PianoSolo => "piano",
            Modality::Group => "group",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "piano" | "pianosolo" | "piano_solo" | "piano-solo" => Ok(Modality::PianoSolo),
            "group" => Ok(Modality::Group),
            other => Err(format!(
                "unknown modality `{other}`, expected piano or group"
            )),
        }
    }
}
