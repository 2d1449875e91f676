use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ArrangeError;
use crate::symbolic::{ChordQuality, PitchClass};

/// Lowest allowed guitar pitch (E2) and the ceiling for a voicing's bass (E3).
const GUITAR_LOW: u8 = 40;
const GUITAR_BASS_CEILING: u8 = 52;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordVoicing {
    /// Guitar pitches, ascending.
    pub guitar: Vec<u8>,
    /// Close root-position triad rooted in octave 4.
    pub close: [u8; 3],
}

/// Guitar voicings and piano triads for all 48 root-position triads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoicingChart {
    entries: BTreeMap<(PitchClass, ChordQuality), ChordVoicing>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoicingOverride {
    pub root: PitchClass,
    pub quality: ChordQuality,
    pub guitar: Vec<u8>,
}

pub fn triad_pitch_classes(root: PitchClass, quality: ChordQuality) -> [PitchClass; 3] {
    quality.intervals().map(|i| root.transpose(i32::from(i)))
}

pub fn close_triad(root: PitchClass, quality: ChordQuality) -> [u8; 3] {
    let base = 60 + root.value();
    quality.intervals().map(|i| base + i)
}

/// Root-position close triad whose root is the lowest pitch at or above E2.
pub fn fallback_voicing(root: PitchClass, quality: ChordQuality) -> Vec<u8> {
    let base = GUITAR_LOW + root.distance_from(PitchClass::E);
    quality.intervals().iter().map(|i| base + i).collect()
}

fn open_shape(root: PitchClass, quality: ChordQuality) -> Option<Vec<u8>> {
    use ChordQuality::{Major, Minor};
    let shape: &[u8] = match (root.value(), quality) {
        (4, Major) => &[40, 47, 52, 56, 59, 64],
        (4, Minor) => &[40, 47, 52, 55, 59, 64],
        (9, Major) => &[45, 52, 57, 61, 64],
        (9, Minor) => &[45, 52, 57, 60, 64],
        (2, Major) => &[50, 57, 62, 66],
        (2, Minor) => &[50, 57, 62, 65],
        (7, Major) => &[43, 47, 50, 55, 59, 67],
        (0, Major) => &[48, 52, 55, 60, 64],
        _ => return None,
    };
    Some(shape.to_vec())
}

fn validate_guitar(
    root: PitchClass,
    quality: ChordQuality,
    guitar: &[u8],
) -> Result<(), ArrangeError> {
    let invalid = |reason: String| ArrangeError::InvalidVoicing {
        chord: format!("{root}:{}", quality.short_name()),
        reason,
    };
    if !(2..=6).contains(&guitar.len()) {
        return Err(invalid(format!("{} notes, expected 2 to 6", guitar.len())));
    }
    if guitar.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("pitches must be strictly ascending".into()));
    }
    if !(GUITAR_LOW..=GUITAR_BASS_CEILING).contains(&guitar[0]) {
        return Err(invalid(format!("lowest pitch {} outside E2–E3", guitar[0])));
    }
    let tones = triad_pitch_classes(root, quality);
    if let Some(p) = guitar
        .iter()
        .find(|p| !tones.contains(&PitchClass::of_midi(**p)))
    {
        return Err(invalid(format!("pitch {p} is not a chord tone")));
    }
    Ok(())
}

impl VoicingChart {
    pub fn get(&self, root: PitchClass, quality: ChordQuality) -> Option<&ChordVoicing> {
        self.entries.get(&(root, quality))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(PitchClass, ChordQuality), &ChordVoicing)> {
        self.entries.iter()
    }

    /// Replaces the guitar voicing for one chord after validating it.
    pub fn set_guitar(
        &mut self,
        root: PitchClass,
        quality: ChordQuality,
        guitar: Vec<u8>,
    ) -> Result<(), ArrangeError> {
        validate_guitar(root, quality, &guitar)?;
        self.entries.insert(
            (root, quality),
            ChordVoicing {
                guitar,
                close: close_triad(root, quality),
            },
        );
        Ok(())
    }

    /// The builtin chart with the overrides in a JSON array applied on top.
    pub fn with_overrides_json(json: &str) -> Result<Self, ArrangeError> {
        let overrides: Vec<VoicingOverride> = serde_json::from_str(json)?;
        let mut chart = builtin_voicing_chart();
        for o in overrides {
            chart.set_guitar(o.root, o.quality, o.guitar)?;
        }
        Ok(chart)
    }
}

/// Open-position shapes for E, Em, A, Am, D, Dm, G and C; every other triad
/// gets a three-note close voicing above E2.
pub fn builtin_voicing_chart() -> VoicingChart {
    let mut entries = BTreeMap::new();
    for root in PitchClass::all() {
        for quality in ChordQuality::ALL {
            let guitar =
                open_shape(root, quality).unwrap_or_else(|| fallback_voicing(root, quality));
            debug_assert!(validate_guitar(root, quality, &guitar).is_ok());
            entries.insert(
                (root, quality),
                ChordVoicing {
                    guitar,
                    close: close_triad(root, quality),
                },
            );
        }
    }
    VoicingChart { entries }
}
