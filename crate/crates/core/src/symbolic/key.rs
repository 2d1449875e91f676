//! Key finding by correlating a duration-weighted pitch-class histogram
//! against the Krumhansl-Kessler major and minor probe-tone profiles.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Melody, PitchClass, SymbolicError};

pub const MAJOR_PROFILE: [f64; 12] = [
    6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88,
];
pub const MINOR_PROFILE: [f64; 12] = [
    6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key {
    pub tonic: PitchClass,
    pub mode: Mode,
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Major => "major",
            Mode::Minor => "minor",
        };
        write!(f, "{} {mode}", self.tonic)
    }
}

/// Total sounding ticks per pitch class.
pub fn pitch_class_histogram(melody: &Melody) -> [f64; 12] {
    let mut hist = [0.0; 12];
    for note in melody.notes() {
        hist[note.pitch_class().value() as usize] += f64::from(note.duration);
    }
    hist
}

/// Pearson correlation of the histogram, read from `tonic` upwards, with a
/// profile. Summing in tonic-relative order makes the scores of a
/// transposed melody bit-identical to the original's.
fn pearson(histogram: &[f64; 12], tonic: usize, profile: &[f64; 12]) -> f64 {
    let xs: [f64; 12] = std::array::from_fn(|d| histogram[(tonic + d) % 12]);
    let mean_x = xs.iter().sum::<f64>() / 12.0;
    let mean_y = profile.iter().sum::<f64>() / 12.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(profile) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Correlation of the histogram with the profile of every key, indexed `[mode][tonic]`.
pub fn key_correlations(histogram: &[f64; 12]) -> [[f64; 12]; 2] {
    let mut out = [[0.0; 12]; 2];
    for (m, profile) in [MAJOR_PROFILE, MINOR_PROFILE].iter().enumerate() {
        for (tonic, score) in out[m].iter_mut().enumerate() {
            *score = pearson(histogram, tonic, profile);
        }
    }
    out
}

/// Best-correlated key, ignoring any declared tonic.
///
/// Ties go to the lower tonic pitch class, then to major.
pub fn detect_key(melody: &Melody) -> Result<Key, SymbolicError> {
    if melody.is_empty() {
        return Err(SymbolicError::EmptyInput);
    }
    let scores = key_correlations(&pitch_class_histogram(melody));
    let mut best = Key {
        tonic: PitchClass::C,
        mode: Mode::Major,
    };
    let mut best_score = f64::NEG_INFINITY;
    for tonic in PitchClass::all() {
        for (m, mode) in [Mode::Major, Mode::Minor].into_iter().enumerate() {
            let score = scores[m][tonic.value() as usize];
            if score > best_score {
                best_score = score;
                best = Key { tonic, mode };
            }
        }
    }
    Ok(best)
}

/// The tonic used for encoding: the declared one when present, otherwise estimated.
pub fn estimate_key(melody: &Melody) -> Result<PitchClass, SymbolicError> {
    if melody.is_empty() {
        return Err(SymbolicError::EmptyInput);
    }
    match melody.declared_tonic() {
        Some(t) => Ok(t),
        None => detect_key(melody).map(|k| k.tonic),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{NoteEvent, TimeSignature};

    fn melody(pitches: &[u8], tonic: Option<PitchClass>) -> Melody {
        let notes = pitches
            .iter()
            .enumerate()
            .map(|(i, &p)| NoteEvent::new(i as u32 * 480, 480, p))
            .collect();
        Melody::new(notes, 480, TimeSignature::COMMON, tonic).unwrap()
    }

    #[test]
    fn empty_melody_is_an_error() {
        let m = melody(&[], None);
        assert!(matches!(estimate_key(&m), Err(SymbolicError::EmptyInput)));
    }

    #[test]
    fn declared_tonic_short_circuits() {
        let m = melody(&[60, 62, 64, 65, 67, 69, 71, 72], Some(PitchClass::G));
        assert_eq!(estimate_key(&m).unwrap(), PitchClass::G);
    }

    #[test]
    fn a_minor_arpeggio_is_minor() {
        let m = melody(&[57, 60, 64, 69, 64, 60, 57, 56, 57], None);
        let key = detect_key(&m).unwrap();
        assert_eq!(key.tonic, PitchClass::A);
        assert_eq!(key.mode, Mode::Minor);
    }
}
