use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SymbolicError;

const SHARP_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// A semitone class in `0..=11`, with 0 = C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PitchClass(u8);

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);
    pub const D: PitchClass = PitchClass(2);
    pub const E: PitchClass = PitchClass(4);
    pub const F: PitchClass = PitchClass(5);
    pub const G: PitchClass = PitchClass(7);
    pub const A: PitchClass = PitchClass(9);
    pub const B: PitchClass = PitchClass(11);

    pub fn new(value: u8) -> Result<Self, SymbolicError> {
        if value < 12 {
            Ok(PitchClass(value))
        } else {
            Err(SymbolicError::PitchClassRange(value.into()))
        }
    }

    /// Reduces any integer modulo 12.
    pub fn wrapping(value: i64) -> Self {
        PitchClass(value.rem_euclid(12) as u8)
    }

    pub fn of_midi(pitch: u8) -> Self {
        PitchClass(pitch % 12)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Upward semitone distance from `tonic` to `self`, in `0..=11`.
    pub fn distance_from(self, tonic: PitchClass) -> u8 {
        (self.0 + 12 - tonic.0) % 12
    }

    pub fn transpose(self, semitones: i32) -> Self {
        PitchClass::wrapping(i64::from(self.0) + i64::from(semitones))
    }

    pub fn all() -> impl Iterator<Item = PitchClass> {
        (0..12).map(PitchClass)
    }

    pub fn name(self) -> &'static str {
        SHARP_NAMES[self.0 as usize]
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PitchClass {
    type Err = SymbolicError;

    /// Accepts a letter name followed by any number of `#`/`♯` or `b`/`♭`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let mut chars = trimmed.chars();
        let base: i64 = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('C') => 0,
            Some('D') => 2,
            Some('E') => 4,
            Some('F') => 5,
            Some('G') => 7,
            Some('A') => 9,
            Some('B') => 11,
            _ => return Err(SymbolicError::NoteName(s.to_string())),
        };
        let mut offset = 0i64;
        for c in chars {
            match c {
                '#' | '♯' => offset += 1,
                'b' | '♭' => offset -= 1,
                _ => return Err(SymbolicError::NoteName(s.to_string())),
            }
        }
        Ok(PitchClass::wrapping(base + offset))
    }
}

impl Serialize for PitchClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PitchClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_accidentals() {
        assert_eq!("Bb".parse::<PitchClass>().unwrap(), PitchClass(10));
        assert_eq!("B♭".parse::<PitchClass>().unwrap(), PitchClass(10));
        assert_eq!("E#".parse::<PitchClass>().unwrap(), PitchClass::F);
        assert_eq!("Cb".parse::<PitchClass>().unwrap(), PitchClass::B);
        assert_eq!("f##".parse::<PitchClass>().unwrap(), PitchClass::G);
        assert!("H".parse::<PitchClass>().is_err());
        assert!("Cx".parse::<PitchClass>().is_err());
    }

    #[test]
    fn distance_wraps() {
        assert_eq!(PitchClass::D.distance_from(PitchClass::G), 7);
        assert_eq!(PitchClass::G.distance_from(PitchClass::G), 0);
        assert_eq!(PitchClass::new(10).unwrap().distance_from(PitchClass::G), 3);
        assert!(PitchClass::new(12).is_err());
    }
}
