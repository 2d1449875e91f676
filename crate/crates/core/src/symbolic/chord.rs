use std::fmt;

use serde::{Deserialize, Serialize};

use super::{PitchClass, SymbolicError};

/// Number of chord classes: 12 roots × 4 triad qualities.
pub const CHORD_CLASSES: usize = 48;

/// Root-position triad quality. The discriminant is the offset added to `4·d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChordQuality {
    Major = 0,
    Minor = 1,
    Diminished = 2,
    Augmented = 3,
}

impl ChordQuality {
    pub const ALL: [ChordQuality; 4] = [
        ChordQuality::Major,
        ChordQuality::Minor,
        ChordQuality::Diminished,
        ChordQuality::Augmented,
    ];

    pub fn offset(self) -> u8 {
        self as u8
    }

    pub fn from_offset(offset: u8) -> Option<Self> {
        Self::ALL.get(offset as usize).copied()
    }

    /// Semitone intervals of root, third and fifth above the root.
    pub fn intervals(self) -> [u8; 3] {
        match self {
            ChordQuality::Major => [0, 4, 7],
            ChordQuality::Minor => [0, 3, 7],
            ChordQuality::Diminished => [0, 3, 6],
            ChordQuality::Augmented => [0, 4, 8],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChordQuality::Major => "major",
            ChordQuality::Minor => "minor",
            ChordQuality::Diminished => "diminished",
            ChordQuality::Augmented => "augmented",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ChordQuality::Major => "maj",
            ChordQuality::Minor => "min",
            ChordQuality::Diminished => "dim",
            ChordQuality::Augmented => "aug",
        }
    }

    /// Reduces a chord-quality symbol to its root-position triad.
    ///
    /// Sevenths and other extensions keep their underlying triad. Returns
    /// `Ok(None)` for recognised chords outside the triad vocabulary
    /// (suspensions, power chords) and an error for unknown symbols.
    pub fn reduce(symbol: &str) -> Result<Option<ChordQuality>, SymbolicError> {
        let s = symbol.trim();
        let q = match s {
            "" | "M" | "maj" | "major" | "7" | "dom7" | "dominant" | "maj7" | "M7"
            | "major-seventh" | "dominant-seventh" | "6" | "maj6" | "major-sixth" | "9"
            | "maj9" | "add9" | "11" | "13" => Some(ChordQuality::Major),
            "m" | "min" | "minor" | "-" | "m7" | "min7" | "minor-seventh" | "m6" | "min6"
            | "minor-sixth" | "m9" | "min9" | "mmaj7" | "minmaj7" | "minor-major" | "m11" => {
                Some(ChordQuality::Minor)
            }
            "dim" | "diminished" | "o" | "°" | "dim7" | "o7" | "diminished-seventh" | "m7b5"
            | "ø" | "ø7" | "half-diminished" => Some(ChordQuality::Diminished),
            "aug" | "augmented" | "+" | "aug7" | "+7" | "augmented-seventh" => {
                Some(ChordQuality::Augmented)
            }
            "sus" | "sus2" | "sus4" | "7sus4" | "suspended-second" | "suspended-fourth" | "5"
            | "power" | "pedal" | "N.C." | "none" | "other" => None,
            _ => return Err(SymbolicError::ChordSymbol(symbol.to_string())),
        };
        Ok(q)
    }
}

impl fmt::Display for ChordQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A triad relative to a tonic: `code = 4·distance + quality`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChordLabel {
    distance: u8,
    quality: ChordQuality,
}

impl ChordLabel {
    pub fn new(distance: u8, quality: ChordQuality) -> Result<Self, SymbolicError> {
        if distance >= 12 {
            return Err(SymbolicError::PitchClassRange(distance.into()));
        }
        Ok(ChordLabel { distance, quality })
    }

    pub fn from_code(code: usize) -> Result<Self, SymbolicError> {
        if code >= CHORD_CLASSES {
            return Err(SymbolicError::CodeRange(code as i64));
        }
        let quality = ChordQuality::from_offset((code % 4) as u8).expect("code % 4 < 4");
        Ok(ChordLabel {
            distance: (code / 4) as u8,
            quality,
        })
    }

    pub fn of_chord(tonic: PitchClass, root: PitchClass, quality: ChordQuality) -> Self {
        ChordLabel {
            distance: root.distance_from(tonic),
            quality,
        }
    }

    pub fn distance(self) -> u8 {
        self.distance
    }

    pub fn quality(self) -> ChordQuality {
        self.quality
    }

    pub fn code(self) -> u8 {
        4 * self.distance + self.quality.offset()
    }

    pub fn root(self, tonic: PitchClass) -> PitchClass {
        tonic.transpose(i32::from(self.distance))
    }
}

pub fn encode_chord(tonic: PitchClass, root: PitchClass, quality: ChordQuality) -> u8 {
    ChordLabel::of_chord(tonic, root, quality).code()
}

pub fn decode_chord(
    tonic: PitchClass,
    code: usize,
) -> Result<(PitchClass, ChordQuality), SymbolicError> {
    let label = ChordLabel::from_code(code)?;
    Ok((label.root(tonic), label.quality()))
}
