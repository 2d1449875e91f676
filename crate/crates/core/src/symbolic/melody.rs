use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{PitchClass, SymbolicError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NoteEvent {
    pub onset: u32,
    pub duration: u32,
    pub pitch: u8,
}

impl NoteEvent {
    pub fn new(onset: u32, duration: u32, pitch: u8) -> Self {
        NoteEvent {
            onset,
            duration,
            pitch,
        }
    }

    pub fn end(&self) -> u32 {
        self.onset + self.duration
    }

    pub fn pitch_class(&self) -> PitchClass {
        PitchClass::of_midi(self.pitch)
    }

    /// Half-open interval intersection with `[start, end)`; touching is not overlap.
    pub fn overlaps(&self, start: u32, end: u32) -> bool {
        self.onset < end && self.end() > start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeSignature {
    pub numerator: u8,
    pub denominator: u8,
}

impl TimeSignature {
    pub const COMMON: TimeSignature = TimeSignature {
        numerator: 4,
        denominator: 4,
    };

    pub fn new(numerator: u8, denominator: u8) -> Result<Self, SymbolicError> {
        if numerator == 0 || denominator == 0 || !denominator.is_power_of_two() {
            return Err(SymbolicError::InvalidMelody(format!(
                "time signature {numerator}/{denominator}"
            )));
        }
        Ok(TimeSignature {
            numerator,
            denominator,
        })
    }

    pub fn beat_ticks(&self, ppq: u16) -> u32 {
        u32::from(ppq) * 4 / u32::from(self.denominator)
    }

    pub fn bar_ticks(&self, ppq: u16) -> u32 {
        self.beat_ticks(ppq) * u32::from(self.numerator)
    }
}

impl Default for TimeSignature {
    fn default() -> Self {
        TimeSignature::COMMON
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for TimeSignature {
    type Err = SymbolicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SymbolicError::InvalidMelody(format!("time signature `{s}`"));
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let n = n.trim().parse().map_err(|_| bad())?;
        let d = d.trim().parse().map_err(|_| bad())?;
        TimeSignature::new(n, d)
    }
}

/// A monophonic melody on an absolute tick grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Melody {
    notes: Vec<NoteEvent>,
    ppq: u16,
    time_signature: TimeSignature,
    declared_tonic: Option<PitchClass>,
}

impl Melody {
    pub fn new(
        notes: Vec<NoteEvent>,
        ppq: u16,
        time_signature: TimeSignature,
        declared_tonic: Option<PitchClass>,
    ) -> Result<Self, SymbolicError> {
        if ppq == 0 {
            return Err(SymbolicError::InvalidMelody("ppq must be positive".into()));
        }
        if time_signature.bar_ticks(ppq) == 0 {
            return Err(SymbolicError::InvalidMelody(format!(
                "ppq {ppq} too small for {time_signature}"
            )));
        }
        for (i, note) in notes.iter().enumerate() {
            if note.duration == 0 {
                return Err(SymbolicError::InvalidMelody(format!(
                    "note {i} has zero duration"
                )));
            }
            if note.pitch > 127 {
                return Err(SymbolicError::InvalidMelody(format!(
                    "note {i} pitch {} out of MIDI range",
                    note.pitch
                )));
            }
            if let Some(prev) = i.checked_sub(1).map(|j| &notes[j]) {
                if note.onset < prev.onset {
                    return Err(SymbolicError::InvalidMelody(format!(
                        "note {i} is not sorted by onset"
                    )));
                }
                if prev.end() > note.onset {
                    return Err(SymbolicError::InvalidMelody(format!(
                        "notes {} and {i} overlap; melodies must be monophonic",
                        i - 1
                    )));
                }
            }
        }
        Ok(Melody {
            notes,
            ppq,
            time_signature,
            declared_tonic,
        })
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn ppq(&self) -> u16 {
        self.ppq
    }

    pub fn time_signature(&self) -> TimeSignature {
        self.time_signature
    }

    pub fn declared_tonic(&self) -> Option<PitchClass> {
        self.declared_tonic
    }

    pub fn with_declared_tonic(mut self, tonic: Option<PitchClass>) -> Self {
        self.declared_tonic = tonic;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn bar_ticks(&self) -> u32 {
        self.time_signature.bar_ticks(self.ppq)
    }

    /// End tick of the last sounding note.
    pub fn span(&self) -> u32 {
        self.notes.iter().map(NoteEvent::end).max().unwrap_or(0)
    }

    /// Number of bars covered, rounding a partial final bar up.
    pub fn bar_count(&self) -> usize {
        self.span().div_ceil(self.bar_ticks()) as usize
    }

    /// Pads an anacrusis of `pickup_ticks` to a full bar by shifting every note right.
    pub fn padded_pickup(mut self, pickup_ticks: u32) -> Result<Self, SymbolicError> {
        let bar = self.bar_ticks();
        if pickup_ticks == 0 || pickup_ticks >= bar {
            return Ok(self);
        }
        let shift = bar - pickup_ticks;
        for note in &mut self.notes {
            note.onset += shift;
        }
        Ok(self)
    }

    /// Moves every pitch (and the declared tonic) by `semitones`.
    pub fn transposed(&self, semitones: i32) -> Result<Self, SymbolicError> {
        let notes = self
            .notes
            .iter()
            .map(|n| {
                let p = i32::from(n.pitch) + semitones;
                if (0..=127).contains(&p) {
                    Ok(NoteEvent {
                        pitch: p as u8,
                        ..*n
                    })
                } else {
                    Err(SymbolicError::InvalidMelody(format!(
                        "transposition moves pitch {} out of MIDI range",
                        n.pitch
                    )))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Melody {
            notes,
            declared_tonic: self.declared_tonic.map(|t| t.transpose(semitones)),
            ..*self
        })
    }
}
