use std::fmt;

use super::{ChordQuality, Melody, PitchClass, SymbolicError};

/// A chord symbol placed at an absolute tick.
///
/// `quality` is `None` for chords outside the root-position triad
/// vocabulary (e.g. suspensions); they still govern their span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChordEvent {
    pub onset: u32,
    pub root: PitchClass,
    pub quality: Option<ChordQuality>,
}

impl ChordEvent {
    pub fn triad(onset: u32, root: PitchClass, quality: ChordQuality) -> Self {
        ChordEvent {
            onset,
            root,
            quality: Some(quality),
        }
    }

    pub fn transposed(&self, semitones: i32) -> Self {
        ChordEvent {
            root: self.root.transpose(semitones),
            ..*self
        }
    }
}

impl fmt::Display for ChordEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.quality {
            Some(q) => write!(f, "{}:{}", self.root, q.short_name()),
            None => write!(f, "{}:other", self.root),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeadSheet {
    melody: Melody,
    chords: Vec<ChordEvent>,
    declared_tonic: Option<PitchClass>,
}

impl LeadSheet {
    pub fn new(
        melody: Melody,
        chords: Vec<ChordEvent>,
        declared_tonic: Option<PitchClass>,
    ) -> Result<Self, SymbolicError> {
        if let Some(w) = chords.windows(2).find(|w| w[1].onset <= w[0].onset) {
            return Err(SymbolicError::Format(format!(
                "chord onsets must be strictly increasing ({} then {})",
                w[0].onset, w[1].onset
            )));
        }
        Ok(LeadSheet {
            melody,
            chords,
            declared_tonic,
        })
    }

    pub fn melody(&self) -> &Melody {
        &self.melody
    }

    pub fn chords(&self) -> &[ChordEvent] {
        &self.chords
    }

    /// The sheet's own key declaration, falling back to the melody's.
    pub fn declared_tonic(&self) -> Option<PitchClass> {
        self.declared_tonic.or(self.melody.declared_tonic())
    }

    /// Bars covered by the melody and every chord onset.
    pub fn bar_count(&self) -> usize {
        let bar = self.melody.bar_ticks();
        let chord_end = self.chords.last().map_or(0, |c| c.onset + 1);
        self.melody.span().max(chord_end).div_ceil(bar) as usize
    }

    /// Last tick of the piece, padded to a whole bar.
    pub fn end_tick(&self) -> u32 {
        self.bar_count() as u32 * self.melody.bar_ticks()
    }

    /// Index of the chord sounding at `tick`, if any has started.
    pub fn chord_index_at(&self, tick: u32) -> Option<usize> {
        self.chords
            .partition_point(|c| c.onset <= tick)
            .checked_sub(1)
    }

    pub fn chord_at(&self, tick: u32) -> Option<&ChordEvent> {
        self.chord_index_at(tick).map(|i| &self.chords[i])
    }

    /// `[onset, end)` of chord `index`, ending at the next onset or the end of the piece.
    pub fn chord_span(&self, index: usize) -> (u32, u32) {
        let start = self.chords[index].onset;
        let end = self
            .chords
            .get(index + 1)
            .map_or_else(|| self.end_tick(), |c| c.onset);
        (start, end)
    }

    pub fn transposed(&self, semitones: i32) -> Result<Self, SymbolicError> {
        Ok(LeadSheet {
            melody: self.melody.transposed(semitones)?,
            chords: self
                .chords
                .iter()
                .map(|c| c.transposed(semitones))
                .collect(),
            declared_tonic: self.declared_tonic.map(|t| t.transpose(semitones)),
        })
    }
}
