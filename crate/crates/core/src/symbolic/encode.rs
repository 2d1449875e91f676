//! Tonic-relative encodings: many-hot note vectors per harmonization window
//! paired with 48-class chord codes.

use std::fmt;

use log::warn;

use super::{estimate_key, ChordLabel, LeadSheet, Melody, NoteEvent, PitchClass, SymbolicError};

/// Windows over which one chord each is predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonizationGrid {
    bars: usize,
    chords_per_bar: u32,
    window_ticks: u32,
}

impl HarmonizationGrid {
    pub fn new(bars: usize, chords_per_bar: u32, bar_ticks: u32) -> Result<Self, SymbolicError> {
        if chords_per_bar == 0 || !chords_per_bar.is_power_of_two() {
            return Err(SymbolicError::Grid(format!(
                "chords per bar must be a power of two, got {chords_per_bar}"
            )));
        }
        if bar_ticks == 0 || !bar_ticks.is_multiple_of(chords_per_bar) {
            return Err(SymbolicError::Grid(format!(
                "a bar of {bar_ticks} ticks cannot be split into {chords_per_bar} windows"
            )));
        }
        Ok(HarmonizationGrid {
            bars,
            chords_per_bar,
            window_ticks: bar_ticks / chords_per_bar,
        })
    }

    pub fn for_melody(melody: &Melody, chords_per_bar: u32) -> Result<Self, SymbolicError> {
        Self::new(melody.bar_count(), chords_per_bar, melody.bar_ticks())
    }

    pub fn for_lead_sheet(sheet: &LeadSheet, chords_per_bar: u32) -> Result<Self, SymbolicError> {
        Self::new(
            sheet.bar_count(),
            chords_per_bar,
            sheet.melody().bar_ticks(),
        )
    }

    pub fn bars(&self) -> usize {
        self.bars
    }

    pub fn chords_per_bar(&self) -> u32 {
        self.chords_per_bar
    }

    pub fn window_ticks(&self) -> u32 {
        self.window_ticks
    }

    /// Number of windows, `bars · chords_per_bar`.
    pub fn len(&self) -> usize {
        self.bars * self.chords_per_bar as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn window(&self, index: usize) -> (u32, u32) {
        let start = index as u32 * self.window_ticks;
        (start, start + self.window_ticks)
    }

    pub fn windows(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.len()).map(|i| self.window(i))
    }
}

/// 12-bit many-hot vector indexed by semitone distance from the tonic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoteVector(u16);

impl NoteVector {
    pub const ZERO: NoteVector = NoteVector(0);

    pub fn from_mask(mask: u16) -> Self {
        NoteVector(mask & 0x0fff)
    }

    pub fn from_bits(bits: [u8; 12]) -> Self {
        let mut mask = 0;
        for (i, b) in bits.iter().enumerate() {
            if *b != 0 {
                mask |= 1 << i;
            }
        }
        NoteVector(mask)
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn is_set(self, distance: u8) -> bool {
        distance < 12 && self.0 & (1 << distance) != 0
    }

    pub fn set(&mut self, distance: u8) {
        self.0 |= 1 << (distance % 12);
    }

    pub fn bits(self) -> [u8; 12] {
        std::array::from_fn(|i| u8::from(self.is_set(i as u8)))
    }

    pub fn to_f64(self) -> [f64; 12] {
        std::array::from_fn(|i| if self.is_set(i as u8) { 1.0 } else { 0.0 })
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

impl fmt::Display for NoteVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = self.bits();
        write!(f, "[")?;
        for (i, b) in bits.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

/// Paired note vectors and (optionally) chord labels for one piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub inputs: Vec<NoteVector>,
    pub labels: Option<Vec<ChordLabel>>,
    pub tonic: PitchClass,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn codes(&self) -> Option<Vec<u8>> {
        self.labels
            .as_ref()
            .map(|ls| ls.iter().map(|l| l.code()).collect())
    }
}

/// Notes sounding in each grid window; a note spanning several windows appears in each.
pub fn segment_melody(melody: &Melody, grid: &HarmonizationGrid) -> Vec<Vec<NoteEvent>> {
    grid.windows()
        .map(|(start, end)| {
            melody
                .notes()
                .iter()
                .filter(|n| n.overlaps(start, end))
                .copied()
                .collect()
        })
        .collect()
}

pub fn encode_segment(tonic: PitchClass, notes: &[NoteEvent]) -> NoteVector {
    let mut v = NoteVector::ZERO;
    for note in notes {
        v.set(note.pitch_class().distance_from(tonic));
    }
    v
}

/// Encodes a melody for prediction, without labels.
pub fn encode_melody(
    melody: &Melody,
    grid: &HarmonizationGrid,
) -> Result<EncodedSequence, SymbolicError> {
    let tonic = estimate_key(melody)?;
    let inputs = segment_melody(melody, grid)
        .iter()
        .map(|notes| encode_segment(tonic, notes))
        .collect();
    Ok(EncodedSequence {
        inputs,
        labels: None,
        tonic,
    })
}

fn sheet_tonic(sheet: &LeadSheet) -> Result<PitchClass, SymbolicError> {
    match sheet.declared_tonic() {
        Some(t) => Ok(t),
        None => estimate_key(sheet.melody()),
    }
}

/// Encodes a lead sheet into training pairs.
///
/// Each window is labelled with the chord sounding at its start. Windows
/// before the first chord, or governed by a chord outside the triad
/// vocabulary, are skipped with a warning.
pub fn encode_leadsheet(
    sheet: &LeadSheet,
    grid: &HarmonizationGrid,
) -> Result<EncodedSequence, SymbolicError> {
    if sheet.chords().is_empty() {
        return Err(SymbolicError::NoChords);
    }
    let tonic = sheet_tonic(sheet)?;
    let segments = segment_melody(sheet.melody(), grid);
    let mut inputs = Vec::with_capacity(segments.len());
    let mut labels = Vec::with_capacity(segments.len());
    for (i, notes) in segments.iter().enumerate() {
        let (start, _) = grid.window(i);
        let Some(chord) = sheet.chord_at(start) else {
            warn!("window {i} at tick {start} precedes the first chord; skipped");
            continue;
        };
        let Some(quality) = chord.quality else {
            warn!("window {i} governed by unsupported chord {chord}; skipped");
            continue;
        };
        inputs.push(encode_segment(tonic, notes));
        labels.push(ChordLabel::of_chord(tonic, chord.root, quality));
    }
    Ok(EncodedSequence {
        inputs,
        labels: Some(labels),
        tonic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{ChordEvent, ChordQuality, TimeSignature};

    fn n(onset: u32, duration: u32, pitch: u8) -> NoteEvent {
        NoteEvent::new(onset, duration, pitch)
    }

    fn two_bars() -> Melody {
        Melody::new(
            vec![n(0, 960, 60), n(960, 960, 62), n(1920, 1920, 64)],
            480,
            TimeSignature::COMMON,
            Some(PitchClass::C),
        )
        .unwrap()
    }

    #[test]
    fn segment_count_follows_chords_per_bar() {
        let m = two_bars();
        let one = HarmonizationGrid::for_melody(&m, 1).unwrap();
        assert_eq!(segment_melody(&m, &one).len(), 2);
        let two = HarmonizationGrid::for_melody(&m, 2).unwrap();
        assert_eq!(segment_melody(&m, &two).len(), 4);
        assert!(HarmonizationGrid::for_melody(&m, 3).is_err());
    }

    #[test]
    fn note_spanning_bars_lands_in_both() {
        let m = Melody::new(vec![n(960, 1920, 67)], 480, TimeSignature::COMMON, None).unwrap();
        let grid = HarmonizationGrid::for_melody(&m, 1).unwrap();
        let segs = segment_melody(&m, &grid);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0], vec![n(960, 1920, 67)]);
        assert_eq!(segs[1], vec![n(960, 1920, 67)]);
    }

    #[test]
    fn touching_notes_do_not_overlap() {
        let m = two_bars();
        let grid = HarmonizationGrid::for_melody(&m, 1).unwrap();
        let segs = segment_melody(&m, &grid);
        assert_eq!(segs[0].len(), 2);
        assert_eq!(segs[1].len(), 1);
    }

    #[test]
    fn encode_segment_sets_tonic_distances() {
        let g = PitchClass::G;
        let v = encode_segment(g, &[n(0, 1, 67), n(1, 1, 70), n(2, 1, 69), n(3, 1, 79)]);
        assert_eq!(v.bits(), [1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        let v = encode_segment(g, &[n(0, 1, 74), n(1, 1, 77)]);
        assert_eq!(v.bits(), [0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0]);
        assert_eq!(encode_segment(PitchClass::D, &[]), NoteVector::ZERO);
    }

    #[test]
    fn sheet_without_chords_is_rejected() {
        let sheet = LeadSheet::new(two_bars(), vec![], None).unwrap();
        let grid = HarmonizationGrid::for_lead_sheet(&sheet, 1).unwrap();
        assert!(matches!(
            encode_leadsheet(&sheet, &grid),
            Err(SymbolicError::NoChords)
        ));
    }

    #[test]
    fn single_bar_single_chord() {
        let m = Melody::new(vec![n(0, 1920, 60)], 480, TimeSignature::COMMON, None).unwrap();
        let sheet = LeadSheet::new(
            m,
            vec![ChordEvent::triad(0, PitchClass::C, ChordQuality::Major)],
            Some(PitchClass::C),
        )
        .unwrap();
        let grid = HarmonizationGrid::for_lead_sheet(&sheet, 1).unwrap();
        let enc = encode_leadsheet(&sheet, &grid).unwrap();
        assert_eq!(enc.len(), 1);
        assert_eq!(enc.codes().unwrap(), vec![0]);
    }

    #[test]
    fn unsupported_and_leading_windows_are_skipped() {
        let m = Melody::new(
            vec![n(0, 1920, 60), n(1920, 1920, 62), n(3840, 1920, 64)],
            480,
            TimeSignature::COMMON,
            Some(PitchClass::C),
        )
        .unwrap();
        let chords = vec![
            ChordEvent::triad(1920, PitchClass::D, ChordQuality::Minor),
            ChordEvent {
                onset: 3840,
                root: PitchClass::G,
                quality: None,
            },
        ];
        let sheet = LeadSheet::new(m, chords, None).unwrap();
        let grid = HarmonizationGrid::for_lead_sheet(&sheet, 1).unwrap();
        let enc = encode_leadsheet(&sheet, &grid).unwrap();
        assert_eq!(enc.codes().unwrap(), vec![9]);
    }
}
