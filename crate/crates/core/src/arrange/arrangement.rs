use serde::{Deserialize, Serialize};

use super::voicing::VoicingChart;
use super::ArrangeError;
use crate::condition::Modality;
use crate::symbolic::{ChordEvent, LeadSheet, Melody, NoteEvent, TimeSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentSetup {
    pub program: u8,
    pub volume: u8,
}

impl InstrumentSetup {
    pub const fn new(program: u8, volume: u8) -> Self {
        InstrumentSetup { program, volume }
    }
}

/// Tempo, resolution and General MIDI instrument assignments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub tempo_bpm: u32,
    pub ppq: u16,
    pub velocity: u8,
    pub piano: InstrumentSetup,
    pub violin: InstrumentSetup,
    pub flute: InstrumentSetup,
    pub cello: InstrumentSetup,
    pub guitar_picked: InstrumentSetup,
    pub guitar_strummed: InstrumentSetup,
    pub piano_chords: InstrumentSetup,
}

/// Strummed guitar sits at 40% of full channel volume: round(0.40 × 127).
pub const STRUM_VOLUME: u8 = 51;

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            tempo_bpm: 120,
            ppq: 480,
            velocity: 96,
            piano: InstrumentSetup::new(0, 127),
            violin: InstrumentSetup::new(40, 127),
            flute: InstrumentSetup::new(73, 127),
            cello: InstrumentSetup::new(42, 127),
            guitar_picked: InstrumentSetup::new(24, 127),
            guitar_strummed: InstrumentSetup::new(25, STRUM_VOLUME),
            piano_chords: InstrumentSetup::new(0, 127),
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), ArrangeError> {
        if self.tempo_bpm == 0 {
            return Err(ArrangeError::Config("tempo must be positive".into()));
        }
        if self.ppq < 2 || self.ppq > 0x7fff {
            return Err(ArrangeError::Config(format!(
                "ppq {} unsupported",
                self.ppq
            )));
        }
        let all = [
            self.piano,
            self.violin,
            self.flute,
            self.cello,
            self.guitar_picked,
            self.guitar_strummed,
            self.piano_chords,
        ];
        if all.iter().any(|i| i.program > 127 || i.volume > 127) || self.velocity > 127 {
            return Err(ArrangeError::Config(
                "programs, volumes and velocity must be in 0..=127".into(),
            ));
        }
        Ok(())
    }
}

pub mod track_names {
    pub const PIANO: &str = "piano";
    pub const VIOLIN: &str = "violin-melody";
    pub const FLUTE: &str = "flute-melody";
    pub const CELLO: &str = "cello";
    pub const GUITAR_PICKED: &str = "guitar-picked";
    pub const GUITAR_STRUMMED: &str = "guitar-strummed";
    pub const PIANO_CHORDS: &str = "piano-chords";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pub name: String,
    pub channel: u8,
    pub program: u8,
    pub volume: u8,
    /// Sorted by onset, then pitch.
    pub notes: Vec<NoteEvent>,
}

impl Track {
    fn new(name: &str, channel: u8, setup: InstrumentSetup, mut notes: Vec<NoteEvent>) -> Self {
        notes.sort_by_key(|n| (n.onset, n.pitch, n.duration));
        Track {
            name: name.to_string(),
            channel,
            program: setup.program,
            volume: setup.volume,
            notes,
        }
    }
}

/// A multi-track score ready for MIDI export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrangement {
    pub modality: Modality,
    pub ppq: u16,
    pub tempo_bpm: u32,
    pub time_signature: TimeSignature,
    pub tracks: Vec<Track>,
    pub chords: Vec<ChordEvent>,
}

impl Arrangement {
    pub fn track(&self, name: &str) -> Option<&Track> {
        self.tracks.iter().find(|t| t.name == name)
    }
}

fn rescale(tick: u32, from: u16, to: u16) -> u32 {
    if from == to {
        return tick;
    }
    let scaled = u64::from(tick) * u64::from(to);
    ((scaled + u64::from(from) / 2) / u64::from(from)) as u32
}

fn rescale_melody(melody: &Melody, ppq: u16) -> Result<Melody, ArrangeError> {
    let from = melody.ppq();
    let notes = melody
        .notes()
        .iter()
        .map(|n| {
            let onset = rescale(n.onset, from, ppq);
            let end = rescale(n.end(), from, ppq).max(onset + 1);
            NoteEvent::new(onset, end - onset, n.pitch)
        })
        .collect();
    Ok(Melody::new(
        notes,
        ppq,
        melody.time_signature(),
        melody.declared_tonic(),
    )?)
}

/// The melody alone on piano.
pub fn arrange_piano(melody: &Melody, config: &RenderConfig) -> Result<Arrangement, ArrangeError> {
    config.validate()?;
    if melody.is_empty() {
        return Err(ArrangeError::EmptyMelody);
    }
    let melody = rescale_melody(melody, config.ppq)?;
    Ok(Arrangement {
        modality: Modality::PianoSolo,
        ppq: config.ppq,
        tempo_bpm: config.tempo_bpm,
        time_signature: melody.time_signature(),
        tracks: vec![Track::new(
            track_names::PIANO,
            0,
            config.piano,
            melody.notes().to_vec(),
        )],
        chords: vec![],
    })
}

/// The fixed six-part group arrangement.
///
/// Violin and flute double the melody (flute an octave up when the melody
/// sits below C5), the cello holds each chord root in octave 2, one guitar
/// picks low/high voicing notes per beat, the other strums the full voicing
/// in a quarter-quarter-eighth-eighth-quarter pattern, and the piano sounds
/// the close triad for one beat on every downbeat. Accompaniment notes are
/// cut at the next chord change.
pub fn arrange_group(
    sheet: &LeadSheet,
    chart: &VoicingChart,
    config: &RenderConfig,
) -> Result<Arrangement, ArrangeError> {
    config.validate()?;
    let ts = sheet.melody().time_signature();
    if ts != TimeSignature::COMMON {
        return Err(ArrangeError::UnsupportedMeter(ts.to_string()));
    }
    if sheet.chords().is_empty() {
        return Err(ArrangeError::NoChords);
    }
    let from = sheet.melody().ppq();
    let ppq = config.ppq;
    let chords: Vec<ChordEvent> = sheet
        .chords()
        .iter()
        .map(|c| ChordEvent {
            onset: rescale(c.onset, from, ppq),
            ..*c
        })
        .collect();
    let melody = rescale_melody(sheet.melody(), ppq)?;
    let sheet = LeadSheet::new(melody, chords, sheet.declared_tonic())?;

    let mut voicings = Vec::with_capacity(sheet.chords().len());
    for chord in sheet.chords() {
        let voicing = chord
            .quality
            .and_then(|q| chart.get(chord.root, q))
            .ok_or_else(|| ArrangeError::UnvoicableChord(chord.to_string()))?;
        voicings.push(voicing);
    }

    let beat = u32::from(ppq);
    let bar = 4 * beat;
    let bars = sheet.bar_count() as u32;
    let melody_notes = sheet.melody().notes();

    let mean_pitch = melody_notes.iter().map(|n| f64::from(n.pitch)).sum::<f64>()
        / melody_notes.len().max(1) as f64;
    let flute_shift = if mean_pitch < 72.0 { 12 } else { 0 };
    let flute = melody_notes
        .iter()
        .map(|n| NoteEvent {
            pitch: if n.pitch + flute_shift <= 127 {
                n.pitch + flute_shift
            } else {
                n.pitch
            },
            ..*n
        })
        .collect();

    let cello = (0..sheet.chords().len())
        .map(|i| {
            let (start, end) = sheet.chord_span(i);
            NoteEvent::new(start, end - start, 36 + sheet.chords()[i].root.value())
        })
        .collect();

    // (chord index, duration cut at the next chord change)
    let hit = |tick: u32, length: u32| -> Option<(usize, u32)> {
        let i = sheet.chord_index_at(tick)?;
        let (_, end) = sheet.chord_span(i);
        Some((i, length.min(end - tick)))
    };

    let mut piano = Vec::new();
    let mut picked = Vec::new();
    let mut strummed = Vec::new();
    let eighth = beat / 2;
    let strum_pattern = [
        (0, beat),
        (beat, beat),
        (2 * beat, eighth),
        (2 * beat + eighth, beat - eighth),
        (3 * beat, beat),
    ];
    for b in 0..bars {
        let downbeat = b * bar;
        if let Some((i, dur)) = hit(downbeat, beat) {
            piano.extend(
                voicings[i]
                    .close
                    .iter()
                    .map(|&p| NoteEvent::new(downbeat, dur, p)),
            );
        }
        for k in 0..4u32 {
            let t = downbeat + k * beat;
            if let Some((i, dur)) = hit(t, beat) {
                let g = &voicings[i].guitar;
                let idx = match k {
                    0 => 0,
                    2 => 1,
                    _ => g.len() - 1,
                };
                picked.push(NoteEvent::new(t, dur, g[idx]));
            }
        }
        for (offset, length) in strum_pattern {
            let t = downbeat + offset;
            if let Some((i, dur)) = hit(t, length) {
                strummed.extend(
                    voicings[i]
                        .guitar
                        .iter()
                        .map(|&p| NoteEvent::new(t, dur, p)),
                );
            }
        }
    }

    Ok(Arrangement {
        modality: Modality::Group,
        ppq,
        tempo_bpm: config.tempo_bpm,
        time_signature: ts,
        tracks: vec![
            Track::new(track_names::VIOLIN, 0, config.violin, melody_notes.to_vec()),
            Track::new(track_names::FLUTE, 1, config.flute, flute),
            Track::new(track_names::CELLO, 2, config.cello, cello),
            Track::new(track_names::GUITAR_PICKED, 3, config.guitar_picked, picked),
            Track::new(
                track_names::GUITAR_STRUMMED,
                4,
                config.guitar_strummed,
                strummed,
            ),
            Track::new(track_names::PIANO_CHORDS, 5, config.piano_chords, piano),
        ],
        chords: sheet.chords().to_vec(),
    })
}

/// Builds one of the two stimulus versions of a harmonized melody.
pub fn arrange(
    sheet: &LeadSheet,
    modality: Modality,
    chart: &VoicingChart,
    config: &RenderConfig,
) -> Result<Arrangement, ArrangeError> {
    match modality {
        Modality::PianoSolo => arrange_piano(sheet.melody(), config),
        Modality::Group => arrange_group(sheet, chart, config),
    }
}
