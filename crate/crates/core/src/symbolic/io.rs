//! Lead-sheet JSON documents and melody import from JSON or Standard MIDI Files.
//!
//! ```json
//! {
//!   "ppq": 480,
//!   "time_signature": "4/4",
//!   "key": { "tonic": "G", "mode": "minor" },
//!   "notes": [ { "onset": 0, "duration": 960, "pitch": 67 } ],
//!   "chords": [ { "onset": 0, "root": "G", "quality": "minor" } ]
//! }
//! ```
//!
//! `key`, `pickup` (anacrusis length in ticks) and `chords` are optional.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ChordEvent, ChordQuality, LeadSheet, Melody, Mode, NoteEvent, PitchClass, SymbolicError,
    TimeSignature,
};
use crate::smf::{self, meta, EventKind, MidiMessage, Smf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyDeclaration {
    pub tonic: PitchClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChordEntry {
    pub onset: u32,
    pub root: PitchClass,
    pub quality: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeadSheetDocument {
    pub ppq: u16,
    pub time_signature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<KeyDeclaration>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub pickup: u32,
    pub notes: Vec<NoteEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chords: Option<Vec<ChordEntry>>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl LeadSheetDocument {
    fn melody(&self) -> Result<Melody, SymbolicError> {
        let ts: TimeSignature = self.time_signature.parse()?;
        let mut notes = self.notes.clone();
        notes.sort_by_key(|n| (n.onset, n.pitch));
        let tonic = self.key.as_ref().map(|k| k.tonic);
        Melody::new(notes, self.ppq, ts, tonic)?.padded_pickup(self.pickup)
    }

    pub fn into_melody(self) -> Result<Melody, SymbolicError> {
        self.melody()
    }

    pub fn into_lead_sheet(self) -> Result<LeadSheet, SymbolicError> {
        let melody = self.melody()?;
        let shift = if self.pickup > 0 && self.pickup < melody.bar_ticks() {
            melody.bar_ticks() - self.pickup
        } else {
            0
        };
        let chords = self
            .chords
            .unwrap_or_default()
            .iter()
            .map(|c| {
                Ok(ChordEvent {
                    onset: c.onset + shift,
                    root: c.root,
                    quality: ChordQuality::reduce(&c.quality)?,
                })
            })
            .collect::<Result<Vec<_>, SymbolicError>>()?;
        let tonic = self.key.map(|k| k.tonic);
        LeadSheet::new(melody, chords, tonic)
    }

    pub fn from_lead_sheet(sheet: &LeadSheet, mode: Option<Mode>) -> Self {
        let melody = sheet.melody();
        LeadSheetDocument {
            ppq: melody.ppq(),
            time_signature: melody.time_signature().to_string(),
            key: sheet
                .declared_tonic()
                .map(|tonic| KeyDeclaration { tonic, mode }),
            pickup: 0,
            notes: melody.notes().to_vec(),
            chords: Some(
                sheet
                    .chords()
                    .iter()
                    .map(|c| ChordEntry {
                        onset: c.onset,
                        root: c.root,
                        quality: c.quality.map_or("other", ChordQuality::name).to_string(),
                    })
                    .collect(),
            ),
        }
    }
}

pub fn parse_lead_sheet(json: &str) -> Result<LeadSheet, SymbolicError> {
    serde_json::from_str::<LeadSheetDocument>(json)?.into_lead_sheet()
}

pub fn parse_melody(json: &str) -> Result<Melody, SymbolicError> {
    serde_json::from_str::<LeadSheetDocument>(json)?.into_melody()
}

pub fn lead_sheet_to_json(sheet: &LeadSheet, mode: Option<Mode>) -> String {
    serde_json::to_string_pretty(&LeadSheetDocument::from_lead_sheet(sheet, mode))
        .expect("lead sheet documents always serialize")
}

fn read_to_string(path: &Path) -> Result<String, SymbolicError> {
    fs::read_to_string(path).map_err(|source| SymbolicError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_lead_sheet(path: &Path) -> Result<LeadSheet, SymbolicError> {
    parse_lead_sheet(&read_to_string(path)?)
}

pub fn write_lead_sheet(
    path: &Path,
    sheet: &LeadSheet,
    mode: Option<Mode>,
) -> Result<(), SymbolicError> {
    fs::write(path, lead_sheet_to_json(sheet, mode) + "\n").map_err(|source| SymbolicError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a melody from `.mid`/`.midi` or JSON, chosen by extension.
pub fn read_melody(path: &Path) -> Result<Melody, SymbolicError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("mid") | Some("midi") | Some("smf") => {
            let bytes = fs::read(path).map_err(|source| SymbolicError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            melody_from_smf(&smf::parse(&bytes)?)
        }
        _ => parse_melody(&read_to_string(path)?),
    }
}

/// Takes the first track containing notes as a monophonic line.
///
/// Simultaneous onsets keep the highest pitch; a note still sounding at the
/// next onset is cut there.
pub fn melody_from_smf(file: &Smf) -> Result<Melody, SymbolicError> {
    let time_signature = file
        .tracks
        .iter()
        .flat_map(|t| Smf::absolute(t))
        .find_map(|(_, kind)| match kind {
            EventKind::Meta { kind, data } if *kind == meta::TIME_SIGNATURE && data.len() >= 2 => {
                TimeSignature::new(data[0], 1u8.checked_shl(u32::from(data[1]))?).ok()
            }
            _ => None,
        })
        .unwrap_or_default();

    let has_notes = |t: &&Vec<smf::TrackEvent>| {
        t.iter().any(|e| {
            matches!(
                e.kind,
                EventKind::Midi {
                    message: MidiMessage::NoteOn { velocity: 1.., .. },
                    ..
                }
            )
        })
    };
    let Some(track) = file.tracks.iter().find(has_notes) else {
        return Melody::new(vec![], file.ppq, time_signature, None);
    };

    let mut open: HashMap<(u8, u8), VecDeque<u32>> = HashMap::new();
    let mut raw = Vec::new();
    let mut last_tick = 0;
    for (tick, kind) in Smf::absolute(track) {
        last_tick = tick;
        let EventKind::Midi { channel, message } = kind else {
            continue;
        };
        match *message {
            MidiMessage::NoteOn { key, velocity } if velocity > 0 => {
                open.entry((*channel, key)).or_default().push_back(tick);
            }
            MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                if let Some(onset) = open.get_mut(&(*channel, key)).and_then(VecDeque::pop_front) {
                    raw.push(NoteEvent::new(onset, tick - onset, key));
                }
            }
            _ => {}
        }
    }
    for ((_, key), onsets) in open {
        raw.extend(
            onsets
                .into_iter()
                .map(|on| NoteEvent::new(on, last_tick - on, key)),
        );
    }
    raw.retain(|n| n.duration > 0);
    // highest pitch first within an onset, then dedup keeps it
    raw.sort_by(|a, b| a.onset.cmp(&b.onset).then(b.pitch.cmp(&a.pitch)));
    raw.dedup_by_key(|n| n.onset);
    for i in 0..raw.len().saturating_sub(1) {
        let next = raw[i + 1].onset;
        if raw[i].end() > next {
            raw[i].duration = next - raw[i].onset;
        }
    }
    Melody::new(raw, file.ppq, time_signature, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smf::TrackEvent;

    const SHEET: &str = r#"{
        "ppq": 480,
        "time_signature": "4/4",
        "key": { "tonic": "G", "mode": "minor" },
        "notes": [
            { "onset": 960, "duration": 960, "pitch": 70 },
            { "onset": 0, "duration": 960, "pitch": 67 }
        ],
        "chords": [
            { "onset": 0, "root": "G", "quality": "m7" },
            { "onset": 1920, "root": "C", "quality": "sus4" }
        ]
    }"#;

    #[test]
    fn parses_and_reduces() {
        let sheet = parse_lead_sheet(SHEET).unwrap();
        assert_eq!(sheet.declared_tonic(), Some(PitchClass::G));
        assert_eq!(sheet.melody().notes()[0].pitch, 67);
        assert_eq!(sheet.chords()[0].quality, Some(ChordQuality::Minor));
        assert_eq!(sheet.chords()[1].quality, None);
        let again = parse_lead_sheet(&lead_sheet_to_json(&sheet, Some(Mode::Minor))).unwrap();
        assert_eq!(again, sheet);
    }

    #[test]
    fn melody_document_without_chords() {
        let m = parse_melody(
            r#"{"ppq": 480, "time_signature": "3/4", "notes": [{"onset": 0, "duration": 480, "pitch": 60}]}"#,
        )
        .unwrap();
        assert_eq!(m.bar_ticks(), 1440);
        assert_eq!(m.declared_tonic(), None);
    }

    #[test]
    fn unknown_chord_symbol_is_an_error() {
        let bad = SHEET.replace("m7", "mystery");
        assert!(matches!(
            parse_lead_sheet(&bad),
            Err(SymbolicError::ChordSymbol(_))
        ));
    }

    fn on(delta: u32, key: u8) -> TrackEvent {
        TrackEvent {
            delta,
            kind: EventKind::Midi {
                channel: 0,
                message: MidiMessage::NoteOn { key, velocity: 90 },
            },
        }
    }

    fn off(delta: u32, key: u8) -> TrackEvent {
        TrackEvent {
            delta,
            kind: EventKind::Midi {
                channel: 0,
                message: MidiMessage::NoteOff { key, velocity: 0 },
            },
        }
    }

    #[test]
    fn smf_melody_is_made_monophonic() {
        let conductor = vec![TrackEvent {
            delta: 0,
            kind: EventKind::Meta {
                kind: meta::TIME_SIGNATURE,
                data: vec![3, 2, 24, 8],
            },
        }];
        // C4 and E4 together, then D4 starting before E4 ends
        let notes = vec![
            on(0, 60),
            on(0, 64),
            off(480, 60),
            on(0, 62),
            off(240, 64),
            off(240, 62),
        ];
        let file = Smf {
            format: 1,
            ppq: 480,
            tracks: vec![conductor, notes],
        };
        let m = melody_from_smf(&file).unwrap();
        assert_eq!(m.time_signature(), TimeSignature::new(3, 4).unwrap());
        assert_eq!(
            m.notes(),
            &[NoteEvent::new(0, 480, 64), NoteEvent::new(480, 480, 62)]
        );
    }
}
