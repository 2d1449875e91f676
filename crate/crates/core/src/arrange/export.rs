//! Format-1 SMF export of arrangements and the matching reader.
//!
//! Track 0 carries tempo, time signature and one marker per chord
//! (`"G:min"`); each instrument track starts with its name, a program
//! change and a channel-volume controller before the notes.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use super::arrangement::{Arrangement, RenderConfig, Track};
use super::ArrangeError;
use crate::condition::Modality;
use crate::smf::{self, meta, EventKind, MidiMessage, Smf, TrackEvent, CONTROLLER_VOLUME};
use crate::symbolic::{ChordEvent, ChordQuality, NoteEvent, PitchClass, TimeSignature};

fn to_deltas(mut events: Vec<(u32, EventKind)>) -> Vec<TrackEvent> {
    let mut last = 0;
    let end = events.iter().map(|(t, _)| *t).max().unwrap_or(0);
    events.push((
        end,
        EventKind::Meta {
            kind: meta::END_OF_TRACK,
            data: vec![],
        },
    ));
    events
        .into_iter()
        .map(|(tick, kind)| {
            let delta = tick - last;
            last = tick;
            TrackEvent { delta, kind }
        })
        .collect()
}

fn chord_marker(chord: &ChordEvent) -> String {
    chord.to_string()
}

fn parse_chord_marker(onset: u32, text: &str) -> Result<ChordEvent, ArrangeError> {
    let bad = || ArrangeError::Midi(format!("unreadable chord marker `{text}`"));
    let (root, quality) = text.split_once(':').ok_or_else(bad)?;
    let root: PitchClass = root.parse().map_err(|_| bad())?;
    let quality = ChordQuality::ALL
        .into_iter()
        .find(|q| q.short_name() == quality)
        .ok_or_else(bad)?;
    Ok(ChordEvent::triad(onset, root, quality))
}

fn conductor_track(arr: &Arrangement) -> Vec<TrackEvent> {
    let micros = (60_000_000 + arr.tempo_bpm / 2) / arr.tempo_bpm;
    let ts = arr.time_signature;
    let mut events = vec![
        (
            0,
            EventKind::Meta {
                kind: meta::TEMPO,
                data: micros.to_be_bytes()[1..].to_vec(),
            },
        ),
        (
            0,
            EventKind::Meta {
                kind: meta::TIME_SIGNATURE,
                data: vec![ts.numerator, ts.denominator.trailing_zeros() as u8, 24, 8],
            },
        ),
    ];
    events.extend(arr.chords.iter().map(|c| {
        (
            c.onset,
            EventKind::Meta {
                kind: meta::MARKER,
                data: chord_marker(c).into_bytes(),
            },
        )
    }));
    to_deltas(events)
}

fn instrument_track(track: &Track, velocity: u8) -> Vec<TrackEvent> {
    let ch = track.channel;
    let midi = |message| EventKind::Midi {
        channel: ch,
        message,
    };
    let mut events = vec![
        (
            0,
            EventKind::Meta {
                kind: meta::TRACK_NAME,
                data: track.name.clone().into_bytes(),
            },
        ),
        (
            0,
            midi(MidiMessage::ProgramChange {
                program: track.program,
            }),
        ),
        (
            0,
            midi(MidiMessage::Controller {
                controller: CONTROLLER_VOLUME,
                value: track.volume,
            }),
        ),
    ];
    // offs sort before ons at the same tick so repeated pitches re-articulate
    let mut notes: Vec<(u32, bool, u8)> = track
        .notes
        .iter()
        .flat_map(|n| [(n.onset, true, n.pitch), (n.end(), false, n.pitch)])
        .collect();
    notes.sort_by_key(|&(tick, on, pitch)| (tick, on, pitch));
    events.extend(notes.into_iter().map(|(tick, on, key)| {
        let message = if on {
            MidiMessage::NoteOn { key, velocity }
        } else {
            MidiMessage::NoteOff { key, velocity: 0 }
        };
        (tick, midi(message))
    }));
    to_deltas(events)
}

pub fn arrangement_to_smf(arr: &Arrangement, config: &RenderConfig) -> Smf {
    let mut tracks = vec![conductor_track(arr)];
    tracks.extend(
        arr.tracks
            .iter()
            .map(|t| instrument_track(t, config.velocity)),
    );
    Smf {
        format: 1,
        ppq: arr.ppq,
        tracks,
    }
}

/// Serializes an arrangement as a format-1 Standard MIDI File.
pub fn export_midi(arr: &Arrangement, config: &RenderConfig) -> Result<Vec<u8>, ArrangeError> {
    if arr.tracks.is_empty() {
        return Err(ArrangeError::EmptyArrangement);
    }
    if arr.tempo_bpm == 0 {
        return Err(ArrangeError::Config("tempo must be positive".into()));
    }
    Ok(smf::write(&arrangement_to_smf(arr, config)))
}

pub fn write_midi(
    path: &Path,
    arr: &Arrangement,
    config: &RenderConfig,
) -> Result<(), ArrangeError> {
    let bytes = export_midi(arr, config)?;
    fs::write(path, bytes).map_err(|source| ArrangeError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_track(events: &[TrackEvent]) -> Result<Track, ArrangeError> {
    let mut name = String::new();
    let mut channel = None;
    let mut program = 0;
    let mut volume = 127;
    let mut open: HashMap<u8, VecDeque<u32>> = HashMap::new();
    let mut notes = Vec::new();
    for (tick, kind) in Smf::absolute(events) {
        match kind {
            EventKind::Meta { kind, data } if *kind == meta::TRACK_NAME => {
                name = String::from_utf8_lossy(data).into_owned();
            }
            EventKind::Midi {
                channel: ch,
                message,
            } => {
                channel.get_or_insert(*ch);
                match *message {
                    MidiMessage::ProgramChange { program: p } => program = p,
                    MidiMessage::Controller { controller, value }
                        if controller == CONTROLLER_VOLUME =>
                    {
                        volume = value
                    }
                    MidiMessage::NoteOn { key, velocity } if velocity > 0 => {
                        open.entry(key).or_default().push_back(tick);
                    }
                    MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                        let onset = open
                            .get_mut(&key)
                            .and_then(VecDeque::pop_front)
                            .ok_or_else(|| {
                                ArrangeError::Midi(format!("note-off for {key} without note-on"))
                            })?;
                        notes.push(NoteEvent::new(onset, tick - onset, key));
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }
    if open.values().any(|q| !q.is_empty()) {
        return Err(ArrangeError::Midi(format!(
            "unterminated notes in track `{name}`"
        )));
    }
    notes.sort_by_key(|n| (n.onset, n.pitch, n.duration));
    Ok(Track {
        name,
        channel: channel.unwrap_or(0),
        program,
        volume,
        notes,
    })
}

/// Reads back a file written by [`export_midi`].
pub fn parse_arrangement(bytes: &[u8]) -> Result<Arrangement, ArrangeError> {
    let file = smf::parse(bytes).map_err(|e| ArrangeError::Midi(e.to_string()))?;
    let Some((conductor, instruments)) = file.tracks.split_first() else {
        return Err(ArrangeError::EmptyArrangement);
    };
    let mut tempo_bpm = 120;
    let mut time_signature = TimeSignature::COMMON;
    let mut chords = Vec::new();
    for (tick, kind) in Smf::absolute(conductor) {
        let EventKind::Meta { kind, data } = kind else {
            continue;
        };
        match *kind {
            meta::TEMPO if data.len() == 3 => {
                let micros = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                tempo_bpm = (60_000_000 + micros / 2) / micros.max(1);
            }
            meta::TIME_SIGNATURE if data.len() >= 2 => {
                time_signature =
                    TimeSignature::new(data[0], 1u8.checked_shl(u32::from(data[1])).unwrap_or(0))
                        .map_err(|e| ArrangeError::Midi(e.to_string()))?;
            }
            meta::MARKER => chords.push(parse_chord_marker(tick, &String::from_utf8_lossy(data))?),
            _ => {}
        }
    }
    let tracks = instruments
        .iter()
        .map(|t| read_track(t))
        .collect::<Result<Vec<_>, _>>()?;
    let modality = match tracks.len() {
        1 => Modality::PianoSolo,
        6 => Modality::Group,
        n => return Err(ArrangeError::Midi(format!("{n} instrument tracks"))),
    };
    Ok(Arrangement {
        modality,
        ppq: file.ppq,
        tempo_bpm,
        time_signature,
        tracks,
        chords,
    })
}
