//! Pitches, melodies, chords and lead sheets, with the tonic-relative
//! encodings the harmonizer is trained on.

mod chord;
mod encode;
pub mod io;
mod key;
mod leadsheet;
mod melody;
mod pitch;

use std::path::PathBuf;

use thiserror::Error;

pub use chord::{decode_chord, encode_chord, ChordLabel, ChordQuality, CHORD_CLASSES};
pub use encode::{
    encode_leadsheet, encode_melody, encode_segment, segment_melody, EncodedSequence,
    HarmonizationGrid, NoteVector,
};
pub use key::{
    detect_key, estimate_key, key_correlations, pitch_class_histogram, Key, Mode, MAJOR_PROFILE,
    MINOR_PROFILE,
};
pub use leadsheet::{ChordEvent, LeadSheet};
pub use melody::{Melody, NoteEvent, TimeSignature};
pub use pitch::PitchClass;

#[derive(Debug, Error)]
pub enum SymbolicError {
    #[error("pitch class {0} out of range 0..=11")]
    PitchClassRange(i64),
    #[error("chord code {0} out of range 0..=47")]
    CodeRange(i64),
    #[error("unknown note name `{0}`")]
    NoteName(String),
    #[error("unknown chord quality `{0}`")]
    ChordSymbol(String),
    #[error("invalid melody: {0}")]
    InvalidMelody(String),
    #[error("melody is empty")]
    EmptyInput,
    #[error("lead sheet has no chords to train on")]
    NoChords,
    #[error("invalid harmonization grid: {0}")]
    Grid(String),
    #[error("malformed lead sheet: {0}")]
    Format(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid MIDI file: {0}")]
    Midi(#[from] crate::smf::SmfError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
