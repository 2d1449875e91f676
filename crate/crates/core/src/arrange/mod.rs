//! Stimulus rendering: the piano-solo and group arrangements and their MIDI files.

mod arrangement;
mod export;
mod manifest;
mod voicing;

use std::path::PathBuf;

use thiserror::Error;

pub use arrangement::{
    arrange, arrange_group, arrange_piano, track_names, Arrangement, InstrumentSetup, RenderConfig,
    Track, STRUM_VOLUME,
};
pub use export::{arrangement_to_smf, export_midi, parse_arrangement, write_midi};
pub use manifest::{ManifestEntry, StimulusManifest};
pub use voicing::{
    builtin_voicing_chart, close_triad, fallback_voicing, triad_pitch_classes, ChordVoicing,
    VoicingChart, VoicingOverride,
};

use crate::symbolic::SymbolicError;

#[derive(Debug, Error)]
pub enum ArrangeError {
    #[error("melody is empty")]
    EmptyMelody,
    #[error("arrangement has no tracks")]
    EmptyArrangement,
    #[error("lead sheet has no chords to arrange")]
    NoChords,
    #[error("no voicing for chord {0}")]
    UnvoicableChord(String),
    #[error("invalid voicing for {chord}: {reason}")]
    InvalidVoicing { chord: String, reason: String },
    #[error("group arrangement needs 4/4 time, got {0}")]
    UnsupportedMeter(String),
    #[error("render config: {0}")]
    Config(String),
    #[error("MIDI: {0}")]
    Midi(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
