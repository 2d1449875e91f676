#![allow(dead_code)]

use std::collections::HashMap;

use harmonist::symbolic::{
    ChordEvent, ChordQuality, LeadSheet, Melody, NoteEvent, PitchClass, TimeSignature,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PPQ: u16 = 480;
pub const BAR: u32 = 4 * PPQ as u32;

const QUALITIES: [ChordQuality; 3] = [
    ChordQuality::Major,
    ChordQuality::Minor,
    ChordQuality::Diminished,
];

/// Lead sheets whose windows state their chord outright: each window plays
/// the three tones of a random major, minor or diminished triad, so the
/// chord label is a function of the note vector.
pub fn rule_corpus(sheets: usize, bars: usize, chords_per_bar: u32, seed: u64) -> Vec<LeadSheet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = BAR / chords_per_bar;
    let step = window / 3;
    (0..sheets)
        .map(|_| {
            let tonic = PitchClass::wrapping(rng.random_range(0..12));
            let mut notes = Vec::new();
            let mut chords = Vec::new();
            for w in 0..bars as u32 * chords_per_bar {
                let root = PitchClass::wrapping(rng.random_range(0..12));
                let quality = QUALITIES[rng.random_range(0..3)];
                let onset = w * window;
                chords.push(ChordEvent::triad(onset, root, quality));
                let mut tones: Vec<u8> = quality
                    .intervals()
                    .iter()
                    .map(|i| 60 + (root.value() + i) % 12)
                    .collect();
                tones.shuffle(&mut rng);
                for (k, p) in tones.into_iter().enumerate() {
                    notes.push(NoteEvent::new(onset + k as u32 * step, step, p));
                }
            }
            let melody = Melody::new(notes, PPQ, TimeSignature::COMMON, Some(tonic)).unwrap();
            LeadSheet::new(melody, chords, Some(tonic)).unwrap()
        })
        .collect()
}

/// Random monophonic lead sheet with a declared tonic, pitches kept in
/// 48..=84 so every transposition by up to ±11 stays in MIDI range.
pub fn random_lead_sheet(rng: &mut ChaCha8Rng, chords_per_bar: u32) -> LeadSheet {
    let bars = rng.random_range(1..=6u32);
    let tonic = PitchClass::wrapping(rng.random_range(0..12));
    let mut notes = Vec::new();
    let mut t = rng.random_range(0..2) * (PPQ as u32 / 2);
    while t < bars * BAR {
        let dur = [120, 240, 480, 720, 960][rng.random_range(0..5)].min(bars * BAR - t);
        if rng.random_bool(0.85) {
            notes.push(NoteEvent::new(t, dur, rng.random_range(48..=84)));
        }
        t += dur;
    }
    if notes.is_empty() {
        notes.push(NoteEvent::new(0, PPQ as u32, 60));
    }
    let mut chords = Vec::new();
    let window = BAR / chords_per_bar;
    for w in 0..bars * chords_per_bar {
        if w > 0 && rng.random_bool(0.3) {
            continue;
        }
        let root = PitchClass::wrapping(rng.random_range(0..12));
        let quality = match rng.random_range(0..5) {
            0 => ChordQuality::Major,
            1 => ChordQuality::Minor,
            2 => ChordQuality::Diminished,
            3 => ChordQuality::Augmented,
            _ => ChordQuality::Major,
        };
        chords.push(ChordEvent::triad(w * window, root, quality));
    }
    let melody = Melody::new(notes, PPQ, TimeSignature::COMMON, Some(tonic)).unwrap();
    LeadSheet::new(melody, chords, Some(tonic)).unwrap()
}

/// Brute-force Mann-Whitney: U from all pairs, p from every size-n1 subset
/// of the pooled positions.
pub struct MwuOracle {
    cache: HashMap<(Vec<u8>, usize), Vec<f64>>,
}

impl MwuOracle {
    pub fn new() -> Self {
        MwuOracle {
            cache: HashMap::new(),
        }
    }

    pub fn u(a: &[f64], b: &[f64]) -> f64 {
        let mut u = 0.0;
        for x in a {
            for y in b {
                if x < y {
                    u += 1.0;
                } else if x == y {
                    u += 0.5;
                }
            }
        }
        u
    }

    /// U values of every assignment, for integer-valued samples.
    fn null_values(&mut self, pooled: &[u8], n1: usize) -> &[f64] {
        let mut key = pooled.to_vec();
        key.sort_unstable();
        self.cache.entry((key.clone(), n1)).or_insert_with(|| {
            let n = key.len();
            let mut out = Vec::new();
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != n1 {
                    continue;
                }
                let (mut a, mut b) = (Vec::new(), Vec::new());
                for (i, &v) in key.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        a.push(f64::from(v));
                    } else {
                        b.push(f64::from(v));
                    }
                }
                out.push(Self::u(&a, &b));
            }
            out
        })
    }

    pub fn p_two_sided(&mut self, a: &[u8], b: &[u8]) -> f64 {
        let af: Vec<f64> = a.iter().map(|&v| f64::from(v)).collect();
        let bf: Vec<f64> = b.iter().map(|&v| f64::from(v)).collect();
        let u = Self::u(&af, &bf);
        let pooled: Vec<u8> = a.iter().chain(b).copied().collect();
        let values = self.null_values(&pooled, a.len());
        let total = values.len() as f64;
        let lower = values.iter().filter(|&&v| v <= u).count() as f64;
        let upper = values.iter().filter(|&&v| v >= u).count() as f64;
        (2.0 * lower.min(upper) / total).min(1.0)
    }
}

/// All multisets of size `k` over 1..=4, as sorted vectors.
pub fn multisets(k: usize) -> Vec<Vec<u8>> {
    fn go(k: usize, min: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in min..=4 {
            cur.push(v);
            go(k, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(k, 1, &mut Vec::new(), &mut out);
    out
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Logistic regression P(y = 1) = σ(a + b·x) by Newton-Raphson on the two
/// parameters, solving the 2×2 system directly.
pub fn logistic_mle(x: &[f64], y: &[bool]) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..100 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let p = sigmoid(a + b * xi);
            let r = f64::from(u8::from(yi)) - p;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += r * xi;
            h00 += w;
            h01 += w * xi;
            h11 += w * xi * xi;
        }
        let det = h00 * h11 - h01 * h01;
        let da = (h11 * g0 - h01 * g1) / det;
        let db = (h00 * g1 - h01 * g0) / det;
        a += da;
        b += db;
        if da.abs().max(db.abs()) < 1e-14 {
            break;
        }
    }
    (a, b)
}

/// Draws a 0-based category from P(Y <= j) = σ(θ_j − η).
pub fn sample_cumulative_logit(rng: &mut impl Rng, thresholds: &[f64], eta: f64) -> usize {
    let u: f64 = rng.random();
    thresholds
        .iter()
        .position(|&t| u <= sigmoid(t - eta))
        .unwrap_or(thresholds.len())
}

/// Rebuilds an arrangement from SMF bytes using `midly` as the reader, so
/// the roundtrip does not depend on the crate's own parser.
pub fn arrangement_via_midly(bytes: &[u8]) -> Result<harmonist::arrange::Arrangement, String> {
    use harmonist::arrange::{Arrangement, Track};
    use harmonist::condition::Modality;
    use midly::{MetaMessage, MidiMessage, Smf, Timing, TrackEventKind};

    let smf = Smf::parse(bytes).map_err(|e| e.to_string())?;
    let Timing::Metrical(ppq) = smf.header.timing else {
        return Err("timecode timing".into());
    };
    let mut tempo_bpm = 120;
    let mut time_signature = TimeSignature::COMMON;
    let mut chords = Vec::new();
    let mut tracks = Vec::new();
    for (i, events) in smf.tracks.iter().enumerate() {
        let mut tick = 0u32;
        let mut track = Track {
            name: String::new(),
            channel: 0,
            program: 0,
            volume: 127,
            notes: Vec::new(),
        };
        let mut open: HashMap<u8, Vec<u32>> = HashMap::new();
        for ev in events {
            tick += ev.delta.as_int();
            match ev.kind {
                TrackEventKind::Meta(MetaMessage::Tempo(t)) => {
                    tempo_bpm = (60_000_000 + t.as_int() / 2) / t.as_int();
                }
                TrackEventKind::Meta(MetaMessage::TimeSignature(n, d, _, _)) => {
                    time_signature = TimeSignature::new(n, 1 << d).map_err(|e| e.to_string())?;
                }
                TrackEventKind::Meta(MetaMessage::Marker(text)) => {
                    let text = String::from_utf8_lossy(text);
                    let (root, q) = text.split_once(':').ok_or("bad marker")?;
                    let quality = match q {
                        "maj" => Some(ChordQuality::Major),
                        "min" => Some(ChordQuality::Minor),
                        "dim" => Some(ChordQuality::Diminished),
                        "aug" => Some(ChordQuality::Augmented),
                        _ => None,
                    };
                    chords.push(ChordEvent {
                        onset: tick,
                        root: root.parse().map_err(|_| "bad root")?,
                        quality,
                    });
                }
                TrackEventKind::Meta(MetaMessage::TrackName(n)) => {
                    track.name = String::from_utf8_lossy(n).into_owned();
                }
                TrackEventKind::Midi { channel, message } => {
                    track.channel = channel.as_int();
                    match message {
                        MidiMessage::ProgramChange { program } => track.program = program.as_int(),
                        MidiMessage::Controller { controller, value }
                            if controller.as_int() == 7 =>
                        {
                            track.volume = value.as_int();
                        }
                        MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => {
                            open.entry(key.as_int()).or_default().push(tick);
                        }
                        MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                            let starts = open.get_mut(&key.as_int()).ok_or("orphan note-off")?;
                            let onset = starts.remove(0);
                            track
                                .notes
                                .push(NoteEvent::new(onset, tick - onset, key.as_int()));
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        if i > 0 {
            track.notes.sort_by_key(|n| (n.onset, n.pitch, n.duration));
            tracks.push(track);
        }
    }
    let modality = if tracks.len() == 1 {
        Modality::PianoSolo
    } else {
        Modality::Group
    };
    Ok(Arrangement {
        modality,
        ppq: ppq.as_int(),
        tempo_bpm,
        time_signature,
        tracks,
        chords,
    })
}
