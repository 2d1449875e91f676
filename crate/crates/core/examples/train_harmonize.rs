//! Trains a small harmonizer on a synthetic corpus where each half bar
//! spells out its triad, then harmonizes an unseen melody.

use harmonist::net::{accuracy, build_dataset, harmonize, train, TrainConfig};
use harmonist::symbolic::{
    ChordEvent, ChordQuality, LeadSheet, Melody, NoteEvent, PitchClass, TimeSignature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUALITIES: [ChordQuality; 3] = [
    ChordQuality::Major,
    ChordQuality::Minor,
    ChordQuality::Diminished,
];

fn corpus(sheets: usize, rng: &mut ChaCha8Rng) -> Vec<LeadSheet> {
    (0..sheets)
        .map(|_| {
            let mut notes = Vec::new();
            let mut chords = Vec::new();
            for w in 0..8u32 {
                let root = PitchClass::wrapping(rng.random_range(0..12));
                let quality = QUALITIES[rng.random_range(0..3)];
                chords.push(ChordEvent::triad(w * 960, root, quality));
                for (k, i) in quality.intervals().iter().enumerate() {
                    notes.push(NoteEvent::new(
                        w * 960 + k as u32 * 320,
                        320,
                        60 + (root.value() + i) % 12,
                    ));
                }
            }
            let tonic = Some(PitchClass::C);
            let melody =
                Melody::new(notes, 480, TimeSignature::COMMON, tonic).expect("valid melody");
            LeadSheet::new(melody, chords, tonic).expect("valid lead sheet")
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = build_dataset(&corpus(40, &mut rng), 2)?;
    let config = TrainConfig {
        hidden_sizes: vec![32],
        epochs: 150,
        ..TrainConfig::default()
    };
    let (model, losses) = train(&data, &config)?;
    println!(
        "{} windows, loss {:.3} -> {:.3}, accuracy {:.3}",
        data.len(),
        losses[0],
        losses[losses.len() - 1],
        accuracy(&model, &data)
    );

    // C major, A minor, F major, G major spelled as broken triads
    let pitches = [60, 64, 67, 69, 72, 76, 65, 69, 72, 67, 71, 74];
    let notes = pitches
        .iter()
        .enumerate()
        .map(|(i, &p)| NoteEvent::new(i as u32 * 320, 320, p))
        .collect();
    let melody = Melody::new(notes, 480, TimeSignature::COMMON, None)?;
    let sheet = harmonize(&model, &melody, 2)?;
    let names: Vec<String> = sheet.chords().iter().map(ToString::to_string).collect();
    println!("harmonization: {}", names.join(" | "));
    Ok(())
}
