//! Estimates keys with the Krumhansl-Schmuckler profiles, including the
//! correlation of every candidate.

use harmonist::symbolic::{
    detect_key, key_correlations, pitch_class_histogram, Melody, NoteEvent, PitchClass,
    TimeSignature,
};

fn melody(pitches: &[u8]) -> Melody {
    let notes = pitches
        .iter()
        .enumerate()
        .map(|(i, &p)| NoteEvent::new(i as u32 * 480, 480, p))
        .collect();
    Melody::new(notes, 480, TimeSignature::COMMON, None).expect("valid melody")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tunes = [
        ("D major scale", melody(&[62, 64, 66, 67, 69, 71, 73, 74])),
        (
            "A minor arpeggio",
            melody(&[57, 60, 64, 69, 64, 60, 57, 59, 56, 57]),
        ),
    ];
    for (name, m) in tunes {
        let key = detect_key(&m)?;
        println!("{name}: {key}");
        let corr = key_correlations(&pitch_class_histogram(&m));
        for (mode, row) in ["major", "minor"].iter().zip(corr) {
            let cells: Vec<String> = PitchClass::all()
                .zip(row)
                .map(|(pc, r)| format!("{pc}:{r:+.2}"))
                .collect();
            println!("  {mode:<5} {}", cells.join(" "));
        }
    }
    Ok(())
}
