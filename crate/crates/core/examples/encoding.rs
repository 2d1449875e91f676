//! Encodes a short G-minor lead sheet into tonic-relative note vectors and
//! chord codes, then decodes the codes back to chord names.

use harmonist::symbolic::io::parse_lead_sheet;
use harmonist::symbolic::{decode_chord, encode_leadsheet, HarmonizationGrid};

const SHEET: &str = r#"{
    "ppq": 480,
    "time_signature": "4/4",
    "key": { "tonic": "G", "mode": "minor" },
    "notes": [
        { "onset": 0, "duration": 960, "pitch": 67 },
        { "onset": 960, "duration": 960, "pitch": 70 },
        { "onset": 1920, "duration": 960, "pitch": 72 },
        { "onset": 2880, "duration": 960, "pitch": 75 },
        { "onset": 3840, "duration": 1920, "pitch": 74 }
    ],
    "chords": [
        { "onset": 0, "root": "G", "quality": "m" },
        { "onset": 1920, "root": "C", "quality": "m7" },
        { "onset": 3840, "root": "D", "quality": "maj" }
    ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sheet = parse_lead_sheet(SHEET)?;
    let grid = HarmonizationGrid::for_lead_sheet(&sheet, 1)?;
    let encoded = encode_leadsheet(&sheet, &grid)?;
    println!("tonic {}", encoded.tonic);
    for (x, code) in encoded
        .inputs
        .iter()
        .zip(encoded.codes().unwrap_or_default())
    {
        let (root, quality) = decode_chord(encoded.tonic, code.into())?;
        println!(
            "{:?}  code {code:>2}  {root}:{}",
            x.bits(),
            quality.short_name()
        );
    }
    Ok(())
}
