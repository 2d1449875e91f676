//! Renders one lead sheet as the piano-solo and the group version and
//! writes both as Standard MIDI Files into the system temp directory.

use harmonist::arrange::{arrange, builtin_voicing_chart, write_midi, RenderConfig};
use harmonist::condition::Modality;
use harmonist::symbolic::io::parse_lead_sheet;

const SHEET: &str = r#"{
    "ppq": 480,
    "time_signature": "4/4",
    "key": { "tonic": "C" },
    "notes": [
        { "onset": 0, "duration": 480, "pitch": 72 },
        { "onset": 480, "duration": 480, "pitch": 71 },
        { "onset": 960, "duration": 960, "pitch": 69 },
        { "onset": 1920, "duration": 960, "pitch": 67 },
        { "onset": 2880, "duration": 960, "pitch": 72 }
    ],
    "chords": [
        { "onset": 0, "root": "A", "quality": "minor" },
        { "onset": 1920, "root": "G", "quality": "major" }
    ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sheet = parse_lead_sheet(SHEET)?;
    let chart = builtin_voicing_chart();
    let config = RenderConfig::default();
    let dir = std::env::temp_dir();
    for modality in [Modality::PianoSolo, Modality::Group] {
        let arr = arrange(&sheet, modality, &chart, &config)?;
        let path = dir.join(format!("arrangement_{}.mid", modality.as_str()));
        write_midi(&path, &arr, &config)?;
        println!("{}", path.display());
        for t in &arr.tracks {
            println!(
                "  {:<16} program {:>3}  volume {:>3}  {} notes",
                t.name,
                t.program,
                t.volume,
                t.notes.len()
            );
        }
    }
    Ok(())
}
