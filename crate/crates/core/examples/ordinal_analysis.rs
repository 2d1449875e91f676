//! Simulates a full study and runs the ordinal analysis on the export:
//! per-modality Mann-Whitney tests, the cumulative-logit model and its
//! likelihood-ratio table.

use harmonist::simulate::{simulate, SimulationConfig};
use harmonist::stats::{analyze, ObservationTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let export = simulate(&SimulationConfig {
        seed: 2024,
        ..SimulationConfig::default()
    })?;
    let table = ObservationTable::from_export(&export.rows)?;
    let analysis = analyze(&table)?;
    print!("{}", analysis.to_text());
    println!();
    print!("{}", analysis.probabilities.to_csv());
    Ok(())
}
