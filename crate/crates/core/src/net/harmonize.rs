use super::mlp::MlpModel;
use super::NetError;
use crate::symbolic::{
    decode_chord, encode_melody, ChordEvent, HarmonizationGrid, LeadSheet, Melody,
};

/// Predicts one chord per grid window, independently.
///
/// The melody is passed through untouched; the returned sheet declares the
/// tonic the chords were decoded against.
pub fn harmonize(
    model: &MlpModel,
    melody: &Melody,
    chords_per_bar: u32,
) -> Result<LeadSheet, NetError> {
    model.ensure_harmonizer_shape()?;
    let grid = HarmonizationGrid::for_melody(melody, chords_per_bar)?;
    let encoded = encode_melody(melody, &grid)?;
    let chords = encoded
        .inputs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let (root, quality) = decode_chord(encoded.tonic, model.predict(x))?;
            Ok(ChordEvent::triad(grid.window(i).0, root, quality))
        })
        .collect::<Result<Vec<_>, NetError>>()?;
    Ok(LeadSheet::new(melody.clone(), chords, Some(encoded.tonic))?)
}
