use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpModel, INPUT_WIDTH, OUTPUT_WIDTH};
use super::NetError;
use crate::symbolic::{encode_leadsheet, HarmonizationGrid, LeadSheet, NoteVector, SymbolicError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_sizes: vec![64],
            learning_rate: 0.05,
            epochs: 300,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |msg: &str| Err(NetError::InvalidConfig(msg.to_string()));
        if self.hidden_sizes.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be a positive number");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(INPUT_WIDTH)
            .chain(self.hidden_sizes.iter().copied())
            .chain(std::iter::once(OUTPUT_WIDTH))
            .collect()
    }
}

/// (note vector, chord code) pairs pooled over a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub items: Vec<(NoteVector, u8)>,
}

impl Dataset {
    pub fn new(items: Vec<(NoteVector, u8)>) -> Result<Self, NetError> {
        if let Some((_, code)) = items.iter().find(|(_, c)| usize::from(*c) >= OUTPUT_WIDTH) {
            return Err(NetError::Symbolic(SymbolicError::CodeRange((*code).into())));
        }
        Ok(Dataset { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn samples(&self) -> Vec<([f64; INPUT_WIDTH], usize)> {
        self.items
            .iter()
            .map(|(x, y)| (x.to_f64(), usize::from(*y)))
            .collect()
    }
}

/// Encodes every sheet on a `chords_per_bar` grid and pools the windows.
///
/// Sheets that cannot be encoded are skipped with a warning.
pub fn build_dataset(sheets: &[LeadSheet], chords_per_bar: u32) -> Result<Dataset, NetError> {
    let mut items = Vec::new();
    for (i, sheet) in sheets.iter().enumerate() {
        let grid = HarmonizationGrid::for_lead_sheet(sheet, chords_per_bar)?;
        let encoded = match encode_leadsheet(sheet, &grid) {
            Ok(e) => e,
            Err(err @ (SymbolicError::NoChords | SymbolicError::EmptyInput)) => {
                warn!("lead sheet {i} skipped: {err}");
                continue;
            }
            Err(err) => return Err(err.into()),
        };
        let labels = encoded.labels.expect("lead-sheet encodings carry labels");
        items.extend(
            encoded
                .inputs
                .into_iter()
                .zip(labels.iter().map(|l| l.code())),
        );
    }
    if items.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    Dataset::new(items)
}

/// Mini-batch gradient descent on mean cross-entropy.
///
/// Returns the model and one mean training loss per epoch. Results depend
/// only on `(dataset, config)`.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(MlpModel, Vec<f64>), NetError> {
    train_with_progress(dataset, config, |_, _| {})
}

pub fn train_with_progress(
    dataset: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<(MlpModel, Vec<f64>), NetError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::initialized(&config.layer_sizes(), &mut rng)?;
    let samples = dataset.samples();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| samples[i]).collect();
            let (loss, gradient) = model.loss_and_gradient(&batch);
            if !loss.is_finite() {
                return Err(NetError::Diverged { epoch });
            }
            total += loss * batch.len() as f64;
            model.descend(&gradient, config.learning_rate);
        }
        let mean = total / samples.len() as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(NetError::Diverged { epoch });
        }
        on_epoch(epoch, mean);
        history.push(mean);
    }
    Ok((model, history))
}

/// Fraction of items whose argmax prediction equals the label.
pub fn accuracy(model: &MlpModel, dataset: &Dataset) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let hits = dataset
        .items
        .iter()
        .filter(|(x, y)| model.predict(x) == usize::from(*y))
        .count();
    hits as f64 / dataset.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let c = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        assert_eq!(TrainConfig::default().layer_sizes(), vec![12, 64, 48]);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(
            train(&Dataset::default(), &TrainConfig::default()),
            Err(NetError::EmptyDataset)
        ));
        assert!(matches!(build_dataset(&[], 1), Err(NetError::EmptyDataset)));
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let items = (0..48u8)
            .map(|c| (NoteVector::from_mask(0x0fff), c))
            .collect();
        let data = Dataset::new(items).unwrap();
        let config = TrainConfig {
            learning_rate: 1e300,
            epochs: 5,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&data, &config),
            Err(NetError::Diverged { epoch: 1 })
        ));
    }

    #[test]
    fn single_pair_is_memorized() {
        let x = NoteVector::from_bits([1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        let data = Dataset::new(vec![(x, 29); 8]).unwrap();
        let config = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let (model, history) = train(&data, &config).unwrap();
        assert_eq!(history.len(), 200);
        assert_eq!(model.predict(&x), 29);
        assert!(history[199] < history[0]);
    }
}
