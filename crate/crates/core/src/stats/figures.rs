use serde::Serialize;

use super::clm::ClmModel;
use super::table::{ObservationTable, RANKS};
use crate::condition::{Algorithm, Modality};

/// Counts of each ranking per (algorithm, modality) cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RankDistribution {
    /// Indexed `[algorithm][modality][ranking - 1]`.
    pub counts: [[[u64; RANKS]; 2]; 2],
}

impl RankDistribution {
    pub fn cell(&self, algorithm: Algorithm, modality: Modality) -> [u64; RANKS] {
        self.counts[algorithm.index()][modality.index()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,modality,ranking,count\n");
        for alg in Algorithm::ALL {
            for m in Modality::ALL {
                for (r, c) in self.cell(alg, m).iter().enumerate() {
                    out.push_str(&format!("{alg},{m},{},{c}\n", r + 1));
                }
            }
        }
        out
    }
}

pub fn rank_distribution(table: &ObservationTable) -> RankDistribution {
    let mut d = RankDistribution::default();
    for r in table.rows() {
        d.counts[r.algorithm.index()][r.modality.index()][usize::from(r.ranking) - 1] += 1;
    }
    d
}

/// Model-predicted ranking probabilities per (algorithm, modality) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionProbabilities {
    /// Indexed `[algorithm][modality][ranking - 1]`.
    pub probabilities: [[[f64; RANKS]; 2]; 2],
}

impl InteractionProbabilities {
    pub fn cell(&self, algorithm: Algorithm, modality: Modality) -> [f64; RANKS] {
        self.probabilities[algorithm.index()][modality.index()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,modality,ranking,probability\n");
        for alg in Algorithm::ALL {
            for m in Modality::ALL {
                for (r, p) in self.cell(alg, m).iter().enumerate() {
                    out.push_str(&format!("{alg},{m},{},{p:.6}\n", r + 1));
                }
            }
        }
        out
    }
}

/// Averages the musician and non-musician predictions by the model's
/// observed musician share.
pub fn interaction_probabilities(model: &ClmModel) -> InteractionProbabilities {
    let w = model.musician_share;
    let mut probabilities = [[[0.0; RANKS]; 2]; 2];
    for alg in Algorithm::ALL {
        for m in Modality::ALL {
            let yes = model.category_probabilities(alg, m, true);
            let no = model.category_probabilities(alg, m, false);
            for r in 0..RANKS {
                probabilities[alg.index()][m.index()][r] = w * yes[r] + (1.0 - w) * no[r];
            }
        }
    }
    InteractionProbabilities { probabilities }
}
