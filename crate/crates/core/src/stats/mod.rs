//! Analysis of the ranking data: Mann-Whitney U, cumulative-logit models,
//! likelihood-ratio ANOVA and the tables behind the rank plots.

mod anova;
mod clm;
mod figures;
mod mwu;
mod report;
mod table;

use std::path::PathBuf;

pub use anova::{anova_lr, AnovaRow, AnovaTable};
pub use clm::{
    fit_clm, fit_cumulative_logit, logistic, ClmModel, CumulativeLogitFit, ModelSpec, Term,
    FIT_TOLERANCE, MAX_ITERATIONS,
};
pub use figures::{
    interaction_probabilities, rank_distribution, InteractionProbabilities, RankDistribution,
};
pub use mwu::{mann_whitney_u, MwuMethod, MwuResult, MwuTest, EXACT_SIZE_CAP};
pub use report::{analyze, modality_comparisons, Analysis, ModalityComparison};
pub use table::{binarize_musicianship, Observation, ObservationTable, RANKS};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("no observations")]
    NoObservations,
    #[error("sample {0} is empty")]
    EmptySample(char),
    #[error("exact test supports n1 + n2 <= {max}, got {n}")]
    SizeCap { n: usize, max: usize },
    #[error("value out of range: {0}")]
    Range(String),
    #[error("outcome category {0} has no observations")]
    EmptyCategory(usize),
    #[error("design matrix has rank {rank} but {columns} columns")]
    RankDeficient { rank: usize, columns: usize },
    #[error("estimates diverge (separation in the data)")]
    Separation,
    #[error("no convergence after {iterations} iterations (gradient {gradient:e})")]
    NoConvergence { iterations: usize, gradient: f64 },
    #[error("fitting the model without {term}: {source}")]
    Reduced {
        term: String,
        #[source]
        source: Box<StatsError>,
    },
    #[error("bad response table: {0}")]
    Table(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
