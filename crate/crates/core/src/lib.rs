//! Melody harmonization and listening-study toolkit.
//!
//! * [`symbolic`]: melodies, lead sheets, key finding and the tonic-relative
//!   chord/note encodings.
//! * [`net`]: the 12→48 feed-forward chord predictor.
//! * [`arrange`]: piano-solo and group arrangements, exported as SMF.
//! * [`study`]: randomized ranking sessions, exclusion rules and the HTTP service.
//! * [`stats`]: Mann-Whitney U, cumulative link models and likelihood-ratio ANOVA.
//! * [`simulate`]: synthetic respondents for exercising the analysis.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod arrange;
pub mod cli;
pub mod condition;
pub mod net;
pub mod simulate;
pub mod smf;
pub mod stats;
pub mod study;
pub mod symbolic;
