use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::clm::{fit_clm, ClmModel, ModelSpec, Term};
use super::table::ObservationTable;
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub term: String,
    pub df: usize,
    pub lr: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
}

impl AnovaTable {
    pub fn row(&self, term: Term) -> Option<&AnovaRow> {
        let name = term.to_string();
        self.rows.iter().find(|r| r.term == name)
    }
}

/// Likelihood-ratio tests of each term of `spec`. The reduced model drops
/// the term together with every interaction that contains it.
pub fn anova_lr(
    spec: &ModelSpec,
    table: &ObservationTable,
) -> Result<(ClmModel, AnovaTable), StatsError> {
    let full = fit_clm(table, spec)?;
    let mut rows = Vec::with_capacity(spec.terms().len());
    for &term in spec.terms() {
        let reduced_spec = spec.without(term);
        let reduced = fit_clm(table, &reduced_spec).map_err(|e| StatsError::Reduced {
            term: term.to_string(),
            source: Box::new(e),
        })?;
        let df = spec.terms().len() - reduced_spec.terms().len();
        let lr = (2.0 * (full.loglik - reduced.loglik)).max(0.0);
        let p_value = ChiSquared::new(df as f64)
            .map(|d| d.sf(lr))
            .unwrap_or(f64::NAN);
        rows.push(AnovaRow {
            term: term.to_string(),
            df,
            lr,
            p_value,
        });
    }
    Ok((full, AnovaTable { rows }))
}
