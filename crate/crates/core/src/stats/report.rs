use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::anova::{anova_lr, AnovaTable};
use super::clm::{ClmModel, ModelSpec};
use super::figures::{
    interaction_probabilities, rank_distribution, InteractionProbabilities, RankDistribution,
};
use super::mwu::{mann_whitney_u, MwuMethod, MwuResult};
use super::table::ObservationTable;
use super::StatsError;
use crate::condition::{Algorithm, Modality};

/// Rankings of A against rankings of B within one modality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalityComparison {
    pub modality: Modality,
    pub result: MwuResult,
    pub mean_rank_a: f64,
    pub mean_rank_b: f64,
}

pub fn modality_comparisons(
    table: &ObservationTable,
) -> Result<Vec<ModalityComparison>, StatsError> {
    Modality::ALL
        .iter()
        .map(|&modality| {
            let a = table.rankings(Algorithm::A, modality);
            let b = table.rankings(Algorithm::B, modality);
            let result = mann_whitney_u(&a, &b, MwuMethod::Auto)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            Ok(ModalityComparison {
                modality,
                result,
                mean_rank_a: mean(&a),
                mean_rank_b: mean(&b),
            })
        })
        .collect()
}

/// Everything `analyze` reports for one response table.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub observations: usize,
    pub participants: usize,
    pub comparisons: Vec<ModalityComparison>,
    pub model: ClmModel,
    pub anova: AnovaTable,
    pub distribution: RankDistribution,
    pub probabilities: InteractionProbabilities,
}

pub fn analyze(table: &ObservationTable) -> Result<Analysis, StatsError> {
    if table.is_empty() {
        return Err(StatsError::NoObservations);
    }
    let comparisons = modality_comparisons(table)?;
    let (model, anova) = anova_lr(&ModelSpec::full_factorial(), table)?;
    Ok(Analysis {
        observations: table.len(),
        participants: table.participant_count(),
        comparisons,
        probabilities: interaction_probabilities(&model),
        distribution: rank_distribution(table),
        model,
        anova,
    })
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

impl Analysis {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} observations from {} participants\n",
            self.observations, self.participants
        );
        let _ = writeln!(s, "Mann-Whitney U, A vs B rankings");
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>6} {:>10} {:>8} {:>10} {:>8} {:>8}",
            "modality", "n_A", "n_B", "U", "z", "p", "mean_A", "mean_B"
        );
        for c in &self.comparisons {
            let z = c.result.z.map_or("-".to_string(), |z| format!("{z:.3}"));
            let _ = writeln!(
                s,
                "{:<10} {:>6} {:>6} {:>10.1} {:>8} {:>10} {:>8.3} {:>8.3}",
                c.modality.as_str(),
                c.result.n1,
                c.result.n2,
                c.result.u,
                z,
                fmt_p(c.result.p_two_sided),
                c.mean_rank_a,
                c.mean_rank_b
            );
        }
        let _ = writeln!(s, "\nCumulative link model: {}", self.model.spec);
        let _ = writeln!(s, "log-likelihood {:.4}", self.model.loglik);
        for (j, t) in self.model.thresholds.iter().enumerate() {
            let _ = writeln!(
                s,
                "  {:<36} {:>10.4}",
                format!("threshold {}|{}", j + 1, j + 2),
                t
            );
        }
        for (term, b) in self.model.spec.terms().iter().zip(&self.model.beta) {
            let _ = writeln!(s, "  {:<36} {:>10.4}", term.to_string(), b);
        }
        let _ = writeln!(s, "\nLikelihood-ratio ANOVA");
        let _ = writeln!(s, "{:<36} {:>4} {:>10} {:>10}", "term", "df", "LR", "p");
        for r in &self.anova.rows {
            let _ = writeln!(
                s,
                "{:<36} {:>4} {:>10.3} {:>10}",
                r.term,
                r.df,
                r.lr,
                fmt_p(r.p_value)
            );
        }
        let _ = writeln!(s, "\nRanking counts (1 = best)");
        let _ = writeln!(
            s,
            "{:<4} {:<8} {:>6} {:>6} {:>6} {:>6}",
            "alg", "modality", "1", "2", "3", "4"
        );
        for alg in Algorithm::ALL {
            for m in Modality::ALL {
                let c = self.distribution.cell(alg, m);
                let _ = writeln!(
                    s,
                    "{:<4} {:<8} {:>6} {:>6} {:>6} {:>6}",
                    alg.as_str(),
                    m.as_str(),
                    c[0],
                    c[1],
                    c[2],
                    c[3]
                );
            }
        }
        let _ = writeln!(s, "\nPredicted ranking probabilities");
        let _ = writeln!(
            s,
            "{:<4} {:<8} {:>6} {:>6} {:>6} {:>6}",
            "alg", "modality", "1", "2", "3", "4"
        );
        for alg in Algorithm::ALL {
            for m in Modality::ALL {
                let p = self.probabilities.cell(alg, m);
                let _ = writeln!(
                    s,
                    "{:<4} {:<8} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                    alg.as_str(),
                    m.as_str(),
                    p[0],
                    p[1],
                    p[2],
                    p[3]
                );
            }
        }
        s
    }

    pub fn mwu_csv(&self) -> String {
        let mut s =
            String::from("modality,n_a,n_b,u,z,p_two_sided,method,mean_rank_a,mean_rank_b\n");
        for c in &self.comparisons {
            let z = c.result.z.map_or(String::new(), |z| z.to_string());
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                c.modality,
                c.result.n1,
                c.result.n2,
                c.result.u,
                z,
                c.result.p_two_sided,
                c.result.method.as_str(),
                c.mean_rank_a,
                c.mean_rank_b
            );
        }
        s
    }

    pub fn anova_csv(&self) -> String {
        let mut s = String::from("term,df,lr,p_value\n");
        for r in &self.anova.rows {
            let _ = writeln!(s, "{},{},{},{}", r.term, r.df, r.lr, r.p_value);
        }
        s
    }

    pub fn coefficients_csv(&self) -> String {
        let mut s = String::from("parameter,estimate\n");
        for (j, t) in self.model.thresholds.iter().enumerate() {
            let _ = writeln!(s, "theta_{},{}", j + 1, t);
        }
        for (term, b) in self.model.spec.terms().iter().zip(&self.model.beta) {
            let _ = writeln!(s, "{term},{b}");
        }
        s
    }

    /// Writes report.txt and the CSV tables into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), StatsError> {
        let io = |source| StatsError::Io {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        let files = [
            ("report.txt", self.to_text()),
            ("mwu.csv", self.mwu_csv()),
            ("anova.csv", self.anova_csv()),
            ("coefficients.csv", self.coefficients_csv()),
            ("rank_distribution.csv", self.distribution.to_csv()),
            ("interaction_probabilities.csv", self.probabilities.to_csv()),
        ];
        for (name, body) in files {
            fs::write(dir.join(name), body).map_err(io)?;
        }
        Ok(())
    }
}
