use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::table::{ObservationTable, RANKS};
use super::StatsError;
use crate::condition::{Algorithm, Modality};

pub const MAX_ITERATIONS: usize = 200;
/// Convergence threshold on the max-norm of the log-likelihood gradient.
pub const FIT_TOLERANCE: f64 = 1e-8;
const SEPARATION_BOUND: f64 = 50.0;
const STEP_TOLERANCE: f64 = 1e-4;

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln F(x) for the logistic CDF, finite for all finite x.
fn log_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Result of a cumulative-logit fit with P(Y <= j | x) = F(θ_j − x·β).
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeLogitFit {
    pub thresholds: Vec<f64>,
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    /// Max-norm of the gradient in (θ, β) at the returned estimate.
    pub gradient_max_norm: f64,
}

struct Problem<'a> {
    y: &'a [usize],
    x: &'a DMatrix<f64>,
    categories: usize,
}

struct Evaluation {
    loglik: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Problem<'_> {
    fn k(&self) -> usize {
        self.categories - 1
    }

    fn dim(&self) -> usize {
        self.k() + self.x.ncols()
    }

    fn thresholds(&self, alpha: &[f64]) -> Vec<f64> {
        let mut theta = Vec::with_capacity(alpha.len());
        for (m, &a) in alpha.iter().enumerate() {
            theta.push(if m == 0 { a } else { theta[m - 1] + a.exp() });
        }
        theta
    }

    fn loglik(&self, params: &DVector<f64>) -> f64 {
        let k = self.k();
        let theta = self.thresholds(&params.as_slice()[..k]);
        let beta = params.rows(k, self.x.ncols());
        (0..self.y.len())
            .map(|i| {
                let eta = self.x.row(i).dot(&beta.transpose());
                let (hi, lo) = self.bounds(&theta, self.y[i], eta);
                log_prob(hi, lo)
            })
            .sum()
    }

    fn bounds(&self, theta: &[f64], y: usize, eta: f64) -> (f64, f64) {
        let hi = if y < self.k() {
            theta[y] - eta
        } else {
            f64::INFINITY
        };
        let lo = if y > 0 {
            theta[y - 1] - eta
        } else {
            f64::NEG_INFINITY
        };
        (hi, lo)
    }

    /// Log-likelihood with gradient and Hessian in (θ, β) coordinates.
    fn evaluate_theta(&self, theta: &[f64], beta: &[f64]) -> Evaluation {
        let (k, p) = (self.k(), self.x.ncols());
        let d = k + p;
        let beta = DVector::from_column_slice(beta);
        let mut loglik = 0.0;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        let mut da = DVector::zeros(d);
        let mut db = DVector::zeros(d);
        for i in 0..self.y.len() {
            let xi = self.x.row(i).transpose();
            let eta = xi.dot(&beta);
            let y = self.y[i];
            let (hi, lo) = self.bounds(theta, y, eta);
            let lp = log_prob(hi, lo);
            loglik += lp;
            // Densities divided by the cell probability, via logs.
            let ra = if hi.is_finite() {
                (log_pdf(hi) - lp).exp()
            } else {
                0.0
            };
            let rb = if lo.is_finite() {
                (log_pdf(lo) - lp).exp()
            } else {
                0.0
            };
            let sa = ra * (1.0 - 2.0 * logistic(hi));
            let sb = rb * (1.0 - 2.0 * logistic(lo));
            da.fill(0.0);
            db.fill(0.0);
            if y < k {
                da[y] = 1.0;
            }
            if y > 0 {
                db[y - 1] = 1.0;
            }
            for c in 0..p {
                da[k + c] = -xi[c];
                db[k + c] = -xi[c];
            }
            let g = &da * ra - &db * rb;
            grad += &g;
            hess.ger(sa, &da, &da, 1.0);
            hess.ger(-sb, &db, &db, 1.0);
            hess.ger(-1.0, &g, &g, 1.0);
        }
        Evaluation { loglik, grad, hess }
    }

    /// Same quantities in (α, β), where θ_1 = α_1 and θ_m = θ_{m-1} + e^{α_m}.
    /// Also returns the max-norm of the θ part of the gradient.
    fn evaluate(&self, params: &DVector<f64>) -> (Evaluation, f64) {
        let k = self.k();
        let alpha = &params.as_slice()[..k];
        let theta = self.thresholds(alpha);
        let ev = self.evaluate_theta(&theta, &params.as_slice()[k..]);
        let d = self.dim();
        let mut jac = DMatrix::<f64>::identity(d, d);
        for row in 0..k {
            for m in 0..=row {
                jac[(row, m)] = if m == 0 { 1.0 } else { alpha[m].exp() };
            }
        }
        let grad = jac.transpose() * &ev.grad;
        let mut hess = jac.transpose() * &ev.hess * &jac;
        for m in 1..k {
            let tail: f64 = (m..k).map(|j| ev.grad[j]).sum();
            hess[(m, m)] += alpha[m].exp() * tail;
        }
        let theta_grad_max = ev.grad.amax();
        (
            Evaluation {
                loglik: ev.loglik,
                grad,
                hess,
            },
            theta_grad_max,
        )
    }
}

fn log_pdf(x: f64) -> f64 {
    log_cdf(x) + log_cdf(-x)
}

/// ln(F(hi) − F(lo)) for hi > lo.
fn log_prob(hi: f64, lo: f64) -> f64 {
    let gap = lo - hi;
    let tail = if gap == f64::NEG_INFINITY {
        0.0
    } else {
        (-gap.exp_m1()).ln()
    };
    log_cdf(hi) + log_cdf(-lo) + tail
}

fn design_rank(x: &DMatrix<f64>) -> usize {
    let n = x.nrows();
    let mut full = DMatrix::from_element(n, x.ncols() + 1, 1.0);
    full.columns_mut(1, x.ncols()).copy_from(x);
    let sv = full.singular_values();
    let tol = sv.max() * 1e-10 * (n.max(full.ncols()) as f64);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Maximum-likelihood cumulative-logit fit by damped Newton steps.
///
/// `y` holds 0-based categories below `categories`; `x` has no intercept
/// column, since the thresholds play that role.
pub fn fit_cumulative_logit(
    y: &[usize],
    x: &DMatrix<f64>,
    categories: usize,
) -> Result<CumulativeLogitFit, StatsError> {
    if y.is_empty() {
        return Err(StatsError::NoObservations);
    }
    if categories < 2 || x.nrows() != y.len() {
        return Err(StatsError::Range(
            "need at least two categories and one design row per observation".into(),
        ));
    }
    let mut counts = vec![0usize; categories];
    for &c in y {
        *counts
            .get_mut(c)
            .ok_or_else(|| StatsError::Range(format!("category {c} out of range")))? += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(StatsError::EmptyCategory(empty + 1));
    }
    let rank = design_rank(x);
    if rank < x.ncols() + 1 {
        return Err(StatsError::RankDeficient {
            rank,
            columns: x.ncols() + 1,
        });
    }
    let problem = Problem { y, x, categories };
    let k = problem.k();
    let d = problem.dim();

    let n = y.len() as f64;
    let mut params = DVector::zeros(d);
    let mut cum = 0usize;
    let mut prev = 0.0;
    for j in 0..k {
        cum += counts[j];
        let p = cum as f64 / n;
        let theta = (p / (1.0 - p)).ln();
        params[j] = if j == 0 { theta } else { (theta - prev).ln() };
        prev = theta;
    }

    let mut iterations = 0;
    loop {
        let (ev, theta_grad_max) = problem.evaluate(&params);
        let grad_max = theta_grad_max.max(ev.grad.rows(k, d - k).amax());
        let theta = problem.thresholds(&params.as_slice()[..k]);
        if params.rows(k, d - k).amax() > SEPARATION_BOUND
            || theta.iter().any(|t| t.abs() > 2.0 * SEPARATION_BOUND)
        {
            return Err(StatsError::Separation);
        }
        let step = newton_step(&ev);
        // Under separation the gradient vanishes while Newton steps stay
        // large, so a small step is required as well.
        if grad_max <= FIT_TOLERANCE && step.amax() <= STEP_TOLERANCE {
            return Ok(CumulativeLogitFit {
                thresholds: theta,
                beta: params.as_slice()[k..].to_vec(),
                loglik: ev.loglik,
                iterations,
                gradient_max_norm: grad_max,
            });
        }
        if iterations == MAX_ITERATIONS {
            return Err(StatsError::NoConvergence {
                iterations,
                gradient: grad_max,
            });
        }
        iterations += 1;
        // Once the predicted gain is below what the log-likelihood can
        // resolve, comparing values is noise; take the full step.
        if ev.grad.dot(&step) < 1e-10 {
            params += step;
            continue;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &params + &step * t;
            let ll = problem.loglik(&candidate);
            if ll.is_finite() && ll >= ev.loglik {
                params = candidate;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(StatsError::NoConvergence {
                iterations,
                gradient: grad_max,
            });
        }
    }
}

/// Ascent direction solving (−H + λI) s = g, raising λ until the matrix is
/// positive definite.
fn newton_step(ev: &Evaluation) -> DVector<f64> {
    let d = ev.grad.len();
    let neg = -&ev.hess;
    let mut lambda = 0.0;
    loop {
        let m = &neg + DMatrix::identity(d, d) * lambda;
        if let Some(chol) = m.cholesky() {
            return chol.solve(&ev.grad);
        }
        lambda = if lambda == 0.0 {
            1e-8 * (1.0 + neg.diagonal().amax())
        } else {
            lambda * 10.0
        };
    }
}

/// One effect: a product of the indicator columns B, Group and musician.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Term(u8);

impl Term {
    pub const ALGORITHM: Term = Term(1);
    pub const MODALITY: Term = Term(2);
    pub const MUSICIANSHIP: Term = Term(4);
    pub const ALGORITHM_MODALITY: Term = Term(3);
    pub const ALGORITHM_MUSICIANSHIP: Term = Term(5);
    pub const MODALITY_MUSICIANSHIP: Term = Term(6);
    pub const THREE_WAY: Term = Term(7);

    pub fn from_bits(bits: u8) -> Option<Term> {
        (1..=7).contains(&bits).then_some(Term(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn order(self) -> u32 {
        self.0.count_ones()
    }

    /// True when `self` is `other` or an interaction containing it.
    pub fn contains(self, other: Term) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn value(self, algorithm: Algorithm, modality: Modality, musician: bool) -> f64 {
        let on = |bit: u8, x: bool| self.0 & bit == 0 || x;
        let v = on(1, algorithm == Algorithm::B)
            && on(2, modality == Modality::Group)
            && on(4, musician);
        f64::from(u8::from(v))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["algorithm", "modality", "musicianship"];
        let parts: Vec<&str> = (0..3)
            .filter(|b| self.0 & (1 << b) != 0)
            .map(|b| names[b])
            .collect();
        f.write_str(&parts.join(":"))
    }
}

/// Which effects enter the linear predictor, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    terms: Vec<Term>,
}

impl ModelSpec {
    pub fn new(mut terms: Vec<Term>) -> Self {
        terms.sort_by_key(|t| (t.order(), t.0));
        terms.dedup();
        ModelSpec { terms }
    }

    /// `ranking ~ algorithm * modality * musicianship`.
    pub fn full_factorial() -> Self {
        Self::new((1..=7).map(Term).collect())
    }

    pub fn main_effects() -> Self {
        Self::new(vec![Term::ALGORITHM, Term::MODALITY, Term::MUSICIANSHIP])
    }

    pub fn intercept_only() -> Self {
        Self::new(Vec::new())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// The model without `term` and every interaction containing it.
    pub fn without(&self, term: Term) -> ModelSpec {
        ModelSpec {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|t| !t.contains(term))
                .collect(),
        }
    }

    pub fn design(&self, table: &ObservationTable) -> DMatrix<f64> {
        DMatrix::from_fn(table.len(), self.terms.len(), |i, c| {
            let r = &table.rows()[i];
            self.terms[c].value(r.algorithm, r.modality, r.musician)
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("ranking ~ 1");
        }
        let names: Vec<String> = self.terms.iter().map(Term::to_string).collect();
        write!(f, "ranking ~ {}", names.join(" + "))
    }
}

/// A fitted cumulative link model over rankings 1 to 4.
#[derive(Debug, Clone, PartialEq)]
pub struct ClmModel {
    pub spec: ModelSpec,
    pub thresholds: Vec<f64>,
    pub beta: Vec<f64>,
    pub loglik: f64,
    /// Linear predictor per table row.
    pub eta: Vec<f64>,
    pub observations: usize,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    /// Share of musicians among participants, for averaging predictions.
    pub musician_share: f64,
}

impl ClmModel {
    pub fn categories(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn linear_predictor(
        &self,
        algorithm: Algorithm,
        modality: Modality,
        musician: bool,
    ) -> f64 {
        self.spec
            .terms()
            .iter()
            .zip(&self.beta)
            .map(|(t, b)| t.value(algorithm, modality, musician) * b)
            .sum()
    }

    /// P(Y = j) for j = 1..=J given the cell.
    pub fn category_probabilities(
        &self,
        algorithm: Algorithm,
        modality: Modality,
        musician: bool,
    ) -> Vec<f64> {
        let eta = self.linear_predictor(algorithm, modality, musician);
        let mut out = Vec::with_capacity(self.categories());
        let mut below = 0.0;
        for j in 0..self.categories() {
            let cum = self.thresholds.get(j).map_or(1.0, |t| logistic(t - eta));
            out.push(cum - below);
            below = cum;
        }
        out
    }

    pub fn coefficient(&self, term: Term) -> Option<f64> {
        self.spec
            .terms()
            .iter()
            .position(|&t| t == term)
            .map(|i| self.beta[i])
    }
}

pub fn fit_clm(table: &ObservationTable, spec: &ModelSpec) -> Result<ClmModel, StatsError> {
    if table.is_empty() {
        return Err(StatsError::NoObservations);
    }
    let y: Vec<usize> = table
        .rows()
        .iter()
        .map(|r| usize::from(r.ranking) - 1)
        .collect();
    let x = spec.design(table);
    let fit = fit_cumulative_logit(&y, &x, RANKS)?;
    let beta = DVector::from_column_slice(&fit.beta);
    let eta = (&x * &beta).iter().copied().collect();
    Ok(ClmModel {
        spec: spec.clone(),
        thresholds: fit.thresholds,
        beta: fit.beta,
        loglik: fit.loglik,
        eta,
        observations: table.len(),
        iterations: fit.iterations,
        gradient_max_norm: fit.gradient_max_norm,
        musician_share: table.musician_share(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_prob_matches_direct_difference() {
        for &(hi, lo) in &[
            (1.0, -1.0),
            (0.3, 0.2),
            (5.0, f64::NEG_INFINITY),
            (f64::INFINITY, -2.0),
        ] {
            let direct = logistic(hi) - logistic(lo);
            assert!((log_prob(hi, lo) - direct.ln()).abs() < 1e-12);
        }
        assert!(log_prob(-800.0, -801.0).is_finite());
    }

    #[test]
    fn intercept_only_closed_form() {
        let mut y = Vec::new();
        for (j, &c) in [10usize, 20, 30, 40].iter().enumerate() {
            y.extend(std::iter::repeat_n(j, c));
        }
        let x = DMatrix::zeros(100, 0);
        let fit = fit_cumulative_logit(&y, &x, 4).unwrap();
        let want = [(1.0f64 / 9.0).ln(), (3.0f64 / 7.0).ln(), 1.5f64.ln()];
        for (t, w) in fit.thresholds.iter().zip(want) {
            assert!((t - w).abs() < 1e-9, "{t} vs {w}");
        }
        assert!(fit.gradient_max_norm <= FIT_TOLERANCE);
    }

    #[test]
    fn fit_errors() {
        let x = DMatrix::zeros(3, 0);
        assert!(matches!(
            fit_cumulative_logit(&[0, 0, 2], &x, 3),
            Err(StatsError::EmptyCategory(2))
        ));
        let x = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            fit_cumulative_logit(&[0, 1, 0, 1], &x, 2),
            Err(StatsError::RankDeficient { .. })
        ));
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 1.0, 1.0]);
        assert!(matches!(
            fit_cumulative_logit(&[0, 0, 1, 1], &x, 2),
            Err(StatsError::Separation)
        ));
    }

    #[test]
    fn term_algebra() {
        assert!(Term::THREE_WAY.contains(Term::ALGORITHM));
        assert!(!Term::MODALITY_MUSICIANSHIP.contains(Term::ALGORITHM));
        assert_eq!(Term::ALGORITHM_MODALITY.to_string(), "algorithm:modality");
        let reduced = ModelSpec::full_factorial().without(Term::ALGORITHM_MODALITY);
        assert_eq!(reduced.terms().len(), 5);
        assert_eq!(
            Term::ALGORITHM_MODALITY.value(Algorithm::B, Modality::Group, false),
            1.0
        );
        assert_eq!(
            Term::ALGORITHM_MODALITY.value(Algorithm::A, Modality::Group, true),
            0.0
        );
    }
}
