mod common;

use common::sample_cumulative_logit;
use harmonist::condition::{Algorithm, Modality};
use harmonist::stats::{
    anova_lr, fit_clm, fit_cumulative_logit, interaction_probabilities, logistic, mann_whitney_u,
    rank_distribution, ModelSpec, MwuMethod, Observation, ObservationTable, StatsError, Term,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const CELLS: [(Algorithm, Modality); 4] = [
    (Algorithm::A, Modality::PianoSolo),
    (Algorithm::A, Modality::Group),
    (Algorithm::B, Modality::PianoSolo),
    (Algorithm::B, Modality::Group),
];

/// 61 participants, two observations per cell each, drawn independently
/// from a cumulative-logit model with the given linear predictor.
fn sample_table(seed: u64, eta: impl Fn(Algorithm, Modality, bool) -> f64) -> ObservationTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresholds = [-1.1, 0.0, 1.1];
    let mut rows = Vec::new();
    for p in 0..61 {
        let musician = rng.random_bool(0.5);
        for (alg, m) in CELLS {
            for _ in 0..2 {
                let y = sample_cumulative_logit(&mut rng, &thresholds, eta(alg, m, musician));
                rows.push(
                    Observation::new(format!("p{p}"), alg, m, musician, y as u8 + 1).unwrap(),
                );
            }
        }
    }
    ObservationTable::new(rows)
}

fn cumulative_loglik(y: &[usize], x: &DMatrix<f64>, theta: &[f64], beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (i, &c) in y.iter().enumerate() {
        let eta: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
        let upper = theta.get(c).map_or(1.0, |t| logistic(t - eta));
        let lower = if c == 0 {
            0.0
        } else {
            logistic(theta[c - 1] - eta)
        };
        ll += (upper - lower).ln();
    }
    ll
}

proptest! {
    #[test]
    fn swapping_samples_reflects_u(
        a in prop::collection::vec(1u8..=4, 1..15),
        b in prop::collection::vec(1u8..=4, 1..15),
        exact in any::<bool>(),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let method = if exact { MwuMethod::Exact } else { MwuMethod::Normal };
        let ab = mann_whitney_u(&a, &b, method);
        let ba = mann_whitney_u(&b, &a, method);
        match (ab, ba) {
            (Ok(ab), Ok(ba)) => {
                prop_assert!((ab.u + ba.u - (a.len() * b.len()) as f64).abs() < 1e-9);
                prop_assert!((ab.p_two_sided - ba.p_two_sided).abs() < 1e-12);
                prop_assert!(ab.p_two_sided > 0.0 && ab.p_two_sided <= 1.0);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "one direction failed"),
        }
    }

    #[test]
    fn fitted_thresholds_increase(seed in any::<u64>(), shift in -2.0f64..2.0) {
        let table = sample_table(seed, |alg, _, _| if alg == Algorithm::A { shift } else { 0.0 });
        let model = fit_clm(&table, &ModelSpec::main_effects()).unwrap();
        prop_assert!(model.thresholds.windows(2).all(|w| w[0] < w[1]));
        let probs = model.category_probabilities(Algorithm::A, Modality::Group, true);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mwu_rejects_empty_samples() {
    assert!(matches!(
        mann_whitney_u(&[], &[1.0], MwuMethod::Auto),
        Err(StatsError::EmptySample(_))
    ));
}

#[test]
fn estimate_is_a_local_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 400;
    let x = DMatrix::from_fn(n, 2, |_, _| StandardNormal.sample(&mut rng));
    let y: Vec<usize> = (0..n)
        .map(|i| {
            sample_cumulative_logit(
                &mut rng,
                &[-1.0, 0.2, 1.3],
                0.8 * x[(i, 0)] - 0.5 * x[(i, 1)],
            )
        })
        .collect();
    let fit = fit_cumulative_logit(&y, &x, 4).unwrap();
    let best = cumulative_loglik(&y, &x, &fit.thresholds, &fit.beta);
    assert!((best - fit.loglik).abs() < 1e-8);
    for _ in 0..100 {
        let dir: Vec<f64> = (0..5).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let step: Vec<f64> = dir.iter().map(|d| 0.1 * d / norm).collect();
        let theta: Vec<f64> = (0..3).map(|k| fit.thresholds[k] + step[k]).collect();
        let beta: Vec<f64> = (0..2).map(|k| fit.beta[k] + step[3 + k]).collect();
        if theta.windows(2).any(|w| w[0] >= w[1]) {
            continue;
        }
        assert!(cumulative_loglik(&y, &x, &theta, &beta) <= best + 1e-9);
    }
}

#[test]
fn duplicating_the_data_doubles_every_statistic() {
    let table = sample_table(5, |alg, m, _| {
        f64::from(u8::from(alg == Algorithm::A))
            * (0.5 + 0.7 * f64::from(u8::from(m == Modality::Group)))
    });
    let mut doubled = table.rows().to_vec();
    doubled.extend(table.rows().iter().map(|r| Observation {
        participant: format!("{}'", r.participant),
        ..r.clone()
    }));
    let doubled = ObservationTable::new(doubled);
    let spec = ModelSpec::full_factorial();
    let (m1, a1) = anova_lr(&spec, &table).unwrap();
    let (m2, a2) = anova_lr(&spec, &doubled).unwrap();
    assert!((m2.loglik - 2.0 * m1.loglik).abs() < 1e-6 * m1.loglik.abs());
    for (r1, r2) in a1.rows.iter().zip(&a2.rows) {
        assert_eq!(r1.df, r2.df);
        assert!(
            (r2.lr - 2.0 * r1.lr).abs() < 1e-5 * r1.lr.max(1.0),
            "{} {} {}",
            r1.term,
            r1.lr,
            r2.lr
        );
    }
    for (b1, b2) in m1.beta.iter().zip(&m2.beta) {
        assert!((b1 - b2).abs() < 1e-6);
    }
}

#[test]
fn absent_effect_is_rarely_significant() {
    let mut kept = 0;
    for seed in 0..100 {
        let table = sample_table(1000 + seed, |alg, m, _| {
            if alg == Algorithm::A {
                0.8 + if m == Modality::Group { 0.6 } else { 0.0 }
            } else {
                0.0
            }
        });
        let (_, anova) = anova_lr(&ModelSpec::full_factorial(), &table).unwrap();
        let row = anova.row(Term::MUSICIANSHIP).unwrap();
        assert_eq!(row.df, 4);
        if row.p_value > 0.05 {
            kept += 1;
        }
    }
    assert!(
        kept >= 90,
        "null term significant in {} of 100 runs",
        100 - kept
    );
}

#[test]
fn injected_interaction_is_detected() {
    let mut detected = 0;
    for seed in 0..100 {
        let table = sample_table(5000 + seed, |alg, m, _| {
            if alg == Algorithm::A && m == Modality::Group {
                1.5
            } else {
                0.0
            }
        });
        assert_eq!(table.len(), 488);
        let (_, anova) = anova_lr(&ModelSpec::full_factorial(), &table).unwrap();
        if anova.row(Term::ALGORITHM_MODALITY).unwrap().p_value < 0.01 {
            detected += 1;
        }
    }
    assert!(
        detected >= 90,
        "interaction detected in {detected} of 100 runs"
    );
}

#[test]
fn rank_distribution_counts_each_row_once() {
    let rows = vec![
        Observation::new("p", Algorithm::A, Modality::Group, true, 1).unwrap(),
        Observation::new("p", Algorithm::A, Modality::Group, true, 1).unwrap(),
        Observation::new("p", Algorithm::B, Modality::Group, true, 4).unwrap(),
        Observation::new("q", Algorithm::B, Modality::PianoSolo, false, 2).unwrap(),
    ];
    let dist = rank_distribution(&ObservationTable::new(rows));
    assert_eq!(dist.cell(Algorithm::A, Modality::Group), [2, 0, 0, 0]);
    assert_eq!(dist.cell(Algorithm::B, Modality::Group), [0, 0, 0, 1]);
    assert_eq!(dist.cell(Algorithm::B, Modality::PianoSolo), [0, 1, 0, 0]);
    assert_eq!(dist.cell(Algorithm::A, Modality::PianoSolo), [0, 0, 0, 0]);
    assert_eq!(dist.to_csv().lines().count(), 17);
}

#[test]
fn interaction_probabilities_are_distributions() {
    let table = sample_table(8, |alg, m, mus| {
        f64::from(u8::from(alg == Algorithm::A)) + f64::from(u8::from(m == Modality::Group)) * 0.3
            - f64::from(u8::from(mus)) * 0.4
    });
    let model = fit_clm(&table, &ModelSpec::full_factorial()).unwrap();
    let probs = interaction_probabilities(&model);
    for (alg, m) in CELLS {
        let cell = probs.cell(alg, m);
        assert!((cell.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(cell.iter().all(|p| *p > 0.0));
    }

    let mut flat = model.clone();
    flat.beta.iter_mut().for_each(|b| *b = 0.0);
    let probs = interaction_probabilities(&flat);
    let first = probs.cell(Algorithm::A, Modality::PianoSolo);
    for (alg, m) in CELLS {
        assert_eq!(probs.cell(alg, m), first);
    }
}
