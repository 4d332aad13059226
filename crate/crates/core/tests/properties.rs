use pmnl::linalg::{luders_update, Branch, DensityOperator};
use pmnl::model::{build_ideal_state, context_table, Observable, ObservableLabel, Registry};
use pmnl::noise::NoiseModel;
use pmnl::sampling::{estimate, sample_table, standard_plans, EstimateOptions};
use pmnl::sequential::{BobPlacement, Engine, MeasurementPlan, OutcomeTuple, SignMode};
use pmnl::ContextId;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Joint outcome distribution of Alice measuring `labels` in order, without
/// any engine machinery. Index bit k set means outcome −1 at position k.
fn sequential_oracle(state: &DensityOperator, labels: &[Observable]) -> Vec<f64> {
    let reg = Registry::get();
    let mut branches = vec![(state.clone(), 1.0, 0usize)];
    for (k, &o) in labels.iter().enumerate() {
        let p = reg.projectors(ObservableLabel::alice(o));
        let mut next = Vec::new();
        for (rho, w, idx) in branches {
            for (bit, proj) in [(0, &p.plus), (1, &p.minus)] {
                if let Branch::Reached { probability, state } = luders_update(&rho, proj).unwrap() {
                    next.push((state, w * probability, idx | (bit << k)));
                }
            }
        }
        branches = next;
    }
    let mut out = vec![0.0; 1 << labels.len()];
    for (_, w, idx) in branches {
        out[idx] += w;
    }
    out
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

#[test]
fn order_permutation_invariance_within_contexts() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut states = vec![build_ideal_state().density()];
    states.extend((0..5).map(|_| DensityOperator::random(&mut rng, 4)));
    for state in &states {
        for seq in context_table() {
            let labels = seq.labels;
            let reference = sequential_oracle(state, &labels);
            for perm in PERMUTATIONS {
                let order: Vec<Observable> = perm.iter().map(|&i| labels[i]).collect();
                let permuted = sequential_oracle(state, &order);
                // Map the permuted outcome index back to original positions.
                for (idx, &p) in permuted.iter().enumerate() {
                    let mut orig = 0;
                    for (k, &i) in perm.iter().enumerate() {
                        orig |= ((idx >> k) & 1) << i;
                    }
                    assert!(
                        (p - reference[orig]).abs() < 1e-12,
                        "{} order {perm:?}",
                        seq.id.symbol()
                    );
                }
            }
        }
    }
}

#[test]
fn engine_matches_sequential_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let state = DensityOperator::random(&mut rng, 4);
    for seq in ContextId::ALL {
        let d = Engine::ideal().run_plan(&state, &MeasurementPlan::alice_only(seq)).unwrap();
        let oracle = sequential_oracle(&state, &seq.labels());
        for (t, p) in d.entries() {
            let idx: usize = t.alice.iter().enumerate().map(|(k, &o)| usize::from(o < 0) << k).sum();
            assert!((p - oracle[idx]).abs() < 1e-12);
        }
    }
}

#[test]
fn bob_placement_is_irrelevant() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let states = [
        build_ideal_state().density(),
        DensityOperator::random(&mut rng, 4),
    ];
    let placements = [
        BobPlacement::AfterFirst,
        BobPlacement::AfterSecond,
        BobPlacement::AfterAlice,
    ];
    for eta in [1.0, 0.9, 0.5] {
        let engine = Engine::with_visibility(eta).unwrap();
        for state in &states {
            for plan in MeasurementPlan::s_plans() {
                let base = engine.run_plan_with(state, &plan, BobPlacement::BeforeAlice).unwrap();
                for placement in placements {
                    let d = engine.run_plan_with(state, &plan, placement).unwrap();
                    for (a, b) in base.probabilities().iter().zip(d.probabilities()) {
                        assert!((a - b).abs() < 1e-12, "{plan} {placement:?}");
                    }
                }
            }
        }
    }
}

fn omega(model: NoiseModel) -> f64 {
    model.evaluate(SignMode::Absolute).unwrap().omega
}

#[test]
fn omega_monotone_in_each_noise_parameter() {
    let grid: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let series = [
        grid.iter()
            .map(|&t| omega(NoiseModel { ideal_fraction: 1.0 - t, ..NoiseModel::IDEAL }))
            .collect::<Vec<_>>(),
        grid.iter()
            .map(|&t| omega(NoiseModel { phase: t * std::f64::consts::FRAC_PI_2, ..NoiseModel::IDEAL }))
            .collect(),
        grid.iter()
            .map(|&t| omega(NoiseModel { visibility: 1.0 - t, ..NoiseModel::IDEAL }))
            .collect(),
    ];
    for values in &series {
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{values:?}");
        }
        assert!((values[0] - 18.0).abs() < 1e-9);
    }
    // Negative phases mirror positive ones.
    for &t in &grid[1..] {
        let p = omega(NoiseModel { phase: t, ..NoiseModel::IDEAL });
        let n = omega(NoiseModel { phase: -t, ..NoiseModel::IDEAL });
        assert!((p - n).abs() < 1e-12);
    }
}

#[test]
fn chi_state_independent_under_state_noise() {
    for i in 0..=5 {
        for j in 0..=5 {
            let model = NoiseModel {
                ideal_fraction: f64::from(i) / 5.0,
                phase: f64::from(j) * 0.6,
                ..NoiseModel::IDEAL
            };
            let chi = model.evaluate(SignMode::Absolute).unwrap().chi.total;
            assert!((chi - 6.0).abs() < 1e-9, "{model:?}: {chi}");
        }
    }
    let lowered = NoiseModel { visibility: 0.95, ..NoiseModel::IDEAL };
    assert!(lowered.evaluate(SignMode::Absolute).unwrap().chi.total < 6.0 - 1e-3);
}

#[test]
fn no_signaling_on_noisy_states() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    for model in [
        NoiseModel::IDEAL,
        NoiseModel { ideal_fraction: 0.7, phase: 0.4, visibility: 0.8, ..NoiseModel::IDEAL },
        NoiseModel { phase: 1.2, visibility: 0.3, ..NoiseModel::IDEAL },
    ] {
        let (state, engine) = model.prepare().unwrap();
        let r = engine.no_signaling_report(&state).unwrap();
        assert!(r.max_deviation <= 1e-10, "{model:?}: {r:?}");
    }
    let state = DensityOperator::random(&mut rng, 4);
    let r = Engine::with_visibility(0.6).unwrap().no_signaling_report(&state).unwrap();
    assert!(r.max_deviation <= 1e-10);
}

#[test]
fn thinning_leaves_expectations_unchanged() {
    let base = NoiseModel { phase: 0.26, visibility: 0.985, ..NoiseModel::IDEAL };
    let thinned = NoiseModel { detection_efficiency: 0.2, ..base };
    let exact = base.evaluate(SignMode::Absolute).unwrap();
    for (model, seed) in [(base, 21), (thinned, 22)] {
        let t = sample_table(&model, &standard_plans(), 200_000, seed).unwrap();
        let e = estimate(&t, EstimateOptions::default()).unwrap();
        assert!((e.omega.value - exact.omega).abs() < 5.0 * e.omega.standard_error);
        assert!((e.chi.value - exact.chi.total).abs() < 5.0 * e.chi.standard_error);
    }
    let full = estimate(&sample_table(&base, &standard_plans(), 200_000, 23).unwrap(), EstimateOptions::default()).unwrap();
    let thin = estimate(&sample_table(&thinned, &standard_plans(), 200_000, 23).unwrap(), EstimateOptions::default()).unwrap();
    // Five times fewer recorded shots: errors grow by about √5.
    let ratio = thin.omega.standard_error / full.omega.standard_error;
    assert!((ratio / 5f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn outcome_indexing_round_trips() {
    for with_bob in [false, true] {
        let n = if with_bob { 16 } else { 8 };
        for i in 0..n {
            assert_eq!(OutcomeTuple::from_index(i, with_bob).index(), i);
        }
    }
}
