mod common;

use common::*;
use oracle_tolls::ellipsoid::{central_cut_volume_ratio, Ellipsoid};
use oracle_tolls::enforce::{enforce_flow, enforce_flow_observed, separation_cut, CutKind, EnforcementConfig, EnforcementStatus};
use oracle_tolls::equilibrium::{marginal_cost_tolls, solve_equilibrium, system_optimum, EqConfig};
use oracle_tolls::instances::{generate, InstanceSpec, Topology};
use oracle_tolls::oracle::{OracleMode, QueryOracle};
use oracle_tolls::{Error, FlowVector, RoutingGame, TollVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle(game: RoutingGame) -> QueryOracle {
    QueryOracle::new(game, OracleMode::FlowOnly, 1e-12)
}

fn half() -> FlowVector {
    FlowVector::single(vec![0.5, 0.5]).unwrap()
}

#[test]
fn pigou_half_split() {
    let mut o = oracle(pigou());
    let cfg = EnforcementConfig::for_oracle(1e-3, &o);
    let r = enforce_flow(&mut o, &half(), &cfg).unwrap();
    assert_eq!(r.status, EnforcementStatus::Success);
    assert!(r.achieved_deviation <= 2e-3);
    // Equilibrium needs f_a + τ_a = 1 + τ_b, so τ_a − τ_b = 1 − f_a.
    let diff = r.tolls.values()[0] - r.tolls.values()[1];
    assert!((diff - 0.5).abs() <= 2e-3 + 1e-9, "{diff}");
}

#[test]
fn fig1_l2_half_split() {
    let mut o = oracle(fig1_l2());
    let cfg = EnforcementConfig::for_oracle(1e-3, &o);
    let r = enforce_flow(&mut o, &half(), &cfg).unwrap();
    assert_eq!(r.status, EnforcementStatus::Success);
    let diff = r.tolls.values()[1] - r.tolls.values()[0];
    assert!((diff - 0.5).abs() <= 2e-3 + 1e-9, "{diff}");
}

#[test]
fn untolled_equilibrium_is_accepted() {
    for t in ["braess", "grid:3x3", "parallel:5"] {
        let game = generate(&InstanceSpec::new(t.parse().unwrap()).with_seed(2)).unwrap();
        let eq = solve_equilibrium(&game, &TollVector::zeros(game.num_edges()), &EqConfig::default()).unwrap();
        let mut o = oracle(game);
        let cfg = EnforcementConfig::for_oracle(1e-3, &o);
        let r = enforce_flow(&mut o, &eq.flow, &cfg).unwrap();
        assert_eq!(r.status, EnforcementStatus::Success, "{t}");
    }
}

#[test]
fn separation_cut_examples() {
    assert_eq!(separation_cut(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), vec![0.5, -0.5]);
    assert!(matches!(separation_cut(&[0.3, 0.7], &[0.3, 0.7]), Err(Error::DegenerateCut(_))));
    let g = separation_cut(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
    let certificate = [0.5, 0.0];
    let kept: f64 = g.iter().zip(certificate).map(|(a, b)| a * b).sum();
    assert_eq!(kept, 0.25);
}

#[test]
fn rejects_bad_targets() {
    let mut o = oracle(pigou());
    let cfg = EnforcementConfig::for_oracle(1e-3, &o);
    let bad = FlowVector::single(vec![0.7, 0.2]).unwrap();
    assert!(matches!(enforce_flow(&mut o, &bad, &cfg), Err(Error::TargetInfeasible(_))));
    assert_eq!(o.query_count(), 0);
}

#[test]
fn ellipsoid_unit_disc_cut() {
    let mut e = Ellipsoid::ball(vec![0.0, 0.0], 1.0);
    e.cut(&[1.0, 0.0]).unwrap();
    assert!((e.center()[0] - 1.0 / 3.0).abs() < 1e-15 && e.center()[1].abs() < 1e-15);
    assert!((e.width_along(&[1.0, 0.0]) - 2.0 / 3.0).abs() < 1e-12);
    assert!((e.width_along(&[0.0, 1.0]) - 2.0 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn volume_ratio_identity_on_random_ellipsoids() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for d in 2..=8 {
        for _ in 0..20 {
            let a: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut shape = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    shape[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
                }
            }
            let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let e = Ellipsoid::from_shape(center, &shape).unwrap();
            let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let next = e.update(&g).unwrap();
            let ratio = (next.log_volume() - e.log_volume()).exp();
            assert!((ratio - central_cut_volume_ratio(d)).abs() < 1e-9);
            // The textbook bound holds, though not with equality.
            assert!(ratio <= (-1.0 / (2.0 * (d as f64 + 1.0))).exp());
        }
    }
}

#[test]
fn alternating_cuts_shrink_volume() {
    let mut e = Ellipsoid::ball(vec![0.0; 3], 2.0);
    let mut last = e.log_volume();
    for i in 0..30 {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        e.cut(&[s, 0.0, 0.0]).unwrap();
        assert!(e.log_volume() < last);
        last = e.log_volume();
    }
}

/// Runs enforcement while checking that `certificate` stays inside every
/// ellipsoid and that the volume follows the per-iteration bound.
fn enforce_checked(game: RoutingGame, target: &FlowVector, certificate: &TollVector, delta: f64) -> (usize, usize) {
    let mut o = oracle(game);
    let cfg = EnforcementConfig::for_oracle(delta, &o);
    let m = o.num_edges();
    let cap = o.toll_cap();
    let v0 = Ellipsoid::ball(vec![0.5 * cap; m], 0.5 * cap * (m as f64).sqrt()).log_volume();
    let mut violations = 0;
    let mut cuts = 0;
    let before = o.query_count();
    let r = enforce_flow_observed(&mut o, target, &cfg, |step, e| {
        if step.cut != CutKind::Accepted {
            cuts += 1;
            if e.normalized_radius(certificate.values()) > 1.0 + 1e-6 {
                violations += 1;
            }
            let bound = v0 - cuts as f64 / (2.0 * (m as f64 + 1.0)) + cuts as f64 * 1e-6f64.ln_1p();
            assert!(step.log_volume <= bound + 1e-9);
        }
    })
    .unwrap();
    assert_eq!(r.status, EnforcementStatus::Success);
    assert!(r.achieved_deviation <= 2.0 * delta);
    assert_eq!(r.queries_used, o.query_count() - before);
    let again = o.query(&r.tolls).unwrap();
    assert!(sup(&again.aggregate_flow, target.aggregate()) <= 2.0 * delta);
    (violations, r.queries_used)
}

#[test]
fn marginal_cost_certificate_stays_inside() {
    for (i, t) in ["pigou", "braess", "parallel:4", "grid:3x3", "random_dag:6:0.5"].iter().enumerate() {
        let game = generate(&InstanceSpec::new(t.parse().unwrap()).with_degree(1 + i % 2).with_seed(i as u64)).unwrap();
        let opt = system_optimum(&game, &EqConfig::with_accuracy(1e-12)).unwrap().flow;
        let cert = marginal_cost_tolls(&game, &opt);
        let (violations, _) = enforce_checked(game, &opt, &cert, 1e-4);
        assert_eq!(violations, 0, "{t}");
    }
}

#[test]
fn random_path_targets_on_parallel_and_braess() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..12 {
        let topology = if case % 3 == 0 { Topology::Braess } else { Topology::Parallel(2 + case % 4) };
        let game = generate(&InstanceSpec::new(topology).with_seed(case as u64)).unwrap();
        let target = random_flow(game.network(), &mut rng);
        let cert = potential_tolls(&game, &target);
        let (violations, _) = enforce_checked(game, &target, &cert, 1e-4);
        assert_eq!(violations, 0, "case {case}");
    }
}
