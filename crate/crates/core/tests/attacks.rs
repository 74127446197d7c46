mod common;

use common::*;
use mpa::attacks::*;
use mpa::classifier::{train_standard, LabeledExample, MlpModel, TrainConfig};
use mpa::harness::generate_dataset;
use mpa::lp_geometry::NormId;

fn victim(d: usize) -> (MlpModel, Vec<LabeledExample>) {
    let (train, test) = generate_dataset(11, 4, d, 400, 60, 0.5).unwrap();
    let model = train_standard(&train, &TrainConfig { epochs: 10, batch_size: 32, ..TrainConfig::default() }).unwrap();
    (model, test)
}

fn check_budgets(cfg: &AttackConfig, x: &[f64], step: &MpaStep) {
    let d = x.len();
    let mut covered = vec![false; d];
    for (p, b) in cfg.norms.iter().enumerate() {
        let sub: Vec<f64> = (0..d).filter(|&i| step.assignment[i] == p).map(|i| step.x_adv[i] - x[i]).collect();
        for i in (0..d).filter(|&i| step.assignment[i] == p) {
            assert!(!covered[i]);
            covered[i] = true;
        }
        assert!(b.norm.norm(&sub) <= b.eps * (1.0 + 1e-9), "norm {} over budget", b.norm);
    }
    assert!(covered.iter().all(|&c| c));
    assert!(step.x_adv.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn mpa_keeps_every_subset_within_budget() {
    let (model, test) = victim(64);
    // inflated budgets make the projections bind
    let mut cfg = AttackConfig::mpa_defaults(64);
    for b in &mut cfg.norms {
        b.eps *= 4.0;
        b.step *= 4.0;
    }
    for reuse in [true, false] {
        let cfg = AttackConfig { coefficient_reuse: reuse, ..cfg.clone() };
        let mut steps = 0;
        for ex in &test {
            let report = mpa_attack_observed(&model, ex, &cfg, |s| {
                check_budgets(&cfg, &ex.x, s);
                steps += 1;
            })
            .unwrap();
            assert!(report.iterations_used <= cfg.iterations);
            assert_eq!(report.assignment_counts.iter().map(|(_, n)| n).sum::<usize>(), 64);
            if report.success {
                assert_ne!(model.predict(&report.x_adv).unwrap(), ex.y);
            }
        }
        assert!(steps > test.len());
    }
}

#[test]
fn pgd_early_stop_is_sound() {
    let (model, test) = victim(32);
    for norm in NormId::ALL {
        let b = NormBudget { eps: NormBudget::scaled(norm, 32).eps * 5.0, ..NormBudget::scaled(norm, 32) };
        let mut successes = 0;
        for ex in &test {
            let r = pgd_attack(&model, ex, b, 20, None).unwrap();
            assert!(r.iterations_used <= 20);
            assert!(
                norm.norm(&r.x_adv.iter().zip(&ex.x).map(|(a, c)| a - c).collect::<Vec<_>>()) <= b.eps * (1.0 + 1e-9)
            );
            if r.success {
                successes += 1;
                assert_ne!(model.predict(&r.x_adv).unwrap(), ex.y);
            } else {
                assert_eq!(model.predict(&r.x_adv).unwrap(), ex.y);
            }
        }
        if norm == NormId::LInf {
            assert!(successes > 0);
        }
    }
}

#[test]
fn msd_picks_the_highest_loss_candidate() {
    let (model, test) = victim(16);
    let cfg = AttackConfig::mpa_defaults(16);
    for ex in test.iter().take(30) {
        let mut n = 0;
        msd_adversary_observed(&model, ex, &cfg, |s| {
            assert_eq!(s.candidate_losses.len(), 3);
            assert!(s.candidate_losses.iter().all(|&l| l <= s.candidate_losses[s.chosen]));
            n += 1;
        })
        .unwrap();
        assert_eq!(n, cfg.iterations);
    }
}

#[test]
fn single_norm_mpa_reduces_to_pgd() {
    let (model, test) = victim(32);
    for norm in NormId::ALL {
        let cfg = AttackConfig::single(norm, 32);
        for ex in &test {
            let a = mpa_attack(&model, ex, &cfg).unwrap();
            let b = pgd_attack(&model, ex, cfg.norms[0], cfg.iterations, cfg.topk).unwrap();
            assert_eq!(a.success, b.success);
            assert_eq!(a.iterations_used, b.iterations_used);
            assert!(a.x_adv.iter().zip(&b.x_adv).all(|(u, v)| (u - v).abs() <= 1e-9));
        }
    }
}

#[test]
fn attacks_are_order_independent() {
    let (model, test) = victim(16);
    let cfg = AttackConfig::mpa_defaults(16);
    let forward: Vec<_> = test.iter().map(|e| mpa_attack(&model, e, &cfg).unwrap()).collect();
    let backward: Vec<_> = test.iter().rev().map(|e| mpa_attack(&model, e, &cfg).unwrap()).collect();
    assert!(forward.iter().eq(backward.iter().rev()));
}

#[test]
fn already_misclassified_input_returns_immediately() {
    let model = MlpModel::zeros(&[4, 3, 2]).unwrap();
    let ex = LabeledExample::new(vec![0.5; 4], 1);
    for kind in [AttackKind::Pgd, AttackKind::Mpa] {
        let r = run_attack(kind, &model, &ex, &AttackConfig::mpa_defaults(4)).unwrap();
        assert!(r.success);
        assert_eq!(r.iterations_used, 0);
        assert_eq!(r.x_adv, ex.x);
    }
}

#[test]
fn combine_respects_mixed_budgets_on_random_instances() {
    let mut r = rng(77);
    for _ in 0..500 {
        let d = 6;
        let x = uniform_vec(&mut r, d, 0.0, 1.0);
        let x_adv: Vec<f64> =
            x.iter().map(|v| (v + rand::Rng::random_range(&mut r, -0.3..0.3f64)).clamp(0.0, 1.0)).collect();
        let cfg = AttackConfig {
            norms: vec![
                NormBudget::new(NormId::L1, 0.2, 0.1),
                NormBudget::new(NormId::L2, 0.1, 0.05),
                NormBudget::new(NormId::LInf, 0.03, 0.01),
            ],
            ..AttackConfig::mpa_defaults(d)
        };
        let dirs: Vec<Vec<f64>> = (0..3).map(|_| uniform_vec(&mut r, d, -0.2, 0.2)).collect();
        let c = init_coefficients(d, 3, 1.0, &mut r);
        let out = combine_and_project(&x_adv, &x, &c, &dirs, &cfg).unwrap();
        let part = partition(&c);
        check_budgets(&cfg, &x, &MpaStep { iteration: 1, x_adv: &out, assignment: &part, coefficients: &c });
    }
}
