mod common;

use std::cell::Cell;

use mpa::attacks::{msd_adversary, AttackConfig};
use mpa::classifier::*;
use mpa::harness::generate_dataset;
use mpa::lp_geometry::NormId;

fn small_cfg(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, batch_size: 32, ..TrainConfig::default() }
}

#[test]
fn standard_training_reaches_threshold_on_default_data() {
    let (train, test) = generate_dataset(0, 4, 64, 2000, 500, 0.15).unwrap();
    let model = train_standard(&train, &TrainConfig { epochs: 20, ..TrainConfig::default() }).unwrap();
    let acc = model.accuracy(&test).unwrap();
    assert!(acc >= 0.95, "clean accuracy {acc}");
}

#[test]
fn training_is_bit_deterministic() {
    let (train, _) = generate_dataset(5, 3, 16, 300, 10, 0.3).unwrap();
    let a = train_standard(&train, &small_cfg(3)).unwrap();
    let b = train_standard(&train, &small_cfg(3)).unwrap();
    assert_eq!(a, b);
    let c = train_standard(&train, &TrainConfig { seed: 1, ..small_cfg(3) }).unwrap();
    assert_ne!(a, c);

    let atk = AttackConfig { iterations: 3, ..AttackConfig::mpa_defaults(16) };
    let m1 = train_msd(&train, &small_cfg(1), &atk).unwrap();
    let m2 = train_msd(&train, &small_cfg(1), &atk).unwrap();
    assert_eq!(m1, m2);
}

#[test]
fn training_loss_decreases() {
    let (train, _) = generate_dataset(2, 4, 32, 400, 10, 0.3).unwrap();
    let mean = |m: &MlpModel| train.iter().map(|e| m.loss(&e.x, e.y).unwrap()).sum::<f64>() / train.len() as f64;
    let cfg = small_cfg(8);
    let before = mean(&cfg.initial_model(32, 4).unwrap());
    let after = mean(&train_standard(&train, &cfg).unwrap());
    assert!(after < 0.5 * before, "{before} → {after}");
}

#[test]
fn zero_epochs_returns_initial_model() {
    let (train, _) = generate_dataset(1, 2, 8, 50, 4, 0.1).unwrap();
    let cfg = small_cfg(0);
    assert_eq!(train_standard(&train, &cfg).unwrap(), cfg.initial_model(8, 2).unwrap());
}

#[test]
fn msd_training_without_iterations_is_standard_training() {
    let (train, _) = generate_dataset(3, 3, 12, 200, 4, 0.2).unwrap();
    let atk = AttackConfig { iterations: 0, ..AttackConfig::mpa_defaults(12) };
    assert_eq!(train_msd(&train, &small_cfg(2), &atk).unwrap(), train_standard(&train, &small_cfg(2)).unwrap());
}

#[test]
fn msd_training_consumes_msd_adversaries() {
    let (train, _) = generate_dataset(4, 3, 12, 96, 4, 0.3).unwrap();
    let atk = AttackConfig { iterations: 4, ..AttackConfig::mpa_defaults(12) };
    let seen = Cell::new(0usize);
    let moved = Cell::new(0usize);
    let observed = train_msd_observed(&train, &small_cfg(2), &atk, 1, |model, ex, adv| {
        let expected = msd_adversary(model, ex, &atk).unwrap();
        assert_eq!(adv, expected.as_slice());
        seen.set(seen.get() + 1);
        if adv != ex.x.as_slice() {
            moved.set(moved.get() + 1);
        }
    })
    .unwrap();
    assert_eq!(seen.get(), 2 * train.len());
    assert!(moved.get() > 0);
    assert_eq!(observed, train_msd(&train, &small_cfg(2), &atk).unwrap());
}

#[test]
fn checkpoint_round_trip_through_disk() {
    let (train, _) = generate_dataset(6, 2, 8, 64, 4, 0.2).unwrap();
    let atk = AttackConfig::single(NormId::LInf, 8);
    let model = train_msd(&train, &small_cfg(1), &atk).unwrap();
    let ckpt = Checkpoint::new("v", small_cfg(1), Some(atk), model);
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a/b.json");
    let p2 = dir.path().join("c.json");
    save_checkpoint(&p1, &ckpt).unwrap();
    let loaded = load_checkpoint(&p1).unwrap();
    assert_eq!(loaded, ckpt);
    save_checkpoint(&p2, &loaded).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}
