use num_complex::Complex64;
use proptest::prelude::*;

use rissim::channel::CMatrix;
use rissim::control::{achievable_rate, far_field_power, PhaseAlgorithm, PhaseControl};
use rissim::harness::{run_campaign, Campaign, Sweep};
use rissim::model::{dbm_to_watts, SimConfig};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), rows * cols)
        .prop_map(move |v| CMatrix::from_iterator(rows, cols, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

fn any_matrix() -> impl Strategy<Value = CMatrix> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))
}

proptest! {
    #[test]
    fn rate_is_monotone_in_power(c in any_matrix(), lo in -3.0..3.0f64, step in 0.0..3.0f64) {
        let a = achievable_rate(&c, 10f64.powf(lo), 1.0).unwrap();
        let b = achievable_rate(&c, 10f64.powf(lo + step), 1.0).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn rate_is_symmetric_under_adjoint(n in 1usize..6, seed in any::<u64>()) {
        let c = CMatrix::from_fn(n, n, |i, j| {
            let x = (seed.wrapping_mul(31 + i as u64).wrapping_add(j as u64 * 977)) as f64 / u64::MAX as f64;
            Complex64::from_polar(x + 0.1, 7.0 * x + j as f64)
        });
        let a = achievable_rate(&c, 3.0, 1.0).unwrap();
        let b = achievable_rate(&c.adjoint(), 3.0, 1.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn wide_and_tall_agree(c in any_matrix()) {
        let a = achievable_rate(&c, 2.0, 0.5).unwrap();
        let b = achievable_rate(&c.transpose(), 2.0, 0.5).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }
}

#[test]
fn far_field_power_stays_below_pt_in_preset_scenes() {
    for cfg in [SimConfig::indoor(), SimConfig::outdoor()] {
        let pt = dbm_to_watts(cfg.pt_dbm[0]);
        let ris = cfg.ris[0].position;
        for n in [16, 64, 256, 1024] {
            let p = far_field_power(
                pt,
                n,
                cfg.wavelength(),
                cfg.tx.position.distance(ris),
                cfg.rx.position.distance(ris),
            );
            assert!(p > 0.0 && p < pt);
        }
    }
}

#[test]
fn pinv_beats_random_on_indoor_scene() {
    let mut cfg = SimConfig::indoor();
    cfg.realizations = 200;
    let mean = |alg| {
        run_campaign(&Campaign::new(cfg.clone(), Sweep::Pt(vec![40.0]), PhaseControl::new(alg)).unwrap())
            .unwrap()
            .points[0]
            .mean
    };
    let pinv = mean(PhaseAlgorithm::PinvAlign);
    let random = mean(PhaseAlgorithm::RandomBaseline);
    let zero = mean(PhaseAlgorithm::ZeroBaseline);
    println!("pinv {pinv:.3}, random {random:.3}, zero {zero:.3}");
    assert!(pinv > random);
    assert!(pinv > zero);
}

#[test]
fn quantized_pinv_stays_between_baseline_and_continuous() {
    let mut cfg = SimConfig::indoor();
    cfg.realizations = 100;
    let mean = |ctl| {
        run_campaign(&Campaign::new(cfg.clone(), Sweep::Pt(vec![40.0]), ctl).unwrap())
            .unwrap()
            .points[0]
            .mean
    };
    let cont = mean(PhaseControl::default());
    let two_bit = mean(PhaseControl::default().with_bits(2));
    let random = mean(PhaseControl::new(PhaseAlgorithm::RandomBaseline));
    assert!(two_bit <= cont + 1e-9);
    assert!(two_bit > random);
}
