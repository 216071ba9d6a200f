use contagion_core::shocks::{
    calibrate_amplitude, external_loss, sample_portfolio, sample_shock, standalone_failure_probability,
    CalibrationTarget,
};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Quantile of the standard Student-t with `dof` degrees of freedom, by
/// numeric inversion of its CDF.
fn t_quantile(dof: f64, p: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof).unwrap().inverse_cdf(p)
}

#[test]
fn oracle_reference_values() {
    // Frozen from the CDF inversion; median|T| = Q(0.75) by symmetry.
    assert!((t_quantile(1.5, 0.75) - 0.872_594_662_5).abs() < 1e-6);
    assert!((t_quantile(1.5, 0.999) - 52.184_430_01).abs() < 1e-4);
}

#[test]
fn two_asset_rows_uniform() {
    let p = sample_portfolio(100_000, 2, 17).unwrap();
    let mean = p.rows().map(|r| r[0]).sum::<f64>() / 100_000.0;
    assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    assert!(p.rows().all(|r| (r[0] + r[1] - 1.0).abs() <= 1e-12));
}

#[test]
fn three_asset_rows_symmetric() {
    let p = sample_portfolio(100_000, 3, 18).unwrap();
    for m in 0..3 {
        let mean = p.rows().map(|r| r[m]).sum::<f64>() / 100_000.0;
        assert!((mean - 1.0 / 3.0).abs() <= 0.01, "asset {m}: {mean}");
    }
}

fn draws(scale: f64, count: u64) -> Vec<f64> {
    (0..count / 2)
        .flat_map(|seed| sample_shock(2, scale, 1.5, seed).unwrap().relative_change)
        .collect()
}

#[test]
fn median_magnitude_matches_t_quantile() {
    let mut abs: Vec<f64> = draws(0.1, 1_000_000).into_iter().map(f64::abs).collect();
    abs.sort_by(f64::total_cmp);
    let median = abs[abs.len() / 2];
    let expected = 0.1 * t_quantile(1.5, 0.75);
    assert!((median - expected).abs() <= 0.02 * expected, "median {median} vs {expected}");
}

#[test]
fn signs_are_balanced() {
    let v = draws(0.1, 1_000_000);
    let up = v.iter().filter(|&&x| x > 0.0).count() as f64 / v.len() as f64;
    assert!((0.498..=0.502).contains(&up), "positive fraction {up}");
}

#[test]
fn tail_decays_like_a_power_law() {
    let s = 0.01;
    let v = draws(s, 1_000_000);
    let beyond = |x: f64| v.iter().filter(|d| d.abs() > x).count() as f64;
    let exponent = (beyond(5.0 * s) / beyond(10.0 * s)).log2();
    assert!((exponent - 1.5).abs() <= 0.3, "tail exponent {exponent}");
}

#[test]
fn single_asset_calibration_matches_closed_form() {
    let target = CalibrationTarget {
        n_assets: 1,
        ..CalibrationTarget::default()
    };
    let cal = calibrate_amplitude(&target).unwrap();
    let closed = 0.07 / t_quantile(1.5, 0.999);
    assert!((cal.scale - closed).abs() <= 0.05 * closed, "{} vs {closed}", cal.scale);
}

#[test]
fn two_asset_calibration_reproduces_target_probability() {
    let cal = calibrate_amplitude(&CalibrationTarget::default()).unwrap();
    let p = standalone_failure_probability(cal.scale, 2, 0.07, 1.5, 10_000_000, 4242).unwrap();
    assert!((0.5e-3..=2e-3).contains(&p), "p = {p}");
    // diversification across two classes needs a larger amplitude
    assert!(cal.scale > 0.07 / t_quantile(1.5, 0.999));
}

#[test]
fn calibration_rejects_median_target() {
    for p in [0.5, 0.6] {
        let target = CalibrationTarget {
            n_assets: 1,
            target_p: p,
            ..CalibrationTarget::default()
        };
        assert!(calibrate_amplitude(&target).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_are_probability_vectors(m in 1usize..7, seed in any::<u64>()) {
        let p = sample_portfolio(50, m, seed).unwrap();
        for row in p.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn standalone_loss_matches_cascade_expression(x in 0.0f64..1.0, v1 in -1.0f64..2.0, v2 in -1.0f64..2.0, e in 0.0f64..10.0) {
        let loss = external_loss(e, &[x, 1.0 - x], &[v1, v2]);
        prop_assert!((loss + e * (x * v1 + (1.0 - x) * v2)).abs() <= 1e-12 * (1.0 + e));
    }
}
