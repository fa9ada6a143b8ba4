use std::f64::consts::PI;

use mirror_rates::atom::{AtomSpec, TwoLevelState};
use mirror_rates::oracle::{
    fourier_kernel, run_verification, series_probe, small_a_probe, small_z_xz_probe, verify_rate, Direction,
    GridPreset, KernelKind, OracleReport, ProbeConfig, QuadratureConfig, Status, VerifyConfig,
};
use mirror_rates::special::{printed_small_a_coefficient, small_a_correction, xz_small_z_slope};
use mirror_rates::{f_x, Pair, Trajectory};

fn reports(state: TwoLevelState, traj: &Trajectory, rel_tol: f64) -> Vec<OracleReport> {
    let spec = AtomSpec::two_level_real(1.0, [1.0, 1.0, 1.0], state);
    let b = spec.initial_state.clone();
    verify_rate(&spec, &b, traj, &QuadratureConfig::default(), 1e-9, rel_tol).unwrap()
}

#[test]
fn excited_inertial_atom_passes() {
    let rows = reports(TwoLevelState::Excited, &Trajectory::inertial(1.0, 0.0).unwrap(), 1e-3);
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r.status, Status::Pass, "{}: {} vs {}", r.quantity_id, r.closed_form, r.oracle);
    }
}

#[test]
fn ground_state_vf_and_rr_cancel() {
    let rows = reports(TwoLevelState::Ground, &Trajectory::inertial(1.0, 0.0).unwrap(), 1e-3);
    for pair in Pair::DIAGONAL {
        let pick = |mech: &str| {
            rows.iter()
                .find(|r| r.quantity_id.ends_with(&format!(":{pair}:boundary:{mech}")))
                .unwrap_or_else(|| panic!("no {pair} {mech} row"))
        };
        let (vf, rr) = (pick("vf"), pick("rr"));
        assert!(vf.oracle.abs() > 1e-3 && rr.oracle.abs() > 1e-3);
        assert!((vf.oracle + rr.oracle).abs() <= 10.0 * 1e-9, "{pair}: {} + {}", vf.oracle, rr.oracle);
    }
}

#[test]
fn accelerated_sigma_eta_one() {
    for state in [TwoLevelState::Excited, TwoLevelState::Ground] {
        let rows = reports(state, &Trajectory::accelerated(1.0, 1.0).unwrap(), 1e-3);
        assert!(rows.iter().any(|r| r.quantity_id.contains(":xz:")));
        assert!(rows.iter().all(OracleReport::passed));
    }
}

#[test]
fn extrapolation_curve_is_exposed_and_converges() {
    let rows = reports(TwoLevelState::Excited, &Trajectory::accelerated(0.3, 0.2 / 0.3).unwrap(), 1e-3);
    for r in rows.iter().filter(|r| r.oracle.abs() > 1e-6) {
        assert_eq!(r.extrapolation_curve.len(), 3, "{}", r.quantity_id);
        assert!(r.ladder_monotone(), "{}: {:?} -> {}", r.quantity_id, r.extrapolation_curve, r.oracle);
    }
}

#[test]
fn hadamard_transform_matches_f_x() {
    let cfg = QuadratureConfig::default();
    for sigma in [0.3, 1.0, 3.0] {
        let t = Trajectory::inertial(sigma, 0.0).unwrap();
        let fv = fourier_kernel(&t, Pair::Xx, 1.0, KernelKind::Hadamard, &cfg).unwrap();
        let expect = -f_x(sigma).unwrap() / (32.0 * PI);
        assert!(((fv.value - expect) / expect).abs() < 1e-4, "{sigma}: {} vs {expect}", fv.value);
        assert!(fv.imag_residual <= cfg.abs_tol.max(1e-9));
    }
}

#[test]
fn tight_tolerance_fails_some_rows() {
    let cfg = VerifyConfig { rel_tol: 1e-9, abs_tol: 1e-12, ..Default::default() };
    let report = run_verification(GridPreset::Smoke, &cfg).unwrap();
    assert!(report.failures().count() > 0);
    assert!(!report.all_pass());
}

#[test]
fn smoke_report_table_has_columns_and_verdicts() {
    let report = run_verification(GridPreset::Smoke, &VerifyConfig::default()).unwrap();
    assert!(report.all_pass());
    let table = report.to_table();
    let header = table.lines().next().unwrap();
    let cols: Vec<&str> = header.split_whitespace().collect();
    assert_eq!(cols, ["quantity_id", "closed_form", "oracle", "abs_err", "rel_err", "status"]);
    assert!(table.contains("verdict: small-z slope of f_xz"));
    assert!(table.contains("rejected"));
}

#[test]
fn small_a_probe_matches_closed_form_expansion() {
    for pair in Pair::ALL {
        for sigma in [0.5, 1.0, 2.0] {
            let probe = small_a_probe(pair, sigma, 1.0).unwrap();
            let closed = small_a_correction(pair, sigma, 1.0).unwrap();
            assert!(((probe.value - closed) / closed).abs() < 1e-6, "{pair} {sigma}: {probe:?} vs {closed}");
        }
    }
}

#[test]
fn printed_xx_and_zz_coefficients_are_reproduced() {
    for pair in [Pair::Xx, Pair::Zz] {
        for sigma in [0.5, 1.0, 2.0] {
            let probe = small_a_probe(pair, sigma, 1.0).unwrap();
            let printed = printed_small_a_coefficient(pair, sigma, 1.0).unwrap();
            assert!(((probe.value - printed) / printed).abs() < 1e-6);
        }
    }
}

#[test]
fn small_a_reference_values() {
    let sigma = PI / 2.0;
    let xx = small_a_correction(Pair::Xx, sigma, 1.0).unwrap();
    assert!((xx + (13.0 - PI * PI) / 3.0).abs() < 1e-12);
    let zz = small_a_correction(Pair::Zz, sigma, 1.0).unwrap();
    assert!((zz - 16.0 / 3.0).abs() < 1e-12);
}

#[test]
fn xz_slope_verdict() {
    for a in [0.5, 1.0, 2.0] {
        let probe = small_z_xz_probe(1.0, a).unwrap();
        let derived = xz_small_z_slope(1.0, a);
        assert!(((probe.value - derived) / derived).abs() < 1e-6, "{a}: {probe:?} vs {derived}");
    }
}

#[test]
fn polynomial_probe() {
    let c = series_probe(|t| Ok(t.powi(3)), 0.0, 4, Direction::Central, &ProbeConfig::default()).unwrap();
    let values: Vec<f64> = c.iter().map(|c| c.value).collect();
    for (got, want) in values.iter().zip([0.0, 0.0, 0.0, 1.0, 0.0]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn invalid_ladder_is_rejected() {
    let cfg = QuadratureConfig { eps_ladder: vec![0.01, 0.01, 0.005], ..Default::default() };
    let t = Trajectory::inertial(1.0, 0.0).unwrap();
    assert!(fourier_kernel(&t, Pair::Xx, 1.0, KernelKind::Hadamard, &cfg).is_err());
}
