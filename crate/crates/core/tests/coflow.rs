use g2hitchin::coflow::*;
use g2hitchin::exterior::{wedge, ConstForm, MultiIndex};
use g2hitchin::g2structure::models::{phi0_f64, psi0_f64};
use g2hitchin::linalg::linear_fit;
use g2hitchin::quadrature::{ball_volume, sphere_area};
use g2hitchin::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn line(n: usize) -> Grid {
    Grid::line(n).unwrap()
}

fn max_diff(a: &[ConstForm<f64>], b: &[ConstForm<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max)
}

fn safe_dt(s: &CoflowState) -> f64 {
    0.5 * s.cfl_bound(DEFAULT_CFL_FACTOR).unwrap()
}

#[test]
fn grids_validate() {
    assert!(Grid::new(&[], 16, 1.0).is_err());
    assert!(Grid::new(&[1, 2, 3], 16, 1.0).is_err());
    assert!(Grid::new(&[2, 2], 16, 1.0).is_err());
    assert!(Grid::new(&[8], 16, 1.0).is_err());
    assert!(Grid::new(&[1], 15, 1.0).is_err());
    assert!(Grid::new(&[1], 16, 0.0).is_err());
    let g = Grid::new(&[3, 5], 8, 2.0).unwrap();
    assert_eq!(g.len(), 64);
    assert_eq!(g.point(9), [0.0, 0.0, 0.25, 0.0, 0.25, 0.0, 0.0]);
    assert!((g.cell_volume() * 64.0 - 128.0).abs() < 1e-12);
}

#[test]
fn spectral_derivative_of_the_periodic_potential() {
    let g = line(64);
    let alpha: Vec<ConstForm<f64>> = (0..g.len()).map(|k| phi0_f64().scale(&((2.0 * PI * g.point(k)[0]).sin() / (2.0 * PI)))).collect();
    let d = grid_d(&g, &alpha);
    for (k, dk) in d.iter().enumerate() {
        let c = (2.0 * PI * g.point(k)[0]).cos();
        let expected = wedge(&ConstForm::basis(MultiIndex::of(&[1])), &phi0_f64()).scale(&c);
        assert!(dk.sub(&expected).max_abs() <= 1e-13);
    }
}

#[test]
fn constant_psi0_is_torsion_free_and_fixed() {
    let s = CoflowState::constant(line(256), &psi0_f64()).unwrap();
    let tor = torsion(&s).unwrap();
    assert_eq!(tor.d_psi_norm, 0.0);
    assert_eq!(tor.d_star_psi_norm, 0.0);
    assert!(tor.is_torsion_free(1e-10));
    let (end, records) = run(&s, safe_dt(&s), 100, DEFAULT_CFL_FACTOR).unwrap();
    assert!(max_diff(&end.psi, &s.psi) <= 1e-12);
    assert_eq!(records.len(), 100);
    assert!(records.iter().all(|r| r.min_volume_rate.abs() <= 1e-12));
    let m = volume_monotonicity_check(&s, safe_dt(&s), 1e-9).unwrap();
    assert_eq!(m.min_rate, 0.0);
    assert!(m.pass);
}

#[test]
fn perturbation_is_closed_but_not_coclosed() {
    let s = CoflowState::perturbed_psi0(line(256), 1e-2).unwrap();
    let tor = torsion(&s).unwrap();
    assert!(tor.d_psi_norm <= 1e-10);
    assert!(tor.d_star_psi_norm > 1e-3);
    assert!(!tor.is_torsion_free(1e-10));
}

#[test]
fn codifferential_matches_finite_differences() {
    let s = CoflowState::perturbed_psi0(line(256), 1e-2).unwrap();
    let tor = torsion(&s).unwrap();
    let phi: Vec<ConstForm<f64>> = s.structures().unwrap().into_iter().map(|st| st.threeform).collect();
    let h = s.grid.spacing();
    let n = phi.len();
    let dx1 = ConstForm::basis(MultiIndex::of(&[1]));
    for k in 0..n {
        // Fourth-order central differences on the periodic grid.
        let at = |j: isize| &phi[((k as isize + j).rem_euclid(n as isize)) as usize];
        let deriv = at(-2).sub(at(2)).add(&at(1).sub(at(-1)).scale(&8.0)).scale(&(1.0 / (12.0 * h)));
        let fd = wedge(&dx1, &deriv);
        assert!(fd.sub(&tor.d_star_psi[k]).max_abs() <= 1e-6 * tor.d_star_psi_norm);
    }
}

#[test]
fn torsion_is_linear_in_the_amplitude() {
    let amps = [1e-4, 1e-3, 1e-2];
    let norms: Vec<f64> = amps.iter().map(|&a| torsion(&CoflowState::perturbed_psi0(line(64), a).unwrap()).unwrap().d_star_psi_norm).collect();
    let lx: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    assert!((slope - 1.0).abs() <= 0.05, "slope {slope}");
}

#[test]
fn updates_are_exact() {
    let s = CoflowState::perturbed_psi0(line(128), 1e-2).unwrap();
    let next = coflow_step(&s, safe_dt(&s)).unwrap();
    let diff: Vec<ConstForm<f64>> = next.psi.iter().zip(&s.psi).map(|(a, b)| a.sub(b)).collect();
    let d = grid_d(&next.grid, &diff);
    assert!(d.iter().map(|f| f.max_abs()).fold(0.0, f64::max) <= 1e-12);
    assert!(exactness_residual(&next) <= 1e-10);
}

#[test]
fn perturbed_flow_grows_volume() {
    let s = CoflowState::perturbed_psi0(line(256), 1e-2).unwrap();
    let h0 = s.functional().unwrap();
    assert!(h0 > CoflowState::constant(line(256), &psi0_f64()).unwrap().functional().unwrap());
    let dt = safe_dt(&s);
    let (end, records) = run(&s, dt, 10, DEFAULT_CFL_FACTOR).unwrap();
    let mut prev = h0;
    for r in &records {
        assert!(r.min_volume_rate >= -1e-9, "rate {}", r.min_volume_rate);
        assert!(r.functional >= prev);
        assert!(r.d_psi_norm <= 1e-10);
        prev = r.functional;
    }
    assert!(end.structures().is_ok());
    assert!(exactness_residual(&end) <= 1e-10);
    assert!((end.t - 10.0 * dt).abs() < 1e-18);
}

#[test]
fn monotonicity_and_richardson() {
    let s = CoflowState::perturbed_psi0(line(256), 1e-2).unwrap();
    let dt = safe_dt(&s);
    let m = volume_monotonicity_check(&s, dt, 1e-9).unwrap();
    assert!(m.pass && m.min_rate >= -1e-9);
    assert!(m.min_first_order_rate >= -1e-12);
    let r = richardson_check(&s, dt, 2).unwrap();
    for ratio in &r.ratios {
        assert!((ratio - 2.0).abs() < 0.15, "ratio {ratio}");
    }
}

#[test]
fn steps_beyond_the_bound_or_orbit_fail() {
    let s = CoflowState::perturbed_psi0(line(64), 0.3).unwrap();
    let bound = s.cfl_bound(DEFAULT_CFL_FACTOR).unwrap();
    assert!(matches!(coflow_step(&s, 2.0 * bound), Err(Error::Invalid(_))));
    assert!(matches!(coflow_step(&s, -1.0), Err(Error::Invalid(_))));
    let b = ConstForm::basis(MultiIndex::of(&[2, 3, 4]));
    let s = CoflowState::from_potential(line(64), &psi0_f64(), 0.3, |x| b.scale(&((2.0 * PI * x[0]).sin() / (2.0 * PI)))).unwrap();
    match coflow_step_with(&s, 1.0, f64::INFINITY) {
        Err(Error::OrbitExit { suggested_dt, .. }) => assert_eq!(suggested_dt, 0.5),
        other => panic!("expected orbit exit, got {other:?}"),
    }
}

#[test]
fn degenerate_nodes_are_named() {
    let mut psi = vec![psi0_f64(); 16];
    psi[5] = ConstForm::zero(4);
    let s = CoflowState::new(line(16), psi).unwrap();
    match torsion(&s) {
        Err(Error::OrbitViolation { detail, .. }) => assert!(detail.contains("node 5"), "{detail}"),
        other => panic!("expected a node error, got {other:?}"),
    }
}

#[test]
fn mode_cutoff_stabilizes_long_runs() {
    let s = CoflowState::perturbed_psi0(line(128).with_mode_cutoff(Some(8)), 1e-2).unwrap();
    let (end, records) = run(&s, safe_dt(&s), 200, DEFAULT_CFL_FACTOR).unwrap();
    assert!(records.windows(2).all(|w| w[1].functional >= w[0].functional));
    assert!(exactness_residual(&end) <= 1e-10);
}

#[test]
fn two_dimensional_grids() {
    let g = Grid::new(&[1, 2], 16, 1.0).unwrap();
    let s = CoflowState::perturbed_psi0(g.clone(), 1e-2).unwrap();
    let tor = torsion(&s).unwrap();
    assert!(tor.d_psi_norm <= 1e-10 && tor.d_star_psi_norm > 1e-3);
    let next = coflow_step(&s, safe_dt(&s)).unwrap();
    assert!(exactness_residual(&next) <= 1e-10);
    let c = CoflowState::constant(g, &psi0_f64()).unwrap();
    assert_eq!(max_diff(&coflow_step(&c, safe_dt(&c)).unwrap().psi, &c.psi), 0.0);
}

#[test]
fn flat_balls_saturate_the_volume_bound() {
    for eta in [0.5, 1.0, 2.0] {
        let r = hk_bound_check(eta).unwrap();
        assert!(r.saturated, "η = {eta}: gap {}", r.relative_gap);
        assert!((r.ball_volume - ball_volume() * eta.powi(7)).abs() <= 1e-12 * r.ball_volume);
        assert!((r.sphere_area - sphere_area() * eta.powi(6)).abs() <= 1e-12 * r.sphere_area);
        assert!((r.exponent6_bound - eta / 7.0 * r.sphere_area).abs() <= 1e-12 * r.ball_volume);
        assert!((r.exponent7_bound - eta / 8.0 * r.sphere_area).abs() <= 1e-12 * r.ball_volume);
    }
    let one = hk_bound_check(1.0).unwrap();
    assert!((one.ball_volume - 16.0 * PI.powi(3) / 105.0).abs() < 1e-12);
    assert!((one.stated_bound - 16.0 * PI.powi(3) / 105.0).abs() < 1e-12);
    assert!(hk_bound_check(0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_exact_perturbations_stay_exact(coeffs in prop::collection::vec(-1.0f64..1.0, 35), mode in 1usize..4, s in 1e-3f64..2e-2) {
        let beta = ConstForm::from_coeffs(3, coeffs);
        let st = CoflowState::from_potential(line(32), &psi0_f64(), s, |x| {
            beta.scale(&((2.0 * PI * mode as f64 * x[0]).sin() / (2.0 * PI * mode as f64)))
        }).unwrap();
        let tor = torsion(&st).unwrap();
        prop_assert!(tor.d_psi_norm <= 1e-10);
        let next = coflow_step(&st, safe_dt(&st)).unwrap();
        prop_assert!(exactness_residual(&next) <= 1e-10);
        let m = volume_monotonicity_check(&st, safe_dt(&st), 1e-9).unwrap();
        prop_assert!(m.min_first_order_rate >= -1e-9);
    }
}
