use g2hitchin::exterior::{Ball, BumpProfile, RadialProfile};
use g2hitchin::quadrature::*;
use g2hitchin::scalar::ratio;
use g2hitchin::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn reduced(eta: f64) -> RadialProfile {
    RadialProfile::Bump { bump: BumpProfile::new(eta), order: 1 }
}

/// (f'/r)² · Σ_i c_i (x^i)²
fn weighted_squares(eta: f64, weights: [f64; 7]) -> StructuredIntegrand {
    let terms = (0..7)
        .filter(|&i| weights[i] != 0.0)
        .map(|i| {
            let mut exps = [0u8; 7];
            exps[i] = 2;
            ScalarTerm { coeff: weights[i], profiles: vec![reduced(eta), reduced(eta)], center: [0.0; 7], exps }
        })
        .collect();
    StructuredIntegrand { terms }
}

#[test]
fn unit_ball_volume() {
    let d = Domain7::unit_ball();
    let exact = 16.0 * PI.powi(3) / 105.0;
    let m = integrate(&d, &Integrand::constant(1.0), &QuadratureSpec::moment_reduction()).unwrap();
    assert!((m.value - exact).abs() < 1e-14);
    assert!((exact - 4.724766).abs() < 1e-6);
    let mc = integrate(&d, &Integrand::from_fn(|_| 1.0), &QuadratureSpec::monte_carlo(1000, 1)).unwrap();
    assert!((mc.value - exact).abs() < 1e-12, "constant integrand has no variance");
    // Volume of the unit ball as the fraction of the cube [-1,1]^7 hit by 10⁶ samples.
    let cube = Domain7::Box { corner: [-1.0; 7], edges: [2.0; 7] };
    let indicator = Integrand::from_fn(|x| if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 { 1.0 } else { 0.0 });
    let mc = integrate(&cube, &indicator, &QuadratureSpec::monte_carlo(1_000_000, 7)).unwrap();
    assert!((mc.value - exact).abs() < 3.0 * mc.error, "{} ± {}", mc.value, mc.error);
}

#[test]
fn difference_of_squares_integrates_to_zero() {
    let d = Domain7::unit_ball();
    for (i, j) in [(0, 1), (2, 6), (3, 4)] {
        let mut w = [0.0; 7];
        w[i] = 1.0;
        w[j] = -1.0;
        let s = weighted_squares(1.0, w);
        let m = integrate(&d, &Integrand::from_structured(s.clone()), &QuadratureSpec::moment_reduction()).unwrap();
        assert_eq!(m.value, 0.0);
        let mc = integrate(&d, &Integrand::from_structured(s), &QuadratureSpec::monte_carlo(200_000, 3)).unwrap();
        assert!(mc.value.abs() < 3.0 * mc.error);
    }
}

#[test]
fn moment_reduction_agrees_with_monte_carlo() {
    let d = Domain7::unit_ball();
    let f = Integrand::from_structured(weighted_squares(1.0, [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]));
    let m = integrate(&d, &f, &QuadratureSpec::moment_reduction()).unwrap();
    let mc = integrate(&d, &f, &QuadratureSpec::monte_carlo(400_000, 11)).unwrap();
    assert!(m.value > 0.0);
    assert!((m.value - mc.value).abs() < 3.0 * mc.error, "{} vs {} ± {}", m.value, mc.value, mc.error);
    let r = integrate(&d, &f, &QuadratureSpec::radial_1d(48)).unwrap();
    assert!((r.value - m.value).abs() < 1e-9 * m.value.abs());
}

#[test]
fn angular_moments() {
    assert_eq!(angular_moment(&[0; 7]).area_multiple, ratio(1, 1));
    assert!((angular_moment(&[0; 7]).value() - 16.0 * PI.powi(3) / 15.0).abs() < 1e-13);
    assert_eq!(angular_moment(&[0; 7]).pi_cubed_coefficient(), ratio(16, 15));
    assert!(angular_moment(&[1, 0, 0, 0, 0, 0, 0]).is_zero());
    assert_eq!(angular_moment(&[2, 0, 0, 0, 0, 0, 0]).area_multiple, ratio(1, 7));
    // Σ_i (u^i)² = 1 on the sphere.
    let mut total = ratio(0, 1);
    for i in 0..7 {
        let mut e = [0u8; 7];
        e[i] = 2;
        total += angular_moment(&e).area_multiple;
    }
    assert_eq!(total, ratio(1, 1));
    // The same trace identity one degree up: Σ_j u_1² u_j² = u_1².
    let mut total = ratio(0, 1);
    for j in 0..7 {
        let mut e = [2u8, 0, 0, 0, 0, 0, 0];
        e[j] += 2;
        total += angular_moment(&e).area_multiple;
    }
    assert_eq!(total, ratio(1, 7));
    // Area(S⁶) = 7 Vol(B₁), with the volume from Monte Carlo.
    let mc = integrate(&Domain7::unit_ball(), &Integrand::from_fn(|_| 7.0), &QuadratureSpec::monte_carlo(10, 2)).unwrap();
    assert!((mc.value - angular_moment(&[0; 7]).value()).abs() < 1e-12);
}

#[test]
fn sphere_rule_reproduces_moments_up_to_degree_7() {
    let exps_list: [[u8; 7]; 8] = [
        [0; 7],
        [2, 0, 0, 0, 0, 0, 0],
        [4, 0, 0, 0, 0, 0, 0],
        [2, 2, 0, 0, 0, 0, 0],
        [6, 0, 0, 0, 0, 0, 0],
        [4, 0, 2, 0, 0, 0, 0],
        [2, 0, 2, 0, 0, 2, 0],
        [3, 1, 0, 0, 2, 0, 1],
    ];
    for e in exps_list {
        let v: f64 = sphere_rule()
            .iter()
            .map(|(u, w)| w * (0..7).map(|i| u[i].powi(e[i] as i32)).product::<f64>())
            .sum();
        let exact = angular_moment_f64(&e) / sphere_area();
        assert!((v - exact).abs() < 1e-15, "{e:?}: {v} vs {exact}");
    }
}

#[test]
fn monte_carlo_is_deterministic_across_thread_counts() {
    let d = Domain7::Ball { center: [0.5; 7], radius: 2.0 };
    let f = Integrand::from_fn(|x| x[0].sin() + x[3] * x[4]);
    let q = QuadratureSpec::monte_carlo(20_000, 42);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| integrate(&d, &f, &q).unwrap());
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| integrate(&d, &f, &q).unwrap());
    assert_eq!(one.value.to_bits(), four.value.to_bits());
    assert_eq!(one.error.to_bits(), four.error.to_bits());
    let other = integrate(&d, &f, &QuadratureSpec::monte_carlo(20_000, 43)).unwrap();
    assert_ne!(one.value, other.value);
}

#[test]
fn ball_volume_scales_exactly() {
    let base = integrate(&Domain7::unit_ball(), &Integrand::constant(1.0), &QuadratureSpec::moment_reduction()).unwrap();
    for lam in [0.5, 2.0, 4.0] {
        let d = Domain7::Ball { center: [0.0; 7], radius: lam };
        let v = integrate(&d, &Integrand::constant(1.0), &QuadratureSpec::moment_reduction()).unwrap();
        assert_eq!(v.value, base.value * f64::powi(lam, 7));
    }
}

#[test]
fn compactly_supported_terms_integrate_inside_boxes() {
    let mut s = weighted_squares(0.5, [1.0; 7]);
    for t in &mut s.terms {
        t.center = [1.0; 7];
    }
    let centred = integrate(&Domain7::unit_ball(), &Integrand::from_structured(weighted_squares(0.5, [1.0; 7])), &QuadratureSpec::moment_reduction()).unwrap();
    let boxed = integrate(&Domain7::cube(2.0), &Integrand::from_structured(s.clone()), &QuadratureSpec::moment_reduction()).unwrap();
    assert!((centred.value - boxed.value).abs() < 1e-14 * centred.value);
    let radial = integrate(&Domain7::cube(2.0), &Integrand::from_structured(s.clone()), &QuadratureSpec::radial_1d(48)).unwrap();
    assert!((radial.value - boxed.value).abs() < 1e-9 * boxed.value);
    // A term that leaves a small box cannot be reduced.
    let err = integrate(&Domain7::cube(1.2), &Integrand::from_structured(s), &QuadratureSpec::moment_reduction());
    assert!(matches!(err, Err(Error::Quadrature(_))));
}

#[test]
fn moment_reduction_rejects_black_box_fields() {
    let f = Integrand::from_fn(|x| x[0]);
    assert!(matches!(integrate(&Domain7::unit_ball(), &f, &QuadratureSpec::moment_reduction()), Err(Error::Quadrature(_))));
    assert!(matches!(integrate(&Domain7::unit_ball(), &f, &QuadratureSpec::monte_carlo(0, 1)), Err(Error::Invalid(_))));
    assert!(matches!(integrate(&Domain7::unit_ball(), &f, &QuadratureSpec::radial_1d(1)), Err(Error::Invalid(_))));
}

#[test]
fn torus_trapezoid_is_spectrally_accurate() {
    let d = Domain7::Torus { periods: [1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.5] };
    let f = Integrand::from_fn(|x| (2.0 * PI * x[0]).cos().powi(2) + (PI * x[1]).sin() * (4.0 * PI * x[6] / 3.0).cos());
    let v = integrate(&d, &f, &QuadratureSpec::trapezoid(6)).unwrap();
    assert!((v.value - 0.5 * d.volume()).abs() < 1e-13);
    assert!(matches!(integrate(&Domain7::unit_ball(), &f, &QuadratureSpec::trapezoid(4)), Err(Error::Quadrature(_))));
}

#[test]
fn adaptive_radial_integral_matches_gauss_legendre() {
    let bump = BumpProfile::new(1.0);
    let f = |r: f64| bump.reduced_derivative(1, r).powi(2) * r.powi(8);
    let adaptive = integrate_adaptive(&f, 0.0, 1.0, &bump.breakpoints(), 1e-12);
    let rule = segment_rule(0.0, 1.0, &bump.breakpoints(), 60);
    let gl: f64 = rule.iter().map(|(r, w)| w * f(*r)).sum();
    assert!((adaptive.value - gl).abs() < 1e-12 * gl.abs());
    assert!(adaptive.error <= 1e-12 * gl.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ball_rule_integrates_polynomials_of_degree_7(c in prop::array::uniform7(-1.0f64..1.0), radius in 0.2f64..3.0) {
        // p(x) = (c·(x - x0))⁴ + (x - x0)_1^3 has the moment-reduction value computed term by term.
        let b = Ball::new(c, radius);
        let rule = ball_rule(&b, &[], 6);
        let a = [0.3, -0.5, 0.2, 0.1, 0.7, -0.4, 0.2];
        let v = apply_rule(&rule, |x| {
            let s: f64 = (0..7).map(|i| a[i] * (x[i] - c[i])).sum();
            s.powi(4) + (x[0] - c[0]).powi(3)
        });
        // ∫_{B_R} (a·y)^4 = |a|⁴ · 3/(7·9) · Area · R^11/11.
        let na2: f64 = a.iter().map(|t| t * t).sum();
        let exact = na2 * na2 * 3.0 / 63.0 * sphere_area() * radius.powi(11) / 11.0;
        prop_assert!((v.value - exact).abs() < 1e-12 * exact.max(1.0));
    }
}
