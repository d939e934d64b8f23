use g2hitchin::exterior::{ConstForm, FormField, Vector7};
use g2hitchin::functionals::*;
use g2hitchin::g2structure::models::*;
use g2hitchin::g2structure::G2Structure;
use g2hitchin::perturbations::{make_family, FamilyName, PerturbationFamily};
use g2hitchin::quadrature::{ball_volume, Domain7, QuadratureSpec};
use g2hitchin::typedecomp::Projections;
use g2hitchin::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base_structure(name: FamilyName) -> G2Structure<f64> {
    pointwise_structure(name.kind(), &name.base_form()).unwrap()
}

fn random_points(n: usize, seed: u64) -> Vec<Vector7> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let x: Vector7 = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let r2: f64 = x.iter().map(|v| v * v).sum();
        // Points in the transition annulus of the bump, where f' ≠ 0.
        if (0.3..0.8).contains(&r2.sqrt()) {
            out.push(x);
        }
    }
    out
}

/// Signed squared norms of the type components through the typedecomp projectors.
fn component_norms(p: &Projections<f64>, sigma: &ConstForm<f64>) -> (f64, f64, f64) {
    let s = p.structure();
    let sq = |label| {
        let c = p.project(label, sigma).unwrap().form;
        s.pairing(&c, &c)
    };
    (sq(1), sq(7), sq(27))
}

/// (f'/r)² at x for the unit bump.
fn reduced_sq(x: &Vector7) -> f64 {
    let bump = g2hitchin::exterior::BumpProfile::new(1.0);
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    bump.reduced_derivative(1, r).powi(2)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * scale.max(1e-300)
}

fn check_components(name: FamilyName, expected: impl Fn(&Vector7) -> (f64, f64, f64)) {
    let s = base_structure(name);
    let p = Projections::new(&s);
    let d = make_family(&PerturbationFamily::unit(name)).unwrap().d_alpha;
    for x in random_points(100, 5) {
        let sigma = d.eval(&x);
        let (a1, a7, a27) = component_norms(&p, &sigma);
        let k = reduced_sq(&x);
        let (e1, e7, e27) = expected(&x);
        let scale = k * (e1.abs() + e7.abs() + e27.abs());
        assert!(close(a1, k * e1, scale), "{name} π1 at {x:?}: {a1} vs {}", k * e1);
        assert!(close(a7, k * e7, scale), "{name} π7 at {x:?}: {a7} vs {}", k * e7);
        assert!(close(a27, k * e27, scale), "{name} π27 at {x:?}: {a27} vs {}", k * e27);
    }
}

/// ⟨σ, Iσ⟩ (without the 1/p prefactor and volume density) through typedecomp.
fn operator_pairing(name: FamilyName, p: &Projections<f64>, sigma: &ConstForm<f64>) -> f64 {
    let op = name.kind().operator();
    let (a1, a7, a27) = component_norms(p, sigma);
    op.c1 * a1 + op.c7 * a7 + op.c27 * a27
}

fn s4(x: &Vector7) -> f64 {
    x[3] * x[3] + x[4] * x[4] + x[5] * x[5] + x[6] * x[6]
}

#[test]
fn p0_minus_components() {
    check_components(FamilyName::P0Minus, |x| (0.0, s4(x) / 4.0, 3.0 * s4(x) / 4.0));
}

#[test]
fn p0_plus_is_pure_type_seven() {
    // |dα⁺|² = |x|² Σ|e^i ∧ φ0|²/7 · (f'/r)² = 4|x|²(f'/r)².
    check_components(FamilyName::P0Plus, |x| (0.0, 4.0 * x.iter().map(|v| v * v).sum::<f64>(), 0.0));
}

#[test]
fn split_grade_three_components() {
    check_components(FamilyName::Sg3Plus, |x| {
        (x[2] * x[2] / 7.0, -s4(x) / 4.0, 6.0 / 7.0 * x[2] * x[2] - 0.75 * s4(x))
    });
    check_components(FamilyName::Sg3Minus, |x| {
        let t = -x[1] * x[1] - x[2] * x[2] + x[5] * x[5] + x[6] * x[6];
        (x[4] * x[4] / 7.0, t / 4.0, 6.0 / 7.0 * x[4] * x[4] + 0.75 * t)
    });
}

fn check_pairing(name: FamilyName, expected: impl Fn(&Vector7) -> f64) {
    let s = base_structure(name);
    let p = Projections::new(&s);
    let d = make_family(&PerturbationFamily::unit(name)).unwrap().d_alpha;
    let pv = pointwise_variation(name.kind(), &name.base_form()).unwrap();
    for x in random_points(100, 9) {
        let sigma = d.eval(&x);
        let k = reduced_sq(&x);
        let e = k * expected(&x);
        let a = operator_pairing(name, &p, &sigma);
        assert!(close(a, e, e.abs().max(k)), "{name} at {x:?}: {a} vs {e}");
        // The Gram-route Hessian of the functionals module agrees with the projector route.
        let m = pv.hessian.mul_vec(sigma.coeffs());
        let q: f64 = sigma.coeffs().iter().zip(&m).map(|(a, b)| a * b).sum();
        let expect_q = name.kind().prefactor() * pv.voldensity * a;
        assert!(close(q, expect_q, expect_q.abs().max(k)), "{name} hessian at {x:?}: {q} vs {expect_q}");
    }
}

#[test]
fn split_grade_four_pairings() {
    check_pairing(FamilyName::Sg4Plus, |x| s4(x) / 2.0);
    check_pairing(FamilyName::Sg4Minus, |x| x[2] * x[2] / 2.0 - x[4] * x[4] / 2.0 - x[5] * x[5] / 2.0 - 0.75 * x[6] * x[6]);
}

#[test]
fn compact_grade_three_pairing() {
    check_pairing(FamilyName::ChMinus, |x| -(2.0 / 3.0 * x[2] * x[2] + s4(x) / 2.0));
}

#[test]
fn remaining_pairings_follow_from_components() {
    check_pairing(FamilyName::P0Minus, |x| s4(x) / 4.0 - 0.75 * s4(x));
    check_pairing(FamilyName::P0Plus, |x| 4.0 * x.iter().map(|v| v * v).sum::<f64>());
}

#[test]
fn evaluate_examples() {
    let ball = Domain7::unit_ball();
    let exact = 16.0 * std::f64::consts::PI.powi(3) / 105.0;
    let q = QuadratureSpec::moment_reduction();
    let h = evaluate(FunctionalKind::H4, &ball, &FormField::constant(&psi0_f64()), &q).unwrap();
    assert!((h.value - exact).abs() < 1e-14);
    assert!((h.value - ball_volume()).abs() < 1e-14);
    let split = evaluate(FunctionalKind::H3_SPLIT, &ball, &FormField::constant(&phi_tilde0_f64()), &q).unwrap();
    assert!((split.value - exact).abs() < 1e-14);
    // λ^{7/3} scaling, recomputed directly at λ = 8.
    let d = Domain7::Box { corner: [0.0; 7], edges: [1.0, 2.0, 1.0, 0.5, 1.0, 1.0, 3.0] };
    let one = evaluate(FunctionalKind::H3, &d, &FormField::constant(&phi0_f64()), &q).unwrap().value;
    let eight = evaluate(FunctionalKind::H3, &d, &FormField::constant(&phi0_f64().scale(&8.0)), &q).unwrap().value;
    assert!((eight - 128.0 * one).abs() < 1e-12 * eight);
    assert!((one - 3.0).abs() < 1e-13);
    // The same with Monte Carlo, where the integrand is constant.
    let mc = evaluate(FunctionalKind::H4, &ball, &FormField::constant(&psi0_f64()), &QuadratureSpec::monte_carlo(500, 1)).unwrap();
    assert!((mc.value - exact).abs() < 1e-12);
}

#[test]
fn evaluate_perturbed_agrees_across_methods() {
    let base = FormField::constant(&psi0_f64());
    let f = base.add(&make_family(&PerturbationFamily::unit(FamilyName::P0Plus).with_amplitude(0.05)).unwrap().d_alpha);
    let ball = Domain7::Ball { center: [0.0; 7], radius: 1.5 };
    let split = evaluate(FunctionalKind::H4, &ball, &f, &QuadratureSpec::moment_reduction()).unwrap();
    let radial = evaluate(FunctionalKind::H4, &ball, &f, &QuadratureSpec::radial_1d(64)).unwrap();
    assert!((split.value - radial.value).abs() < 1e-11 * split.value);
    let mc = evaluate(FunctionalKind::H4, &ball, &f, &QuadratureSpec::monte_carlo(100_000, 3)).unwrap();
    assert!((mc.value - split.value).abs() < 4.0 * mc.error + 1e-12, "{} vs {} ± {}", split.value, mc.value, mc.error);
    assert!(split.value > ball_volume() * 1.5f64.powi(7));
}

#[test]
fn evaluate_reports_orbit_violations() {
    let f = FormField::constant(&psi0_f64().scale(&-1.0));
    let err = evaluate(FunctionalKind::H4, &Domain7::unit_ball(), &f, &QuadratureSpec::moment_reduction()).unwrap_err();
    assert!(matches!(err, Error::OrbitViolation { .. }), "{err}");
    // The compact functional at the split form.
    let err = evaluate(FunctionalKind::H3, &Domain7::unit_ball(), &FormField::constant(&phi_tilde0_f64()), &QuadratureSpec::radial_1d(8)).unwrap_err();
    assert!(matches!(err, Error::OrbitViolation { .. }));
    let big = FormField::constant(&psi0_f64()).add(&make_family(&PerturbationFamily::unit(FamilyName::P0Minus).with_amplitude(1e3)).unwrap().d_alpha);
    let err = evaluate(FunctionalKind::H4, &Domain7::unit_ball(), &big, &QuadratureSpec::moment_reduction()).unwrap_err();
    match err {
        Error::OrbitViolation { point, .. } => assert!(point.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.8 + 1e-12),
        e => panic!("{e}"),
    }
}

#[test]
fn first_variation_vanishes_at_critical_points() {
    let q = QuadratureSpec::moment_reduction();
    for name in [FamilyName::P0Plus, FamilyName::P0Minus, FamilyName::ChMinus, FamilyName::Sg3Minus, FamilyName::Sg4Plus] {
        let v = make_family(&PerturbationFamily::unit(name)).unwrap().d_alpha;
        let base = FormField::constant(&name.base_form());
        let d1 = first_variation(name.kind(), &Domain7::unit_ball(), &base, &v, &q).unwrap();
        assert_eq!(d1.value, 0.0, "{name}");
        let radial = first_variation(name.kind(), &Domain7::unit_ball(), &base, &v, &QuadratureSpec::radial_1d(48)).unwrap();
        assert!(radial.value.abs() < 1e-12, "{name}: {}", radial.value);
    }
}

#[test]
fn first_variation_matches_central_differences_on_a_non_critical_base() {
    // ψ0 + 0.3·dα⁻ is closed but not coclosed.
    let bump = make_family(&PerturbationFamily::new(FamilyName::P0Minus, [0.0; 7], 0.9, 0.3)).unwrap().d_alpha;
    let base = FormField::constant(&psi0_f64()).add(&bump);
    let p = PerturbationFamily::new(FamilyName::P0Minus, [0.1, 0.0, 0.0, 0.05, 0.0, 0.0, 0.0], 0.5, 1.0);
    let v = make_family(&p).unwrap().d_alpha;
    let d = Domain7::unit_ball();
    let analytic = first_variation(FunctionalKind::H4, &d, &base, &v, &QuadratureSpec::radial_1d(48)).unwrap().value;
    assert!(analytic.abs() > 1e-4, "{analytic}");
    let mut errs = Vec::new();
    for t in [1e-3, 1e-4] {
        let fd = first_variation_fd(FunctionalKind::H4, &d, &base, &v, t, 48).unwrap().value;
        errs.push((fd - analytic).abs() / analytic.abs());
    }
    assert!(errs[0] < 1e-5 && errs[1] < 1e-7, "{errs:?}");
}

#[test]
fn second_variation_examples_at_psi0() {
    let q = QuadratureSpec::moment_reduction();
    let base = FormField::constant(&psi0_f64());
    let d = Domain7::unit_ball();
    let plus = make_family(&PerturbationFamily::unit(FamilyName::P0Plus)).unwrap().d_alpha;
    let minus = make_family(&PerturbationFamily::unit(FamilyName::P0Minus)).unwrap().d_alpha;
    let dp = second_variation(FunctionalKind::H4, &d, &base, &plus, &plus, &q).unwrap().value;
    let dm = second_variation(FunctionalKind::H4, &d, &base, &minus, &minus, &q).unwrap().value;
    // (1/4)∫|dα⁺|² and −(1/8)∫(f'/r)² S4 by an independent product rule.
    let rule = g2hitchin::quadrature::ball_rule(&g2hitchin::exterior::Ball::new([0.0; 7], 1.0), &[0.3, 0.8], 48);
    let norm_sq: f64 = rule.iter().map(|(x, w)| w * plus.eval(x).norm().powi(2)).sum();
    let s4_int: f64 = rule.iter().map(|(x, w)| w * reduced_sq(x) * s4(x)).sum();
    assert!(dp > 0.0 && dm < 0.0);
    assert!((dp - norm_sq / 4.0).abs() < 1e-9 * dp);
    assert!((dm + s4_int / 8.0).abs() < 1e-9 * dm.abs());
}

#[test]
fn second_variation_is_symmetric_and_matches_finite_differences() {
    let d = Domain7::unit_ball();
    for name in FamilyName::ALL {
        let kind = name.kind();
        let base = FormField::constant(&name.base_form());
        let v1 = make_family(&PerturbationFamily::unit(name)).unwrap().d_alpha;
        let v2 = make_family(&PerturbationFamily::new(name, [0.1, -0.05, 0.0, 0.2, 0.0, 0.0, 0.1], 0.6, 0.7)).unwrap().d_alpha;
        let q = QuadratureSpec::moment_reduction();
        let a = second_variation(kind, &d, &base, &v1, &v1, &q).unwrap().value;
        assert_eq!(a.signum() as i32, name.sign(), "{name}: {a}");
        let fd = second_variation_fd(kind, &d, &base, &v1, &v1, 1e-4, 48).unwrap().value;
        assert!((a - fd).abs() <= 1e-4 * a.abs(), "{name}: {a} vs {fd}");
        let r = second_variation(kind, &d, &base, &v1, &v1, &QuadratureSpec::radial_1d(48)).unwrap().value;
        assert!((a - r).abs() <= 1e-9 * a.abs(), "{name}: {a} vs {r}");
        // Pointwise route for the cross term because the centers differ.
        let q1 = QuadratureSpec::radial_1d(48);
        let x12 = second_variation(kind, &d, &base, &v1, &v2, &q1).unwrap().value;
        let x21 = second_variation(kind, &d, &base, &v2, &v1, &q1).unwrap().value;
        assert!((x12 - x21).abs() <= 1e-10 * x12.abs().max(1e-300), "{name}: {x12} vs {x21}");
    }
}

#[test]
fn disjoint_variations_have_zero_cross_term() {
    let base = FormField::constant(&psi0_f64());
    let a = make_family(&PerturbationFamily::new(FamilyName::P0Plus, [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.5, 1.0)).unwrap().d_alpha;
    let b = make_family(&PerturbationFamily::new(FamilyName::P0Minus, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.5, 1.0)).unwrap().d_alpha;
    let d = Domain7::Ball { center: [0.0; 7], radius: 2.0 };
    let v = second_variation(FunctionalKind::H4, &d, &base, &a, &b, &QuadratureSpec::moment_reduction()).unwrap();
    assert_eq!(v.value, 0.0);
}

#[test]
fn variations_outside_the_domain_are_rejected() {
    let base = FormField::constant(&psi0_f64());
    let v = make_family(&PerturbationFamily::new(FamilyName::P0Plus, [0.9, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.5, 1.0)).unwrap().d_alpha;
    let r = second_variation(FunctionalKind::H4, &Domain7::unit_ball(), &base, &v, &v, &QuadratureSpec::moment_reduction());
    assert!(matches!(r, Err(Error::Support(_))));
    let r = first_variation(FunctionalKind::H4, &Domain7::unit_ball(), &base, &v, &QuadratureSpec::moment_reduction());
    assert!(matches!(r, Err(Error::Support(_))));
}

#[test]
fn operator_coefficients() {
    assert_eq!(FunctionalKind::H3.operator(), VariationOperator { c1: 4.0 / 3.0, c7: 1.0, c27: -1.0 });
    assert_eq!(FunctionalKind::H4_SPLIT.operator(), VariationOperator { c1: 0.75, c7: 1.0, c27: -1.0 });
    assert!(FunctionalKind { grade: 2, flavor: Flavor::Compact }.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Homogeneity: Dv(σ)|_ρ pairs with ρ itself to (7/p)·v, and D²v(ρ, ρ) = (7/p)(7/p − 1)·v.
    #[test]
    fn variations_respect_homogeneity(coeffs in prop::collection::vec(-0.15f64..0.15, 35), grade4 in any::<bool>(), split in any::<bool>()) {
        let (kind, base) = match (grade4, split) {
            (true, false) => (FunctionalKind::H4, psi0_f64()),
            (true, true) => (FunctionalKind::H4_SPLIT, psi_tilde0_f64()),
            (false, false) => (FunctionalKind::H3, phi0_f64()),
            (false, true) => (FunctionalKind::H3_SPLIT, phi_tilde0_f64()),
        };
        let rho = base.add(&ConstForm::from_coeffs(base.grade(), coeffs));
        let pv = pointwise_variation(kind, &rho).unwrap();
        let k = 7.0 / kind.grade as f64;
        let g: f64 = pv.gradient.iter().zip(rho.coeffs()).map(|(a, b)| a * b).sum();
        prop_assert!((g - k * pv.voldensity).abs() < 1e-10 * pv.voldensity);
        let m = pv.hessian.mul_vec(rho.coeffs());
        let h: f64 = rho.coeffs().iter().zip(&m).map(|(a, b)| a * b).sum();
        prop_assert!((h - k * (k - 1.0) * pv.voldensity).abs() < 1e-9 * pv.voldensity);
    }

    /// The pointwise Hessian is the second difference of the volume density.
    #[test]
    fn pointwise_hessian_matches_second_differences(coeffs in prop::collection::vec(-0.1f64..0.1, 35), dir in prop::collection::vec(-1.0f64..1.0, 35)) {
        let rho = psi0_f64().add(&ConstForm::from_coeffs(4, coeffs));
        let sigma = ConstForm::from_coeffs(4, dir);
        let pv = pointwise_variation(FunctionalKind::H4, &rho).unwrap();
        let m = pv.hessian.mul_vec(sigma.coeffs());
        let h: f64 = sigma.coeffs().iter().zip(&m).map(|(a, b)| a * b).sum();
        let t = 1e-3;
        let v = |s: f64| voldensity(FunctionalKind::H4, &rho.axpy(&s, &sigma)).unwrap();
        let fd = (v(t) - 2.0 * v(0.0) + v(-t)) / (t * t);
        prop_assert!((h - fd).abs() < 1e-5 * (1.0 + h.abs()), "{} vs {}", h, fd);
    }
}
