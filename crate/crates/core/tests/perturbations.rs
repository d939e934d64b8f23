use g2hitchin::exterior::{Ball, FormField, MultiIndex, RadialProfile, Structured, Term, Vector7};
use g2hitchin::functionals::{second_variation, FunctionalKind};
use g2hitchin::g2structure::models::psi0_f64;
use g2hitchin::perturbations::*;
use g2hitchin::quadrature::{Domain7, QuadratureSpec};
use g2hitchin::typedecomp::Projections;
use g2hitchin::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn monomial(coeff: f64, exps: [u8; 7], axes: &[usize]) -> Term {
    Term { coeff, profile: RadialProfile::One, center: [0.0; 7], exps, index: MultiIndex::of(axes) }
}

/// ψ0 + s·2x¹dx¹²³⁴, closed with linear coefficients and equal to ψ0 at the origin.
fn linear_perturbation(s: f64) -> FormField {
    let w = Structured::new(4, vec![monomial(2.0 * s, [1, 0, 0, 0, 0, 0, 0], &[1, 2, 3, 4])]);
    FormField::constant(&psi0_f64()).add(&FormField::from_structured(w))
}

fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vector7 {
    loop {
        let x: Vector7 = std::array::from_fn(|_| rng.random_range(-hi..hi));
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (lo..hi).contains(&r) {
            return x;
        }
    }
}

#[test]
fn family_names_round_trip() {
    for name in FamilyName::ALL {
        assert_eq!(name.as_str().parse::<FamilyName>().unwrap(), name);
        let json = serde_json::to_string(&name).unwrap();
        assert_eq!(json, format!("\"{}\"", name.as_str()));
    }
    assert_eq!("p0plus".parse::<FamilyName>().unwrap(), FamilyName::P0Plus);
    assert!(matches!("P1+".parse::<FamilyName>(), Err(Error::Invalid(_))));
}

#[test]
fn families_have_declared_grades_and_supports() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in FamilyName::ALL {
        let center = [0.2, -0.1, 0.0, 0.3, 0.0, 0.0, 0.1];
        let p = PerturbationFamily::new(name, center, 0.7, 1.3);
        let f = make_family(&p).unwrap();
        let expected = match name {
            FamilyName::Sg3Plus | FamilyName::Sg3Minus | FamilyName::ChMinus => 2,
            _ => 3,
        };
        assert_eq!(f.alpha.grade(), expected, "{name}");
        assert_eq!(f.d_alpha.grade(), expected + 1);
        let support = f.alpha.support().unwrap();
        assert!(support.radius < p.eta, "{name}: support {} not inside η", support.radius);
        for _ in 0..1000 {
            let y = random_point(&mut rng, support.radius * 1.0001, 3.0);
            let x: Vector7 = std::array::from_fn(|i| y[i] + center[i]);
            assert_eq!(f.alpha.eval(&x).max_abs(), 0.0);
            assert_eq!(f.d_alpha.eval(&x).max_abs(), 0.0);
        }
        let dd = f.d_alpha.structured().unwrap().d();
        assert!(dd.terms.is_empty(), "{name}: d(dα) has {} terms", dd.terms.len());
    }
}

#[test]
fn zero_amplitude_leaves_base_unchanged() {
    for name in FamilyName::ALL {
        let base = FormField::constant(&name.base_form());
        let p = PerturbationFamily::unit(name).with_amplitude(0.0);
        let psi = perturbed(&base, &p).unwrap();
        for x in [[0.0; 7], [0.4, 0.1, 0.0, 0.0, -0.2, 0.0, 0.0]] {
            assert_eq!(psi.eval(&x), name.base_form());
        }
    }
}

#[test]
fn p0_plus_derivative_is_pure_type_seven() {
    let f = make_family(&PerturbationFamily::unit(FamilyName::P0Plus)).unwrap();
    let s = g2hitchin::functionals::pointwise_structure(FunctionalKind::H4, &psi0_f64()).unwrap();
    let proj = Projections::new(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x = random_point(&mut rng, 0.35, 0.75);
        let s = f.d_alpha.eval(&x);
        let seven = proj.project(7, &s).unwrap().form;
        assert!(seven.sub(&s).max_abs() <= 1e-12 * s.max_abs());
    }
}

#[test]
fn invalid_bumps_are_rejected() {
    let mut p = PerturbationFamily::unit(FamilyName::P0Plus);
    p.eta = 0.0;
    assert!(matches!(make_family(&p), Err(Error::Invalid(_))));
    let mut p = PerturbationFamily::unit(FamilyName::P0Plus);
    p.plateau = (0.8, 0.3);
    assert!(matches!(make_family(&p), Err(Error::Invalid(_))));
}

#[test]
fn amplitude_search_moves_each_functional_the_right_way() {
    let grid = log_grid(1e-2, 1.0, 5);
    for name in FamilyName::ALL {
        let base = FormField::constant(&name.base_form());
        let rep = optimize_amplitude(name.kind(), &base, &PerturbationFamily::unit(name), &grid, 32).unwrap();
        assert!(name.sign() as f64 * rep.best_change > 0.0, "{name}: {}", rep.best_change);
        assert!(rep.eps_hat > 0.0 && grid.contains(&rep.best_t));
        assert_eq!(rep.trials.len(), grid.len());
    }
}

#[test]
fn excessive_amplitude_leaves_the_orbit() {
    let base = FormField::constant(&psi0_f64());
    let p = PerturbationFamily::unit(FamilyName::P0Minus);
    let err = optimize_amplitude(FunctionalKind::H4, &base, &p, &[1e3], 32).unwrap_err();
    assert!(matches!(err, Error::OrbitViolation { .. }), "{err}");
}

#[test]
fn taylor_remainder_has_fourth_order_slope() {
    // The cubic Taylor term vanishes by the odd symmetry t ↦ −t of the bump family, so the
    // remainder decays like t⁴.
    let base = FormField::constant(&psi0_f64());
    let fit = taylor_remainder(FunctionalKind::H4, &base, &PerturbationFamily::unit(FamilyName::P0Minus), &log_grid(1e-3, 1e-1, 5), 32).unwrap();
    assert!(fit.first_variation.abs() < 1e-12);
    assert!(fit.second_variation < 0.0);
    assert!((fit.slope - 4.0).abs() < 0.1, "slope {}", fit.slope);
}

#[test]
fn rescaling_fixes_psi0_and_composes() {
    let psi0 = FormField::constant(&psi0_f64());
    for eta in [0.1, 1.0, 7.5] {
        let r = rescale(&psi0, eta).unwrap();
        assert!(r.eval(&[0.3, 0.0, 0.1, 0.0, 0.0, 0.2, 0.0]).sub(&psi0_f64()).max_abs() <= 1e-15);
    }
    let field = perturbed(&linear_perturbation(0.3), &PerturbationFamily::new(FamilyName::P0Plus, [0.1, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0], 0.5, 0.2)).unwrap();
    let ab = rescale(&rescale(&field, 0.5).unwrap(), 0.3).unwrap();
    let direct = rescale(&field, 0.15).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let x = random_point(&mut rng, 0.0, 3.0);
        assert!(ab.eval(&x).sub(&direct.eval(&x)).max_abs() <= 1e-12);
    }
    let black_box = {
        let g = field.clone();
        FormField::from_fn(4, None, move |x| g.eval(x))
    };
    let bb = rescale(&black_box, 0.15).unwrap();
    for _ in 0..20 {
        let x = random_point(&mut rng, 0.0, 3.0);
        assert!(bb.eval(&x).sub(&direct.eval(&x)).max_abs() <= 1e-12);
    }
    assert!(matches!(rescale(&psi0, 0.0), Err(Error::Invalid(_))));
}

#[test]
fn rescaled_linear_perturbation_converges_linearly() {
    let psi = linear_perturbation(1.0);
    let samples = ball_samples(&Ball::new([0.0; 7], 2.0));
    for eta in [1e-1, 1e-2, 1e-3] {
        let r = rescale(&psi, eta).unwrap();
        let dist = samples.iter().map(|x| r.eval(x).sub(&psi0_f64()).max_abs()).fold(0.0, f64::max);
        // sup over B̄₂ of |2ηx¹| is 4η.
        assert!((dist - 4.0 * eta).abs() <= 1e-12, "η = {eta}: {dist}");
    }
}

#[test]
fn relative_change_is_invariant_under_base_rescaling() {
    let psi = psi0_f64();
    let lambda: f64 = 16.0;
    let a = relative_change_on_metric_ball(FunctionalKind::H4, &psi, FamilyName::P0Plus, [0.0; 7], 1.0, 0.1, 32).unwrap();
    let b = relative_change_on_metric_ball(FunctionalKind::H4, &psi.scale(&lambda), FamilyName::P0Plus, [0.0; 7], lambda.powf(0.25), lambda * 0.1, 32)
        .unwrap();
    assert!((a.flat_radius - b.flat_radius).abs() < 1e-12);
    assert!((a.relative - b.relative).abs() <= 1e-8 * a.relative.abs());
    assert!(a.relative > 0.0);
}

#[test]
fn second_variation_sign_survives_near_critical_bases() {
    let base = linear_perturbation(0.5);
    for name in [FamilyName::P0Plus, FamilyName::P0Minus] {
        let values = rescaled_second_variations(&base, name, &[0.01, 0.1, 0.5], 24).unwrap();
        assert_eq!(sign_threshold(&values, name.sign()), Some(0.5), "{name}: {values:?}");
    }
    assert_eq!(sign_threshold(&[(0.1, 1.0), (0.2, -1.0), (0.3, 1.0)], 1), Some(0.1));
    assert_eq!(sign_threshold(&[(0.1, -1.0)], 1), None);
}

#[test]
fn primitive_of_linear_four_form_is_exact() {
    let w = FormField::from_structured(Structured::new(4, vec![monomial(2.0, [1, 0, 0, 0, 0, 0, 0], &[1, 2, 3, 4])]));
    let rep = poincare_primitive(&w, &DEFAULT_PRIMITIVE_ETAS, 1e-10).unwrap();
    assert!(rep.exact);
    let c = 2.0 / 5.0;
    let expected = Structured::new(
        3,
        vec![
            monomial(c, [2, 0, 0, 0, 0, 0, 0], &[2, 3, 4]),
            monomial(-c, [1, 1, 0, 0, 0, 0, 0], &[1, 3, 4]),
            monomial(c, [1, 0, 1, 0, 0, 0, 0], &[1, 2, 4]),
            monomial(-c, [1, 0, 0, 1, 0, 0, 0], &[1, 2, 3]),
        ],
    );
    assert_eq!(rep.primitive.structured().unwrap(), &expected);
    let dp = rep.primitive.structured().unwrap().d();
    assert_eq!(dp, *w.structured().unwrap());
    assert_eq!(rep.residual, 0.0);
    assert!(rep.vanishes_at_origin && rep.quadratic_bound);
    assert!((rep.bounds.primitive_exponent - 2.0).abs() < 0.1);
    assert!((rep.bounds.input_exponent - 1.0).abs() < 0.1);
}

#[test]
fn primitive_of_constant_form_lacks_quadratic_bound() {
    let w = FormField::from_structured(Structured::new(4, vec![monomial(1.0, [0; 7], &[1, 2, 3, 4])]));
    let rep = poincare_primitive(&w, &DEFAULT_PRIMITIVE_ETAS, 1e-10).unwrap();
    assert!(rep.residual <= 1e-14);
    assert!(!rep.vanishes_at_origin && !rep.quadratic_bound);
}

#[test]
fn numerical_primitive_of_closed_bump_form() {
    let w = make_family(&PerturbationFamily::new(FamilyName::P0Minus, [0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.9, 1.0)).unwrap().d_alpha;
    let rep = poincare_primitive(&w, &DEFAULT_PRIMITIVE_ETAS, 1e-8).unwrap();
    assert!(!rep.exact);
    assert!(rep.residual < 1e-7, "residual {}", rep.residual);
    // The bump is flat near its center, so W vanishes on a neighbourhood of the origin.
    assert!(rep.vanishes_at_origin);
}

#[test]
fn non_closed_input_is_rejected() {
    let w = FormField::from_structured(Structured::new(3, vec![monomial(1.0, [0, 0, 0, 1, 0, 0, 0], &[1, 2, 3])]));
    assert!(matches!(poincare_primitive(&w, &DEFAULT_PRIMITIVE_ETAS, 1e-10), Err(Error::NotClosed(_))));
}

#[test]
fn gluing_standard_form_is_trivial() {
    let psi0 = FormField::constant(&psi0_f64());
    let rep = glue_to_standard(&psi0, 1e-6, 1e-3).unwrap();
    assert_eq!(rep.eta, 1.0);
    assert_eq!(rep.correction, 0.0);
    assert_eq!(rep.agreement, 0.0);
}

#[test]
fn gluing_a_small_linear_perturbation() {
    let psi = linear_perturbation(0.1);
    let rep = glue_to_standard(&psi, 1e-2, 1e-4).unwrap();
    assert!(rep.correction < 1e-2);
    assert!(rep.agreement <= 1e-12, "agreement {}", rep.agreement);
    assert!(rep.eta > 1e-4 && rep.eta < 0.5, "eta {}", rep.eta);
    // Corrections shrink linearly in η.
    let (e0, c0) = rep.trials[0];
    let (e1, c1) = rep.trials[1];
    let slope = (c0 / c1).ln() / (e0 / e1).ln();
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    // The glued form is ψ0 near the origin and ψ′ outside the cutoff.
    let far = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.9];
    assert!(rep.glued.eval(&far).sub(&psi.eval(&far)).max_abs() == 0.0);
}

#[test]
fn gluing_fails_below_the_grid_floor() {
    let err = glue_to_standard(&linear_perturbation(0.1), 1e-12, 0.1).unwrap_err();
    assert!(matches!(err, Error::SearchFailed(ref m) if m.contains("best achieved")), "{err}");
    let shifted = FormField::constant(&psi0_f64().scale(&1.1));
    assert!(matches!(glue_to_standard(&shifted, 1e-2, 0.1), Err(Error::Invalid(_))));
}

#[test]
fn packings_validate() {
    let p = Packing::preset("cubic-2").unwrap();
    assert_eq!(p.balls.len(), 128);
    p.validate().unwrap();
    assert!((p.covered_fraction() - 128.0 * g2hitchin::quadrature::ball_volume() * 0.25f64.powi(7)).abs() < 1e-15);
    assert_eq!(Packing::preset("lattice-64").unwrap().balls.len(), 64);
    assert!(Packing::preset("hexagonal").is_err());
    let mut overlap = Packing::preset("cubic-2").unwrap();
    overlap.balls[1].center = overlap.balls[0].center;
    assert!(matches!(overlap.validate(), Err(Error::Packing(_))));
    let mut outside = Packing::preset("single").unwrap();
    outside.balls[0].radius = 0.6;
    assert!(matches!(outside.validate(), Err(Error::Packing(_))));
}

fn quick() -> IterateOptions {
    IterateOptions { t_grid: log_grid(0.1, 1.0, 3), nodes: 24 }
}

#[test]
fn unbounded_iteration_with_no_rounds() {
    let rep = unbounded_iterate(&Packing::preset("single").unwrap(), 1, 0, 0.99, &quick()).unwrap();
    assert_eq!(rep.values.len(), 1);
    assert!((rep.values[0] - 1.0).abs() < 1e-14);
    assert!(rep.ratios.is_empty());
}

#[test]
fn unbounded_iteration_rejects_bad_packings() {
    let mut overlap = Packing::preset("cubic-2").unwrap();
    overlap.balls[1].center = overlap.balls[0].center;
    assert!(matches!(unbounded_iterate(&overlap, 1, 1, 0.99, &quick()), Err(Error::Packing(_))));
    match unbounded_iterate(&Packing::preset("cubic-2").unwrap(), 1, 1, 0.1, &quick()) {
        Err(Error::Coverage { covered, required, deficit }) => {
            assert!((required - 0.9).abs() < 1e-15 && (deficit - (required - covered)).abs() < 1e-15);
        }
        other => panic!("expected coverage error, got {other:?}"),
    }
}

#[test]
fn unbounded_iteration_is_monotone_in_both_directions() {
    let packing = Packing::preset("cubic-2").unwrap();
    for sign in [1, -1] {
        let rep = unbounded_iterate(&packing, sign, 3, 0.99, &quick()).unwrap();
        assert_eq!(rep.values.len(), 4);
        assert!(rep.strictly_monotone, "{sign}: {:?}", rep.values);
        for w in rep.values.windows(2) {
            assert!(sign as f64 * (w[1] - w[0]) > 0.0);
        }
        assert!(rep.eps_hat > 0.0);
    }
}

#[test]
fn saddle_grams_are_definite() {
    let base = FormField::constant(&psi0_f64());
    let q = QuadratureSpec::moment_reduction();
    for (name, sign) in [(FamilyName::P0Plus, 1), (FamilyName::P0Minus, -1)] {
        let rep = saddle_gram(FunctionalKind::H4, &base, &bump_row(name, 5, 0.5), &q).unwrap();
        assert_eq!(rep.definiteness, sign);
        assert!(rep.max_off_diagonal <= 1e-12);
        assert_eq!(rep.gram.len(), 5);
    }
    let pair = [
        PerturbationFamily::new(FamilyName::P0Plus, [-0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.5, 1.0),
        PerturbationFamily::new(FamilyName::P0Minus, [0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.5, 1.0),
    ];
    let rep = saddle_gram(FunctionalKind::H4, &base, &pair, &q).unwrap();
    assert_eq!(rep.gram[0][1], 0.0);
    assert_eq!(rep.definiteness, 0);
    let overlapping = [pair[0], PerturbationFamily::new(FamilyName::P0Plus, [0.0; 7], 0.5, 1.0)];
    assert!(matches!(saddle_gram(FunctionalKind::H4, &base, &overlapping, &q), Err(Error::Packing(_))));
}

#[test]
fn saddle_gram_diagonal_matches_second_variation() {
    let base = FormField::constant(&psi0_f64());
    let rows = bump_row(FamilyName::P0Plus, 2, 0.5);
    let rep = saddle_gram(FunctionalKind::H4, &base, &rows, &QuadratureSpec::radial_1d(48)).unwrap();
    let v = make_family(&rows[1]).unwrap().d_alpha;
    let d2 = second_variation(FunctionalKind::H4, &Domain7::Ball { center: rows[1].center, radius: 0.5 }, &base, &v, &v, &QuadratureSpec::radial_1d(48)).unwrap();
    assert!((rep.gram[1][1] - d2.value).abs() <= 1e-10 * d2.value.abs());
}
