use g2hitchin::exterior::{dim, ConstForm, FormField, MultiIndex, Structured};
use g2hitchin::exterior::{BumpProfile, RadialProfile};
use g2hitchin::g2structure::models::*;
use g2hitchin::g2structure::{classify_and_metric_3, G2Structure};
use g2hitchin::scalar::{ratio, Rational};
use g2hitchin::typedecomp::*;
use g2hitchin::Error;
use proptest::prelude::*;
use std::sync::OnceLock;

fn compact() -> &'static Projections<f64> {
    static P: OnceLock<Projections<f64>> = OnceLock::new();
    P.get_or_init(|| Projections::new(&classify_and_metric_3(&phi0_f64()).unwrap()))
}

fn split() -> &'static Projections<f64> {
    static P: OnceLock<Projections<f64>> = OnceLock::new();
    P.get_or_init(|| Projections::new(&classify_and_metric_3(&phi_tilde0_f64()).unwrap()))
}

fn compact_exact() -> &'static Projections<Rational> {
    static P: OnceLock<Projections<Rational>> = OnceLock::new();
    P.get_or_init(|| Projections::new(&classify_and_metric_3(&phi0()).unwrap()))
}

fn split_exact() -> &'static Projections<Rational> {
    static P: OnceLock<Projections<Rational>> = OnceLock::new();
    P.get_or_init(|| Projections::new(&classify_and_metric_3(&phi_tilde0()).unwrap()))
}

fn ranks<T: g2hitchin::scalar::Scalar>(p: &Projections<T>, grade: usize) -> Vec<usize> {
    labels(grade).iter().map(|&l| p.matrix(grade, l).unwrap().rank()).collect()
}

#[test]
fn projection_ranks_match_module_dimensions() {
    let expected = [(2, vec![7, 14]), (3, vec![1, 7, 27]), (4, vec![1, 7, 27]), (5, vec![7, 14])];
    for (grade, e) in &expected {
        assert_eq!(ranks(compact_exact(), *grade), *e);
        assert_eq!(ranks(split_exact(), *grade), *e);
        assert_eq!(ranks(compact(), *grade), *e);
        assert_eq!(ranks(split(), *grade), *e);
    }
}

#[test]
fn projection_of_dx123_onto_the_trivial_summand() {
    let s = compact_exact().structure();
    let a = ConstForm::<Rational>::basis(MultiIndex::of(&[1, 2, 3]));
    let c = compact_exact().project(1, &a).unwrap();
    // Orthogonal projection onto span(φ0) computed directly from the pairing.
    let phi = phi0();
    let coefficient = s.pairing(&a, &phi) / s.pairing(&phi, &phi);
    assert_eq!(coefficient, ratio(1, 7));
    assert_eq!(c.form, phi.scale(&coefficient));
}

#[test]
fn derivative_of_radial_multiple_of_phi0_is_pure_type_7() {
    let bump = RadialProfile::Bump { bump: BumpProfile::new(1.0), order: 0 };
    let alpha = Structured::constant(&phi0_f64()).times_profile(bump, &[0.0; 7]).unwrap();
    let d_alpha = FormField::from_structured(alpha).d().unwrap();
    let x = [0.31, -0.12, 0.2, 0.05, -0.27, 0.14, 0.09];
    let v = d_alpha.eval(&x);
    assert!(v.max_abs() > 1e-3);
    let parts = compact().decompose(&v).unwrap();
    assert!(parts[0].form.max_abs() < 1e-13);
    assert!(parts[1].form.sub(&v).max_abs() < 1e-13);
    assert!(parts[2].form.max_abs() < 1e-13);
}

#[test]
fn characterizations_certify_model_elements() {
    let s = classify_and_metric_3(&phi0()).unwrap();
    let e1 = phi0().interior_axis(1).unwrap();
    let cert = characterize(&s, &TypeComponent { grade: 2, label: 7, form: e1 }, 1e-10);
    assert!(cert.passed);
    let cert = characterize(&s, &TypeComponent { grade: 3, label: 1, form: phi0() }, 1e-10);
    assert!(cert.passed);
    assert_eq!(cert.description, "R·φ");
    let cert = characterize(&s, &TypeComponent { grade: 4, label: 1, form: psi0() }, 1e-10);
    assert!(cert.passed);
}

#[test]
fn characterization_reports_failed_conditions() {
    let s = classify_and_metric_3(&phi0()).unwrap();
    let alpha = ConstForm::<Rational>::from_terms(2, &[(ratio(1, 1), &[1, 2]), (ratio(-1, 1), &[4, 7])]);
    // Direct expansion: dx12∧ψ0 = dx124567 and dx47∧ψ0 = -dx123467 + ... give a nonzero 6-form.
    let wedge = alpha.wedge(&psi0());
    assert!(!wedge.is_zero());
    let cert = characterize(&s, &TypeComponent { grade: 2, label: 14, form: alpha.clone() }, 1e-10);
    assert!(!cert.passed);
    assert_eq!(cert.conditions.len(), 1);
    assert_eq!(cert.conditions[0].residual, wedge.max_abs());
    let cert = characterize(&s, &TypeComponent { grade: 2, label: 7, form: alpha }, 1e-10);
    assert!(!cert.passed);
    assert!(cert.conditions[0].residual > 0.0);
}

#[test]
fn components_are_certified_exactly() {
    let s = compact_exact().structure().clone();
    let a = ConstForm::<Rational>::from_terms(3, &[(ratio(2, 1), &[1, 2, 3]), (ratio(-1, 3), &[1, 4, 7]), (ratio(5, 1), &[2, 5, 6])]);
    for c in compact_exact().decompose(&a).unwrap() {
        assert!(characterize(&s, &c, 0.0).passed, "label {}", c.label);
    }
    let b = s.star(&a);
    for c in compact_exact().decompose(&b).unwrap() {
        assert!(characterize(&s, &c, 0.0).passed, "label {}", c.label);
    }
}

#[test]
fn completeness_is_exact_in_rational_mode() {
    for (proj, grade) in [(compact_exact(), 2), (compact_exact(), 3), (split_exact(), 4), (split_exact(), 5)] {
        let coeffs = (0..dim(grade)).map(|k| ratio((k as i64 * 7 + 3) % 11 - 5, 1 + (k as i64 % 4))).collect();
        let a = ConstForm::<Rational>::from_coeffs(grade, coeffs);
        let mut sum = ConstForm::zero(grade);
        for c in proj.decompose(&a).unwrap() {
            sum = sum.add(&c.form);
        }
        assert_eq!(sum, a);
    }
}

#[test]
fn invalid_labels_are_rejected() {
    let s: G2Structure<f64> = compact().structure().clone();
    let a = ConstForm::<f64>::basis(MultiIndex::of(&[1, 2]));
    assert_eq!(project(&s, 27, &a), Err(Error::InvalidLabel { grade: 2, label: 27 }));
    let b = ConstForm::<f64>::basis(MultiIndex::of(&[1]));
    assert!(matches!(project(&s, 7, &b), Err(Error::InvalidLabel { .. })));
}

fn random_form(grade: usize) -> impl Strategy<Value = ConstForm<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim(grade)).prop_map(move |c| ConstForm::from_coeffs(grade, c))
}

fn any_grade_form() -> impl Strategy<Value = ConstForm<f64>> {
    (2usize..=5).prop_flat_map(random_form)
}

fn projections(split_case: bool) -> &'static Projections<f64> {
    if split_case {
        split()
    } else {
        compact()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projections_are_idempotent(a in any_grade_form(), split_case in any::<bool>()) {
        let p = projections(split_case);
        for &l in labels(a.grade()) {
            let once = p.project(l, &a).unwrap().form;
            let twice = p.project(l, &once).unwrap().form;
            prop_assert!(twice.sub(&once).max_abs() < 1e-12);
        }
    }

    #[test]
    fn projections_sum_to_identity(a in any_grade_form(), split_case in any::<bool>()) {
        let p = projections(split_case);
        let mut sum = ConstForm::zero(a.grade());
        for c in p.decompose(&a).unwrap() {
            sum = sum.add(&c.form);
        }
        prop_assert!(sum.sub(&a).max_abs() < 1e-12);
    }

    #[test]
    fn components_are_orthogonal_and_self_adjoint(a in any_grade_form(), b in any_grade_form(), split_case in any::<bool>()) {
        prop_assume!(a.grade() == b.grade());
        let p = projections(split_case);
        let s = p.structure();
        let ca = p.decompose(&a).unwrap();
        let cb = p.decompose(&b).unwrap();
        for (i, x) in ca.iter().enumerate() {
            for (j, y) in cb.iter().enumerate() {
                if i != j {
                    prop_assert!(s.pairing(&x.form, &y.form).abs() < 1e-12);
                }
            }
            let lhs = s.pairing(&x.form, &b);
            let rhs = s.pairing(&a, &cb[i].form);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn star_intertwines_projections(a in any_grade_form(), split_case in any::<bool>()) {
        let p = projections(split_case);
        let s = p.structure();
        for &l in labels(a.grade()) {
            let lhs = s.star(&p.project(l, &a).unwrap().form);
            let rhs = p.project(l, &s.star(&a)).unwrap().form;
            prop_assert!(lhs.sub(&rhs).max_abs() < 1e-12);
        }
    }

    #[test]
    fn components_satisfy_their_characterization(a in any_grade_form(), split_case in any::<bool>()) {
        let p = projections(split_case);
        for c in p.decompose(&a).unwrap() {
            let cert = characterize(p.structure(), &c, 1e-10);
            prop_assert!(cert.passed, "{:?}", cert);
        }
    }
}
