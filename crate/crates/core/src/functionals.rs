//! Volume functionals of 3-forms and 4-forms and their first and second variations.
//!
//! With v the volume density of the pointwise structure and ⟨,⟩ its metric pairing,
//! Dv(σ) = (1/3)⟨σ, φ⟩v and D²v(σ₁, σ₂) = (1/3)⟨σ₁, I σ₂⟩v on 3-forms, and
//! Dv(σ) = (1/4)⟨σ, ψ⟩v and D²v(σ₁, σ₂) = (1/4)⟨σ₁, J σ₂⟩v on 4-forms.

use crate::error::{Error, Result};
use crate::exterior::{dim, Ball, ConstForm, FormField, RadialProfile, Structured, Vector7};
use crate::g2structure::{classify_and_metric_3, structure_from_4form_closed, voldensity_3, voldensity_4, G2Structure, Orbit};
use crate::linalg::Dense;
use crate::quadrature::{
    ball_rule, mean_estimate, moment_reduction, pairwise_sum, sample_point, sample_stream, Domain7, Estimate, Integrand, Method,
    QuadratureSpec, ScalarTerm, StructuredIntegrand,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Radial nodes per segment used when moment reduction has to fall back to a product rule.
pub const DEFAULT_RADIAL_NODES: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Compact,
    Split,
}

impl Flavor {
    pub fn orbit(self) -> Orbit {
        match self {
            Flavor::Compact => Orbit::CompactG2,
            Flavor::Split => Orbit::SplitG2,
        }
    }
}

/// One of the four volume functionals: grade 3 or 4, compact or split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionalKind {
    pub grade: usize,
    pub flavor: Flavor,
}

impl FunctionalKind {
    pub const H3: FunctionalKind = FunctionalKind { grade: 3, flavor: Flavor::Compact };
    pub const H4: FunctionalKind = FunctionalKind { grade: 4, flavor: Flavor::Compact };
    pub const H3_SPLIT: FunctionalKind = FunctionalKind { grade: 3, flavor: Flavor::Split };
    pub const H4_SPLIT: FunctionalKind = FunctionalKind { grade: 4, flavor: Flavor::Split };

    pub fn validate(&self) -> Result<()> {
        if self.grade == 3 || self.grade == 4 {
            Ok(())
        } else {
            Err(Error::Grade(format!("volume functionals act on 3-forms or 4-forms, not degree {}", self.grade)))
        }
    }

    /// 1/3 for 3-forms, 1/4 for 4-forms.
    pub fn prefactor(&self) -> f64 {
        1.0 / self.grade as f64
    }

    pub fn operator(&self) -> VariationOperator {
        VariationOperator::for_grade(self.grade)
    }

    pub fn name(&self) -> &'static str {
        match (self.grade, self.flavor) {
            (3, Flavor::Compact) => "H3",
            (4, Flavor::Compact) => "H4",
            (3, Flavor::Split) => "H3-split",
            _ => "H4-split",
        }
    }
}

/// Coefficients applied to (π1, π7, π27).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationOperator {
    pub c1: f64,
    pub c7: f64,
    pub c27: f64,
}

impl VariationOperator {
    pub fn for_grade(grade: usize) -> Self {
        match grade {
            3 => VariationOperator { c1: 4.0 / 3.0, c7: 1.0, c27: -1.0 },
            _ => VariationOperator { c1: 3.0 / 4.0, c7: 1.0, c27: -1.0 },
        }
    }
}

/// Volume density of a form in the orbit required by `kind`.
pub fn voldensity(kind: FunctionalKind, form: &ConstForm<f64>) -> Result<f64> {
    if form.grade() != kind.grade {
        return Err(Error::Grade(format!("{} needs a {}-form, got degree {}", kind.name(), kind.grade, form.grade())));
    }
    let (v, sig) = if kind.grade == 4 {
        voldensity_4(form)
    } else {
        let (v, sign, (p, n, z)) = voldensity_3(form);
        (v, if sign < 0 { (n, p, z) } else { (p, n, z) })
    };
    let orbit = Orbit::from_signature(sig);
    if orbit != kind.flavor.orbit() {
        return Err(Error::Unstable(format!("induced signature {:?} is not that of the {:?} orbit", sig, kind.flavor)));
    }
    Ok(v)
}

fn at_point(kind: FunctionalKind, form: &ConstForm<f64>, x: &Vector7) -> Result<f64> {
    voldensity(kind, form).map_err(|e| Error::OrbitViolation { point: *x, detail: e.to_string() })
}

/// Pointwise structure of a form of the right grade and orbit.
pub fn pointwise_structure(kind: FunctionalKind, form: &ConstForm<f64>) -> Result<G2Structure<f64>> {
    kind.validate()?;
    let s = if kind.grade == 3 { classify_and_metric_3(form)? } else { structure_from_4form_closed(form)? };
    if s.orbit != kind.flavor.orbit() {
        return Err(Error::Unstable(format!("form lies in the {:?} orbit", s.orbit)));
    }
    Ok(s)
}

/// Quadratic form of the pointwise second variation and vector of the first variation at one point.
#[derive(Clone, Debug)]
pub struct PointwiseVariation {
    pub voldensity: f64,
    /// M with D²v(σ₁, σ₂) = σ₁ᵀ M σ₂ in coefficient coordinates.
    pub hessian: Dense<f64>,
    /// w with Dv(σ) = w·σ.
    pub gradient: Vec<f64>,
}

/// Pointwise variations of the volume density at a form. The type projections are computed as
/// orthogonal projections onto R·(the form) and onto the 7-dimensional summand spanned by
/// e^i ∧ φ (4-forms) or e_i ⌟ ψ (3-forms), using the metric of the form.
pub fn pointwise_variation(kind: FunctionalKind, form: &ConstForm<f64>) -> Result<PointwiseVariation> {
    let s = pointwise_structure(kind, form)?;
    let p = kind.grade;
    let n = dim(p);
    let g = s.metric.pairing_matrix(p);
    let base = if p == 4 { &s.fourform } else { &s.threeform };
    let seven: Vec<ConstForm<f64>> = (1..=7)
        .map(|i| {
            let e: Vector7 = std::array::from_fn(|k| if k + 1 == i { 1.0 } else { 0.0 });
            if p == 4 {
                ConstForm::from_coeffs(1, e.to_vec()).wedge(&s.threeform)
            } else {
                s.fourform.interior(&e).expect("grade 4")
            }
        })
        .collect();
    let gb = g.mul_vec(base.coeffs());
    let bb: f64 = base.coeffs().iter().zip(&gb).map(|(a, b)| a * b).sum();
    let gu: Vec<Vec<f64>> = seven.iter().map(|u| g.mul_vec(u.coeffs())).collect();
    let gram: Dense<f64> = Dense::from_fn(7, 7, |i, j| seven[i].coeffs().iter().zip(&gu[j]).map(|(a, b)| a * b).sum::<f64>());
    let gram_inv = gram.inverse().ok_or(Error::DegenerateMetric)?;
    let op = kind.operator();
    let v = *s.voldensity();
    let c = kind.prefactor() * v;
    // P7 = (GU) Gram⁻¹ (GU)ᵀ.
    let gu_inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..7).map(|b| (0..7).map(|a| gu[a][i] * *gram_inv.get(a, b)).sum()).collect())
        .collect();
    let hessian = Dense::from_fn(n, n, |i, j| {
        let p7: f64 = (0..7).map(|b| gu_inv[i][b] * gu[b][j]).sum();
        let p1 = gb[i] * gb[j] / bb;
        c * ((op.c1 - op.c27) * p1 + (op.c7 - op.c27) * p7 + op.c27 * g.get(i, j))
    });
    let gradient = gb.iter().map(|x| c * x).collect();
    Ok(PointwiseVariation { voldensity: v, hessian, gradient })
}

fn quad_form(m: &Dense<f64>, a: &ConstForm<f64>, b: &ConstForm<f64>) -> f64 {
    let mb = m.mul_vec(b.coeffs());
    a.coeffs().iter().zip(&mb).map(|(x, y)| x * y).sum()
}

/// Constant part of a structured field, if the remaining terms are all compactly supported.
fn split_constant(s: &Structured) -> (ConstForm<f64>, Structured, bool) {
    let mut c = ConstForm::zero(s.grade);
    let mut rest = Vec::new();
    let mut supported = true;
    for t in &s.terms {
        if t.profile == RadialProfile::One && t.degree() == 0 {
            c.add_to(t.index, t.coeff);
        } else {
            if t.profile.support().is_none() {
                supported = false;
            }
            rest.push(t.clone());
        }
    }
    (c, Structured::new(s.grade, rest), supported)
}

/// Supports of the terms grouped by center, with their radial breakpoints.
fn support_groups(s: &Structured) -> Vec<(Ball, Vec<f64>)> {
    let mut groups: Vec<(Ball, Vec<f64>)> = Vec::new();
    for t in &s.terms {
        let r = t.profile.support().expect("compactly supported");
        match groups.iter_mut().find(|(b, _)| b.center == t.center) {
            Some((b, breaks)) => {
                b.radius = b.radius.max(r);
                breaks.extend(t.profile.breakpoints());
            }
            None => groups.push((Ball::new(t.center, r), t.profile.breakpoints())),
        }
    }
    for (_, breaks) in &mut groups {
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    groups
}

fn radial_nodes(q: &QuadratureSpec) -> usize {
    match q.method {
        Method::Radial1d { nodes } => nodes,
        _ => DEFAULT_RADIAL_NODES,
    }
}

/// Product rule covering the support of a field, or the domain ball when the support is unknown.
pub fn rule_for_field(domain: &Domain7, field: &FormField, nodes: usize) -> Result<Vec<(Vector7, f64)>> {
    if let Some(b) = field.support() {
        if !domain.contains_ball(&b) {
            return Err(Error::Support(format!("support ball {:?} of radius {} leaves the domain", b.center, b.radius)));
        }
        let breaks = match field.structured() {
            Some(s) => {
                let groups = support_groups(&split_constant(s).1);
                if groups.len() == 1 && groups[0].0.center == b.center {
                    groups[0].1.clone()
                } else {
                    vec![]
                }
            }
            None => vec![],
        };
        return Ok(ball_rule(&b, &breaks, nodes));
    }
    match domain {
        Domain7::Ball { center, radius } => Ok(ball_rule(&Ball::new(*center, *radius), &[], nodes)),
        _ => Err(Error::Quadrature("a field without support data can only be integrated over a ball".into())),
    }
}

fn check_rule(kind: FunctionalKind, field: &FormField, rule: &[(Vector7, f64)]) -> Result<Vec<f64>> {
    rule.par_iter().map(|(x, _)| at_point(kind, &field.eval(x), x)).collect()
}

/// ∫ v(F) over a node rule, with an orbit check at every node.
pub fn voldensity_on_rule(kind: FunctionalKind, field: &FormField, rule: &[(Vector7, f64)]) -> Result<Estimate> {
    let v = check_rule(kind, field, rule)?;
    let w: Vec<f64> = rule.iter().zip(&v).map(|((_, w), v)| w * v).collect();
    Ok(Estimate { value: pairwise_sum(&w), error: 0.0, evaluations: rule.len() })
}

/// H(F) = ∫_D v(F).
pub fn evaluate(kind: FunctionalKind, domain: &Domain7, field: &FormField, q: &QuadratureSpec) -> Result<Estimate> {
    kind.validate()?;
    domain.validate()?;
    q.validate()?;
    if field.grade() != kind.grade {
        return Err(Error::Grade(format!("{} needs a {}-form field", kind.name(), kind.grade)));
    }
    match &q.method {
        Method::MonteCarlo { .. } => monte_carlo_fallible(domain, q, |x| at_point(kind, &field.eval(x), x)),
        Method::Trapezoid { .. } => {
            let f = field.clone();
            let values = std::sync::Arc::new(std::sync::Mutex::new(None::<Error>));
            let sink = values.clone();
            let integrand = Integrand::from_fn(move |x| match at_point(kind, &f.eval(x), x) {
                Ok(v) => v,
                Err(e) => {
                    sink.lock().expect("lock").get_or_insert(e);
                    f64::NAN
                }
            });
            let est = crate::quadrature::integrate(domain, &integrand, q)?;
            if let Some(e) = values.lock().expect("lock").take() {
                return Err(e);
            }
            Ok(est)
        }
        Method::MomentReduction | Method::Radial1d { .. } => evaluate_split(kind, domain, field, q),
    }
}

/// Background ∫_D v(c) for the constant part plus ∫_B (v(F) − v(c)) over each perturbation ball.
fn evaluate_split(kind: FunctionalKind, domain: &Domain7, field: &FormField, q: &QuadratureSpec) -> Result<Estimate> {
    let nodes = radial_nodes(q);
    if let Some(s) = field.structured() {
        let (c, rest, supported) = split_constant(s);
        if supported {
            let probe = match domain {
                Domain7::Ball { center, .. } => *center,
                _ => [0.0; 7],
            };
            let v0 = at_point(kind, &c, &probe)?;
            let background = v0 * domain.volume();
            if rest.terms.is_empty() {
                return Ok(Estimate { value: background, error: 0.0, evaluations: 1 });
            }
            let groups = support_groups(&rest);
            for (i, (a, _)) in groups.iter().enumerate() {
                if !domain.contains_ball(a) {
                    return Err(Error::Support(format!("perturbation ball at {:?} leaves the domain", a.center)));
                }
                if groups[..i].iter().any(|(b, _)| !a.is_disjoint(b)) {
                    return evaluate_whole_ball(kind, domain, field, nodes);
                }
            }
            let mut total = vec![background];
            let mut evaluations = 1;
            for (ball, breaks) in &groups {
                let rule = ball_rule(ball, breaks, nodes);
                let v = check_rule(kind, field, &rule)?;
                let w: Vec<f64> = rule.iter().zip(&v).map(|((_, w), v)| w * (v - v0)).collect();
                total.push(pairwise_sum(&w));
                evaluations += rule.len();
            }
            return Ok(Estimate { value: total.iter().sum(), error: 0.0, evaluations });
        }
    }
    evaluate_whole_ball(kind, domain, field, nodes)
}

fn evaluate_whole_ball(kind: FunctionalKind, domain: &Domain7, field: &FormField, nodes: usize) -> Result<Estimate> {
    match domain {
        Domain7::Ball { center, radius } => {
            voldensity_on_rule(kind, field, &ball_rule(&Ball::new(*center, *radius), &[], nodes))
        }
        _ => Err(Error::Quadrature(
            "this field needs a ball domain or disjoint compactly supported perturbations of a constant form".into(),
        )),
    }
}

fn check_variation(domain: &Domain7, v: &FormField) -> Result<()> {
    match v.support() {
        Some(b) if domain.contains_ball(&b) => Ok(()),
        Some(b) => Err(Error::Support(format!("variation supported in the ball at {:?} of radius {} leaves the domain", b.center, b.radius))),
        None => Err(Error::Support("variation has no declared compact support".into())),
    }
}

/// Constant base form of a field, if it has one.
fn constant_base(field: &FormField) -> Option<ConstForm<f64>> {
    let s = field.structured()?;
    let (c, rest, _) = split_constant(s);
    rest.terms.is_empty().then_some(c)
}

/// Product of two structured forms through a bilinear matrix, as a scalar integrand.
pub fn bilinear_integrand(m: &Dense<f64>, a: &Structured, b: &Structured) -> Result<StructuredIntegrand> {
    let mut terms = Vec::new();
    for ta in &a.terms {
        for tb in &b.terms {
            let mij = *m.get(ta.index.position(), tb.index.position());
            if mij == 0.0 {
                continue;
            }
            if ta.center != tb.center {
                let disjoint = match (ta.profile.support(), tb.profile.support()) {
                    (Some(ra), Some(rb)) => Ball::new(ta.center, ra).is_disjoint(&Ball::new(tb.center, rb)),
                    _ => false,
                };
                if disjoint {
                    continue;
                }
                return Err(Error::Quadrature("overlapping terms about different centers are not radial".into()));
            }
            let profiles = [ta.profile, tb.profile].into_iter().filter(|p| *p != RadialProfile::One).collect();
            let exps = std::array::from_fn(|i| ta.exps[i] + tb.exps[i]);
            terms.push(ScalarTerm { coeff: ta.coeff * tb.coeff * mij, profiles, center: ta.center, exps });
        }
    }
    Ok(StructuredIntegrand { terms })
}

fn linear_integrand(w: &[f64], a: &Structured) -> StructuredIntegrand {
    let terms = a
        .terms
        .iter()
        .filter_map(|t| {
            let wi = w[t.index.position()];
            (wi != 0.0).then(|| ScalarTerm {
                coeff: t.coeff * wi,
                profiles: [t.profile].into_iter().filter(|p| *p != RadialProfile::One).collect(),
                center: t.center,
                exps: t.exps,
            })
        })
        .collect();
    StructuredIntegrand { terms }
}

/// DH(F)(V) = ∫ Dv(V).
pub fn first_variation(kind: FunctionalKind, domain: &Domain7, base: &FormField, v: &FormField, q: &QuadratureSpec) -> Result<Estimate> {
    kind.validate()?;
    check_variation(domain, v)?;
    if let (Method::MomentReduction, Some(c), Some(vs)) = (&q.method, constant_base(base), v.structured()) {
        let pv = pointwise_variation(kind, &c)?;
        return moment_reduction(domain, &linear_integrand(&pv.gradient, vs), q.tolerance);
    }
    let fixed = constant_base(base).map(|c| pointwise_variation(kind, &c)).transpose()?;
    pointwise(domain, v, q, |x| {
        let local;
        let pv = match &fixed {
            Some(pv) => pv,
            None => {
                local = pointwise_variation(kind, &base.eval(x)).map_err(|e| Error::OrbitViolation { point: *x, detail: e.to_string() })?;
                &local
            }
        };
        Ok(pv.gradient.iter().zip(v.eval(x).coeffs()).map(|(a, b)| a * b).sum())
    })
}

/// D²H(F)(V₁, V₂) = ∫ D²v(V₁, V₂).
pub fn second_variation(
    kind: FunctionalKind,
    domain: &Domain7,
    base: &FormField,
    v1: &FormField,
    v2: &FormField,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    kind.validate()?;
    check_variation(domain, v1)?;
    check_variation(domain, v2)?;
    if let (Some(b1), Some(b2)) = (v1.support(), v2.support()) {
        if b1.is_disjoint(&b2) {
            return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
        }
    }
    if let (Method::MomentReduction, Some(c), Some(s1), Some(s2)) = (&q.method, constant_base(base), v1.structured(), v2.structured()) {
        let pv = pointwise_variation(kind, &c)?;
        return moment_reduction(domain, &bilinear_integrand(&pv.hessian, s1, s2)?, q.tolerance);
    }
    let fixed = constant_base(base).map(|c| pointwise_variation(kind, &c)).transpose()?;
    pointwise(domain, smaller_support(v1, v2), q, |x| {
        let local;
        let pv = match &fixed {
            Some(pv) => pv,
            None => {
                local = pointwise_variation(kind, &base.eval(x)).map_err(|e| Error::OrbitViolation { point: *x, detail: e.to_string() })?;
                &local
            }
        };
        Ok(quad_form(&pv.hessian, &v1.eval(x), &v2.eval(x)))
    })
}

fn monte_carlo_fallible(domain: &Domain7, q: &QuadratureSpec, f: impl Fn(&Vector7) -> Result<f64> + Sync) -> Result<Estimate> {
    let Method::MonteCarlo { samples, seed } = q.method else { unreachable!() };
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| f(&sample_point(domain, &mut sample_stream(seed, i))))
        .collect::<Result<_>>()?;
    Ok(mean_estimate(&values, domain.volume()))
}

/// The variation with the smaller support ball; the choice does not depend on the argument order.
fn smaller_support<'a>(v1: &'a FormField, v2: &'a FormField) -> &'a FormField {
    match (v1.support(), v2.support()) {
        (Some(a), Some(b)) => {
            let key = |x: &Ball| (x.radius, x.center);
            if key(&b).partial_cmp(&key(&a)) == Some(std::cmp::Ordering::Less) {
                v2
            } else {
                v1
            }
        }
        _ => v1,
    }
}

/// Integrate a pointwise quantity over the support of `v` with the configured numerical method.
fn pointwise(domain: &Domain7, v: &FormField, q: &QuadratureSpec, f: impl Fn(&Vector7) -> Result<f64> + Sync) -> Result<Estimate> {
    match &q.method {
        Method::MonteCarlo { .. } => monte_carlo_fallible(domain, q, f),
        _ => {
            let rule = rule_for_field(domain, v, radial_nodes(q))?;
            let values: Vec<f64> = rule.par_iter().map(|(x, w)| f(x).map(|y| w * y)).collect::<Result<_>>()?;
            Ok(Estimate { value: pairwise_sum(&values), error: 0.0, evaluations: rule.len() })
        }
    }
}

/// Second central difference [H(F + tV) − 2H(F) + H(F − tV)]/t², evaluated node by node on the
/// product rule over the support of V; polarised for V₁ ≠ V₂.
pub fn second_variation_fd(
    kind: FunctionalKind,
    domain: &Domain7,
    base: &FormField,
    v1: &FormField,
    v2: &FormField,
    t: f64,
    nodes: usize,
) -> Result<Estimate> {
    check_variation(domain, v1)?;
    check_variation(domain, v2)?;
    let fixed = constant_base(base).map(|c| voldensity(kind, &c)).transpose()?;
    let diag = |v: &FormField| -> Result<Estimate> {
        let rule = rule_for_field(domain, v, nodes)?;
        let values: Vec<f64> = rule
            .par_iter()
            .map(|(x, w)| {
                let b = base.eval(x);
                let s = v.eval(x);
                let plus = at_point(kind, &b.axpy(&t, &s), x)?;
                let mid = match fixed {
                    Some(v) => v,
                    None => at_point(kind, &b, x)?,
                };
                let minus = at_point(kind, &b.axpy(&-t, &s), x)?;
                Ok(w * (plus - 2.0 * mid + minus) / (t * t))
            })
            .collect::<Result<_>>()?;
        Ok(Estimate { value: pairwise_sum(&values), error: 0.0, evaluations: 3 * rule.len() })
    };
    if std::ptr::eq(v1, v2) {
        return diag(v1);
    }
    if let (Some(b1), Some(b2)) = (v1.support(), v2.support()) {
        if b1.is_disjoint(&b2) {
            return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
        }
    }
    let plus = diag(&v1.add(v2))?;
    let minus = diag(&v1.sub(v2))?;
    Ok(Estimate { value: 0.25 * (plus.value - minus.value), error: 0.0, evaluations: plus.evaluations + minus.evaluations })
}

/// Central difference [H(F + tV) − H(F − tV)]/2t, node by node over the support of V.
pub fn first_variation_fd(kind: FunctionalKind, domain: &Domain7, base: &FormField, v: &FormField, t: f64, nodes: usize) -> Result<Estimate> {
    check_variation(domain, v)?;
    let rule = rule_for_field(domain, v, nodes)?;
    let values: Vec<f64> = rule
        .par_iter()
        .map(|(x, w)| {
            let b = base.eval(x);
            let s = v.eval(x);
            let plus = at_point(kind, &b.axpy(&t, &s), x)?;
            let minus = at_point(kind, &b.axpy(&-t, &s), x)?;
            Ok(w * (plus - minus) / (2.0 * t))
        })
        .collect::<Result<_>>()?;
    Ok(Estimate { value: pairwise_sum(&values), error: 0.0, evaluations: 2 * rule.len() })
}

/// ∫ (v(F + tV) − v(F)) over the support of V: the change H(F + tV) − H(F).
pub fn functional_change(kind: FunctionalKind, domain: &Domain7, base: &FormField, v: &FormField, t: f64, nodes: usize) -> Result<f64> {
    check_variation(domain, v)?;
    let fixed = constant_base(base).map(|c| voldensity(kind, &c)).transpose()?;
    let rule = rule_for_field(domain, v, nodes)?;
    let values: Vec<f64> = rule
        .par_iter()
        .map(|(x, w)| {
            let b = base.eval(x);
            let moved = at_point(kind, &b.axpy(&t, &v.eval(x)), x)?;
            let here = match fixed {
                Some(v) => v,
                None => at_point(kind, &b, x)?,
            };
            Ok(w * (moved - here))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&values))
}

/// Apply a node rule to a fallible pointwise function.
pub fn integrate_rule(rule: &[(Vector7, f64)], f: impl Fn(&Vector7) -> Result<f64> + Sync) -> Result<Estimate> {
    let values: Vec<f64> = rule.par_iter().map(|(x, w)| f(x).map(|y| w * y)).collect::<Result<_>>()?;
    Ok(Estimate { value: pairwise_sum(&values), error: 0.0, evaluations: rule.len() })
}
