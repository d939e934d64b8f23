//! Bump perturbations of the model forms, rescaling, Poincaré primitives, gluing, the
//! unboundedness iteration and saddle Gram matrices.

use crate::error::{Error, Result};
use crate::exterior::{BumpProfile, ConstForm, FormField, MultiIndex, RadialProfile, Structured, Term, Vector7};
use crate::exterior::{field::dist, Ball};
use crate::functionals::{
    functional_change, pointwise_structure, second_variation, voldensity, FunctionalKind, DEFAULT_RADIAL_NODES,
};
use crate::g2structure::models::{phi0_f64, phi_tilde0_f64, psi0_f64, psi_tilde0_f64};
use crate::linalg::linear_fit;
use crate::quadrature::{ball_rule, segment_rule, sphere_rule, Domain7, QuadratureSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The seven named bump perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyName {
    #[serde(rename = "P0+")]
    P0Plus,
    #[serde(rename = "P0-")]
    P0Minus,
    #[serde(rename = "SG3+")]
    Sg3Plus,
    #[serde(rename = "SG3-")]
    Sg3Minus,
    #[serde(rename = "SG4+")]
    Sg4Plus,
    #[serde(rename = "SG4-")]
    Sg4Minus,
    #[serde(rename = "CH-")]
    ChMinus,
}

impl FamilyName {
    pub const ALL: [FamilyName; 7] = [
        FamilyName::P0Plus,
        FamilyName::P0Minus,
        FamilyName::Sg3Plus,
        FamilyName::Sg3Minus,
        FamilyName::Sg4Plus,
        FamilyName::Sg4Minus,
        FamilyName::ChMinus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::P0Plus => "P0+",
            FamilyName::P0Minus => "P0-",
            FamilyName::Sg3Plus => "SG3+",
            FamilyName::Sg3Minus => "SG3-",
            FamilyName::Sg4Plus => "SG4+",
            FamilyName::Sg4Minus => "SG4-",
            FamilyName::ChMinus => "CH-",
        }
    }

    /// Functional whose second variation the family probes.
    pub fn kind(self) -> FunctionalKind {
        match self {
            FamilyName::P0Plus | FamilyName::P0Minus => FunctionalKind::H4,
            FamilyName::Sg3Plus | FamilyName::Sg3Minus => FunctionalKind::H3_SPLIT,
            FamilyName::Sg4Plus | FamilyName::Sg4Minus => FunctionalKind::H4_SPLIT,
            FamilyName::ChMinus => FunctionalKind::H3,
        }
    }

    /// Expected sign of the second variation at the model base.
    pub fn sign(self) -> i32 {
        match self {
            FamilyName::P0Plus | FamilyName::Sg3Plus | FamilyName::Sg4Plus => 1,
            _ => -1,
        }
    }

    /// The standard torsion-free base form of the family.
    pub fn base_form(self) -> ConstForm<f64> {
        match self {
            FamilyName::P0Plus | FamilyName::P0Minus => psi0_f64(),
            FamilyName::Sg3Plus | FamilyName::Sg3Minus => phi_tilde0_f64(),
            FamilyName::Sg4Plus | FamilyName::Sg4Minus => psi_tilde0_f64(),
            FamilyName::ChMinus => phi0_f64(),
        }
    }

    /// Constant form c with potential α = f(r)·c.
    pub fn potential_form(self) -> ConstForm<f64> {
        let dx = |axes: &[usize]| ConstForm::basis(MultiIndex::of(axes));
        match self {
            FamilyName::P0Plus => phi0_f64(),
            FamilyName::P0Minus | FamilyName::Sg4Plus => dx(&[1, 2, 3]),
            FamilyName::Sg3Plus | FamilyName::ChMinus => dx(&[1, 2]),
            FamilyName::Sg3Minus => dx(&[1, 4]),
            FamilyName::Sg4Minus => dx(&[1, 2, 4]),
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace("PLUS", "+").replace("MINUS", "-");
        FamilyName::ALL
            .into_iter()
            .find(|f| f.as_str() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown perturbation family '{s}' (expected one of P0+, P0-, SG3+, SG3-, SG4+, SG4-, CH-)")))
    }
}

/// One bump perturbation: family, center, radius η and amplitude t.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFamily {
    pub name: FamilyName,
    pub center: Vector7,
    pub eta: f64,
    pub amplitude: f64,
    /// Plateau fractions (a, b) of the bump.
    pub plateau: (f64, f64),
}

impl PerturbationFamily {
    pub fn new(name: FamilyName, center: Vector7, eta: f64, amplitude: f64) -> Self {
        PerturbationFamily { name, center, eta, amplitude, plateau: (BumpProfile::DEFAULT_A, BumpProfile::DEFAULT_B) }
    }

    /// Unit-amplitude family on the unit ball at the origin.
    pub fn unit(name: FamilyName) -> Self {
        Self::new(name, [0.0; 7], 1.0, 1.0)
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        PerturbationFamily { amplitude, ..self }
    }

    pub fn bump(&self) -> BumpProfile {
        BumpProfile::with_plateau(self.plateau.0, self.plateau.1, self.eta)
    }

    pub fn ball(&self) -> Ball {
        Ball::new(self.center, self.eta)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.plateau;
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Invalid(format!("bump radius must be positive, got {}", self.eta)));
        }
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(Error::Invalid(format!("plateau fractions must satisfy 0 < a < b < 1, got ({a}, {b})")));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Invalid("amplitude must be finite".into()));
        }
        Ok(())
    }
}

/// Potential α = t·f(|x − c|)·form and its exterior derivative.
#[derive(Clone, Debug)]
pub struct FamilyFields {
    pub alpha: FormField,
    pub d_alpha: FormField,
}

pub fn make_family(p: &PerturbationFamily) -> Result<FamilyFields> {
    p.validate()?;
    let profile = RadialProfile::Bump { bump: p.bump(), order: 0 };
    let alpha = Structured::constant(&p.name.potential_form())
        .times_profile(profile, &p.center)
        .expect("constant form")
        .scale(p.amplitude);
    let d_alpha = alpha.d();
    Ok(FamilyFields { alpha: FormField::from_structured(alpha), d_alpha: FormField::from_structured(d_alpha) })
}

/// Base field plus the perturbation dα of `p`.
pub fn perturbed(base: &FormField, p: &PerturbationFamily) -> Result<FormField> {
    Ok(base.add(&make_family(p)?.d_alpha))
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeTrial {
    pub t: f64,
    /// H(base + t dα) − H(base), or None if the form left the orbit.
    pub change: Option<f64>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeReport {
    pub family: FamilyName,
    pub trials: Vec<AmplitudeTrial>,
    pub best_t: f64,
    pub best_change: f64,
    /// H(base) over the family ball.
    pub ball_functional: f64,
    /// Measured relative change ε̂ = sign · change / H(base on the ball).
    pub eps_hat: f64,
}

/// ∫_{B_η} v(base).
pub fn ball_functional(kind: FunctionalKind, base: &FormField, ball: &Ball, nodes: usize) -> Result<f64> {
    let rule = ball_rule(ball, &[], nodes);
    let values: Vec<f64> = rule
        .par_iter()
        .map(|(x, w)| voldensity(kind, &base.eval(x)).map(|v| w * v).map_err(|e| Error::OrbitViolation { point: *x, detail: e.to_string() }))
        .collect::<Result<_>>()?;
    Ok(crate::quadrature::pairwise_sum(&values))
}

/// Search the amplitude grid for the largest change of H in the family's direction.
pub fn optimize_amplitude(
    kind: FunctionalKind,
    base: &FormField,
    p: &PerturbationFamily,
    t_grid: &[f64],
    nodes: usize,
) -> Result<AmplitudeReport> {
    if t_grid.is_empty() {
        return Err(Error::Invalid("empty amplitude grid".into()));
    }
    let unit = make_family(&p.with_amplitude(1.0))?.d_alpha;
    let domain = Domain7::Ball { center: p.center, radius: p.eta };
    let sign = p.name.sign() as f64;
    let mut trials = Vec::new();
    let mut last_err = None;
    for &t in t_grid {
        match functional_change(kind, &domain, base, &unit, t, nodes) {
            Ok(c) => trials.push(AmplitudeTrial { t, change: Some(c), detail: None }),
            Err(e) => {
                trials.push(AmplitudeTrial { t, change: None, detail: Some(e.to_string()) });
                last_err = Some(e);
            }
        }
    }
    let best = trials
        .iter()
        .filter_map(|tr| tr.change.map(|c| (tr.t, c)))
        .filter(|(_, c)| sign * c > 0.0)
        .max_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)));
    let Some((best_t, best_change)) = best else {
        if trials.iter().all(|tr| tr.change.is_none()) {
            return Err(last_err.expect("at least one trial"));
        }
        return Err(Error::SearchFailed(format!("no amplitude moves {} in the {} direction", kind.name(), if sign > 0.0 { "increasing" } else { "decreasing" })));
    };
    let ball_functional = ball_functional(kind, base, &p.ball(), nodes)?;
    Ok(AmplitudeReport {
        family: p.name,
        trials,
        best_t,
        best_change,
        ball_functional,
        eps_hat: sign * best_change / ball_functional,
    })
}

/// Logarithmic grid of `n` points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TaylorFit {
    pub ts: Vec<f64>,
    pub remainders: Vec<f64>,
    pub first_variation: f64,
    pub second_variation: f64,
    /// Fitted exponent of the remainder against t.
    pub slope: f64,
    pub intercept: f64,
}

/// Fit |H(base + t dα) − H(base) − t DH − (t²/2) D²H| ∝ t^slope.
pub fn taylor_remainder(kind: FunctionalKind, base: &FormField, p: &PerturbationFamily, ts: &[f64], nodes: usize) -> Result<TaylorFit> {
    let v = make_family(&p.with_amplitude(1.0))?.d_alpha;
    let domain = Domain7::Ball { center: p.center, radius: p.eta };
    let q = if base.structured().is_some_and(|s| s.terms.iter().all(|t| t.profile == RadialProfile::One && t.degree() == 0)) {
        QuadratureSpec::moment_reduction()
    } else {
        QuadratureSpec::radial_1d(nodes)
    };
    let d1 = crate::functionals::first_variation(kind, &domain, base, &v, &q)?.value;
    let d2 = second_variation(kind, &domain, base, &v, &v, &q)?.value;
    let mut remainders = Vec::new();
    for &t in ts {
        let change = functional_change(kind, &domain, base, &v, t, nodes)?;
        remainders.push((change - t * d1 - 0.5 * t * t * d2).abs());
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = remainders.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    Ok(TaylorFit { ts: ts.to_vec(), remainders, first_variation: d1, second_variation: d2, slope, intercept })
}

/// η^{−p} μ_η^* F with μ_η(x) = η x.
pub fn rescale(f: &FormField, eta: f64) -> Result<FormField> {
    if !(eta > 0.0) {
        return Err(Error::Invalid(format!("rescaling factor must be positive, got {eta}")));
    }
    if let Some(s) = f.structured() {
        let terms = s
            .terms
            .iter()
            .map(|t| {
                let center = t.center.map(|c| c / eta);
                let (profile, k) = match t.profile {
                    RadialProfile::One => (RadialProfile::One, 0),
                    RadialProfile::Bump { bump, order } => {
                        (RadialProfile::Bump { bump: BumpProfile { eta: bump.eta / eta, ..bump }, order }, order as i32)
                    }
                };
                Term { coeff: t.coeff * eta.powi(t.degree() as i32 - 2 * k), profile, center, ..t.clone() }
            })
            .collect();
        return Ok(FormField::from_structured(Structured::new(s.grade, terms)));
    }
    let g = f.clone();
    let support = f.support().map(|b| Ball::new(b.center.map(|c| c / eta), b.radius / eta));
    let mut out = FormField::from_fn(f.grade(), support, move |x| g.eval(&x.map(|v| eta * v)));
    if let Some(h) = f.fd_step() {
        out = out.with_finite_differences(h / eta);
    }
    Ok(out)
}

/// Result of a relative-change computation on a metric ball of a constant base.
#[derive(Clone, Debug, Serialize)]
pub struct RelativeChange {
    /// Euclidean radius of the metric ball of radius η.
    pub flat_radius: f64,
    pub ball_functional: f64,
    pub change: f64,
    pub relative: f64,
}

/// Relative change (H(ψ + β) − H(ψ))/H(ψ) over the g_ψ-ball B_η(ψ), for a constant base ψ whose
/// metric is a multiple of the Euclidean one, with β = t·α built on that ball.
pub fn relative_change_on_metric_ball(
    kind: FunctionalKind,
    base: &ConstForm<f64>,
    name: FamilyName,
    center: Vector7,
    eta: f64,
    amplitude: f64,
    nodes: usize,
) -> Result<RelativeChange> {
    let s = pointwise_structure(kind, base)?;
    let g = s.metric.matrix();
    let c = *g.get(0, 0);
    let conformal = (0..7).all(|i| (0..7).all(|j| (g.get(i, j) - if i == j { c } else { 0.0 }).abs() <= 1e-12 * c.abs()));
    if !conformal || c <= 0.0 {
        return Err(Error::Invalid("metric balls are implemented for bases with a positive multiple of the Euclidean metric".into()));
    }
    let flat_radius = eta / c.sqrt();
    let p = PerturbationFamily::new(name, center, flat_radius, amplitude);
    let fields = make_family(&p)?;
    let base_field = FormField::constant(base);
    let change = functional_change(kind, &Domain7::Ball { center, radius: flat_radius }, &base_field, &fields.d_alpha, 1.0, nodes)?;
    let ball_functional = *s.voldensity() * crate::quadrature::ball_volume() * flat_radius.powi(7);
    Ok(RelativeChange { flat_radius, ball_functional, change, relative: change / ball_functional })
}

/// Second variation along the unit family at the rescaled base η^{−p} μ_η^* ψ, for each η.
pub fn rescaled_second_variations(base: &FormField, name: FamilyName, etas: &[f64], nodes: usize) -> Result<Vec<(f64, f64)>> {
    let kind = name.kind();
    let v = make_family(&PerturbationFamily::unit(name))?.d_alpha;
    let domain = Domain7::unit_ball();
    etas.iter()
        .map(|&eta| {
            let b = rescale(base, eta)?;
            let d2 = second_variation(kind, &domain, &b, &v, &v, &QuadratureSpec::radial_1d(nodes))?;
            Ok((eta, d2.value))
        })
        .collect()
}

/// Largest η in the grid below which every second variation has the family's sign.
pub fn sign_threshold(values: &[(f64, f64)], sign: i32) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = None;
    for (eta, d2) in sorted {
        if (sign as f64) * d2 > 0.0 {
            best = Some(eta);
        } else {
            break;
        }
    }
    best
}

/// Output of the Poincaré homotopy operator.
#[derive(Clone, Debug, Serialize)]
pub struct PrimitiveReport {
    #[serde(skip)]
    pub primitive: FormField,
    /// Exact polynomial route (true) or numerical quadrature in the homotopy parameter.
    pub exact: bool,
    /// Sampled sup of |dW|, which must vanish.
    pub closedness_residual: f64,
    /// Sampled sup of |dϖ − W|.
    pub residual: f64,
    pub vanishes_at_origin: bool,
    /// The quadratic bound sup_{B_2η}|ϖ| ≤ C₂η² holds on the η grid with fitted exponent ≥ 2 − 0.1.
    pub quadratic_bound: bool,
    pub bounds: BoundFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundFit {
    pub etas: Vec<f64>,
    pub sup_primitive: Vec<f64>,
    pub sup_input: Vec<f64>,
    /// max over the grid of sup|W|/η.
    pub c1: f64,
    /// max over the grid of sup|ϖ|/η².
    pub c2: f64,
    pub primitive_exponent: f64,
    pub input_exponent: f64,
}

/// Sample points in the closed ball: four radii times the sphere rule directions, plus the center.
pub fn ball_samples(ball: &Ball) -> Vec<Vector7> {
    let mut out = vec![ball.center];
    for frac in [0.25, 0.5, 0.75, 1.0] {
        for (u, _) in sphere_rule() {
            out.push(std::array::from_fn(|i| ball.center[i] + frac * ball.radius * u[i]));
        }
    }
    out
}

pub const DEFAULT_PRIMITIVE_ETAS: [f64; 3] = [0.5, 0.25, 0.125];

/// Radial homotopy K(W)|ₓ = ∫₀¹ t^{p−1} (x ⌟ W)|_{tx} dt.
pub fn poincare_primitive(w: &FormField, etas: &[f64], tol: f64) -> Result<PrimitiveReport> {
    let p = w.grade();
    if p == 0 {
        return Err(Error::Grade("the homotopy operator needs a form of degree at least 1".into()));
    }
    let probe = ball_samples(&Ball::new([0.0; 7], 1.0));
    let dw = w.d()?;
    let closedness_residual = dw.sup_norm_on(&probe);
    if closedness_residual > tol {
        return Err(Error::NotClosed(closedness_residual));
    }
    let (primitive, exact) = match w.structured().and_then(|s| polynomial_primitive(s)) {
        Some(s) => (FormField::from_structured(s), true),
        None => (numerical_primitive(w), false),
    };
    let dp = primitive.d()?;
    let residual = probe.iter().map(|x| dp.eval(x).sub(&w.eval(x)).max_abs()).fold(0.0, f64::max);
    let vanishes_at_origin = w.eval(&[0.0; 7]).max_abs() <= tol;
    let bounds = fit_bounds(w, &primitive, etas);
    let quadratic_bound = vanishes_at_origin && etas.len() >= 2 && bounds.primitive_exponent >= 1.9;
    Ok(PrimitiveReport { primitive, exact, closedness_residual, residual, vanishes_at_origin, quadratic_bound, bounds })
}

fn fit_bounds(w: &FormField, primitive: &FormField, etas: &[f64]) -> BoundFit {
    let mut sup_primitive = Vec::new();
    let mut sup_input = Vec::new();
    for &eta in etas {
        let pts = ball_samples(&Ball::new([0.0; 7], 2.0 * eta));
        sup_primitive.push(primitive.sup_euclidean_on(&pts));
        sup_input.push(w.sup_euclidean_on(&pts));
    }
    let c1 = etas.iter().zip(&sup_input).map(|(e, s)| s / e).fold(0.0, f64::max);
    let c2 = etas.iter().zip(&sup_primitive).map(|(e, s)| s / (e * e)).fold(0.0, f64::max);
    let lx: Vec<f64> = etas.iter().map(|e| e.ln()).collect();
    let fit = |ys: &[f64]| {
        if etas.len() < 2 || ys.iter().any(|y| *y <= 0.0) {
            return f64::NAN;
        }
        linear_fit(&lx, &ys.iter().map(|y| y.ln()).collect::<Vec<_>>()).0
    };
    BoundFit {
        etas: etas.to_vec(),
        primitive_exponent: fit(&sup_primitive),
        input_exponent: fit(&sup_input),
        sup_primitive,
        sup_input,
        c1,
        c2,
    }
}

/// Exact homotopy of a polynomial form centred at the origin: c x^m dx^I ↦ c/(p + |m|) x^m (x ⌟ dx^I).
fn polynomial_primitive(s: &Structured) -> Option<Structured> {
    if s.terms.iter().any(|t| t.profile != RadialProfile::One || (t.degree() > 0 && t.center != [0.0; 7])) {
        return None;
    }
    let p = s.grade;
    let mut out = Vec::new();
    for t in &s.terms {
        let factor = t.coeff / (p + t.degree()) as f64;
        for (pos, axis) in t.index.axes().into_iter().enumerate() {
            let mut exps = t.exps;
            exps[axis - 1] += 1;
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            out.push(Term {
                coeff: factor * sign,
                profile: RadialProfile::One,
                center: [0.0; 7],
                exps,
                index: t.index.without(axis),
            });
        }
    }
    Some(Structured::new(p - 1, out))
}

const HOMOTOPY_NODES: usize = 64;

fn numerical_primitive(w: &FormField) -> FormField {
    let p = w.grade();
    // Radial breakpoints of structured profiles; the t-integral is split where |tx − c| crosses them.
    let mut kinks: Vec<(Vector7, f64)> = Vec::new();
    if let Some(s) = w.structured() {
        for t in &s.terms {
            for r in t.profile.breakpoints() {
                if !kinks.contains(&(t.center, r)) {
                    kinks.push((t.center, r));
                }
            }
        }
    }
    let g = w.clone();
    FormField::from_fn(p - 1, w.support().map(|b| b.enclose(&Ball::new([0.0; 7], 0.0))), move |x| {
        let breaks: Vec<f64> = kinks.iter().flat_map(|(c, r)| sphere_crossings(x, c, *r)).collect();
        let mut acc = ConstForm::zero(p - 1);
        for (t, wt) in segment_rule(0.0, 1.0, &breaks, HOMOTOPY_NODES) {
            let y = x.map(|v| t * v);
            let c = g.eval(&y).interior(x).expect("positive degree");
            acc = acc.axpy(&(wt * t.powi(p as i32 - 1)), &c);
        }
        acc
    })
    .with_finite_differences(1e-5)
}

/// Parameters t ∈ (0, 1) with |t x − c| = r.
fn sphere_crossings(x: &Vector7, c: &Vector7, r: f64) -> Vec<f64> {
    let a: f64 = x.iter().map(|v| v * v).sum();
    if a == 0.0 {
        return vec![];
    }
    let b: f64 = -2.0 * x.iter().zip(c).map(|(u, v)| u * v).sum::<f64>();
    let cc: f64 = c.iter().map(|v| v * v).sum::<f64>() - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc <= 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)].into_iter().filter(|t| *t > 0.0 && *t < 1.0).collect()
}

/// Result of gluing a closed 4-form to ψ0 near the origin.
#[derive(Clone, Debug, Serialize)]
pub struct GlueReport {
    #[serde(skip)]
    pub glued: FormField,
    /// Radius of the ball on which the glued form equals ψ0.
    pub eta: f64,
    /// Sampled sup of |ψ″ − ψ′|.
    pub correction: f64,
    pub delta: f64,
    /// Sampled sup of |ψ″ − ψ0| on B_η.
    pub agreement: f64,
    /// Correction measured at each η tried, largest first.
    pub trials: Vec<(f64, f64)>,
}

/// ψ″ = ψ′ + d(f ϖ) with ϖ the homotopy primitive of ψ0 − ψ′ and f ≡ 1 on B_η; the largest η
/// on the halving grid from 1 down to `eta_floor` with |ψ″ − ψ′| < δ is chosen.
pub fn glue_to_standard(psi: &FormField, delta: f64, eta_floor: f64) -> Result<GlueReport> {
    if psi.grade() != 4 {
        return Err(Error::Grade("gluing needs a 4-form".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Invalid("delta must be positive".into()));
    }
    let psi0 = psi0_f64();
    let at_origin = psi.eval(&[0.0; 7]).sub(&psi0).max_abs();
    if at_origin > 1e-12 {
        return Err(Error::Invalid(format!("the form differs from ψ0 at the origin by {at_origin:e}")));
    }
    let w = FormField::constant(&psi0).sub(psi);
    let prim = poincare_primitive(&w, &[], 1e-9)?;
    let mut trials = Vec::new();
    let mut eta = 1.0;
    while eta >= eta_floor {
        let bump = BumpProfile::new(eta / BumpProfile::DEFAULT_A);
        let correction = cutoff_derivative(&prim.primitive, bump)?;
        let pts = ball_samples(&Ball::new([0.0; 7], bump.support()));
        let sup = correction.sup_euclidean_on(&pts);
        trials.push((eta, sup));
        if sup < delta {
            let glued = psi.add(&correction);
            let inner = ball_samples(&Ball::new([0.0; 7], eta));
            let agreement = inner.iter().map(|x| glued.eval(x).sub(&psi0).max_abs()).fold(0.0, f64::max);
            return Ok(GlueReport { glued, eta, correction: sup, delta, agreement, trials });
        }
        eta *= 0.5;
    }
    let best = trials.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    Err(Error::SearchFailed(format!("no radius down to {eta_floor:e} keeps the correction below {delta:e}; best achieved {best:e}")))
}

fn cutoff_derivative(primitive: &FormField, bump: BumpProfile) -> Result<FormField> {
    let profile = RadialProfile::Bump { bump, order: 0 };
    if let Some(s) = primitive.structured() {
        if let Some(cut) = s.times_profile(profile, &[0.0; 7]) {
            return Ok(FormField::from_structured(cut.d()));
        }
    }
    let g = primitive.clone();
    let support = Ball::new([0.0; 7], bump.support());
    let cut = FormField::from_fn(primitive.grade(), Some(support), move |x| g.eval(x).scale(&bump.value(dist(x, &[0.0; 7]))))
        .with_finite_differences(1e-5);
    cut.d()
}

/// Disjoint balls inside a box or torus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Packing {
    pub domain: Domain7,
    pub balls: Vec<Ball>,
}

impl Packing {
    /// Lattice packing with `counts[i]` balls along axis i of the box [0, edges]; the radius is half
    /// the smallest cell edge.
    pub fn lattice(edges: [f64; 7], counts: [usize; 7]) -> Result<Packing> {
        if counts.iter().any(|&c| c == 0) || edges.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Invalid("lattice packing needs positive counts and edges".into()));
        }
        let cell: [f64; 7] = std::array::from_fn(|i| edges[i] / counts[i] as f64);
        let radius = 0.5 * cell.iter().cloned().fold(f64::INFINITY, f64::min);
        let total: usize = counts.iter().product();
        let balls = (0..total)
            .map(|mut k| {
                let mut c = [0.0; 7];
                for i in 0..7 {
                    c[i] = (k % counts[i]) as f64 * cell[i] + 0.5 * cell[i];
                    k /= counts[i];
                }
                Ball::new(c, radius)
            })
            .collect();
        Ok(Packing { domain: Domain7::Box { corner: [0.0; 7], edges }, balls })
    }

    /// Named presets: `cubic-N` (N balls per axis in the unit cube) and `lattice-64`.
    pub fn preset(name: &str) -> Result<Packing> {
        if let Some(n) = name.strip_prefix("cubic-") {
            let n: usize = n.parse().map_err(|_| Error::Invalid(format!("bad packing preset '{name}'")))?;
            return Packing::lattice([1.0; 7], [n; 7]);
        }
        match name {
            "lattice-64" => Packing::lattice([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5], [2, 2, 2, 2, 2, 2, 1]),
            "single" => Ok(Packing { domain: Domain7::cube(1.0), balls: vec![Ball::new([0.5; 7], 0.5)] }),
            _ => Err(Error::Invalid(format!("unknown packing preset '{name}' (cubic-N, lattice-64, single)"))),
        }
    }

    pub fn covered_fraction(&self) -> f64 {
        let v: f64 = self.balls.iter().map(|b| crate::quadrature::ball_volume() * b.radius.powi(7)).sum();
        v / self.domain.volume()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if matches!(self.domain, Domain7::Ball { .. }) {
            return Err(Error::Packing("packings live in a box or a torus".into()));
        }
        for (i, a) in self.balls.iter().enumerate() {
            if !self.domain.contains_ball(a) {
                return Err(Error::Packing(format!("ball {i} at {:?} is not interior to the domain", a.center)));
            }
            if let Some(j) = self.balls[..i].iter().position(|b| !a.is_disjoint(b)) {
                return Err(Error::Packing(format!("balls {j} and {i} overlap")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnboundedReport {
    pub family: FamilyName,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Chosen amplitude per round, relative to the bump radius.
    pub amplitudes: Vec<f64>,
    /// Measured relative change within one perturbed ball.
    pub eps_hat: f64,
    pub covered_fraction: f64,
    pub required_fraction: f64,
    /// Each ratio is ≥ 1 + ε̂/2 (sign +) or ≤ 1 − ε̂/2 (sign −).
    pub ratio_bound_holds: bool,
    pub strictly_monotone: bool,
}

/// Options of the unboundedness iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterateOptions {
    pub t_grid: Vec<f64>,
    pub nodes: usize,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions { t_grid: log_grid(1e-2, 1.0, 9), nodes: DEFAULT_RADIAL_NODES }
    }
}

/// Growth or decay of H⁴ starting from ψ0. Round k perturbs every packing ball B(c, R) by the
/// family on the concentric ball B(c, a^k R), which lies in the plateau of the previous round's
/// bump where the field is still ψ0. The amplitude is optimized each round on the first ball and
/// applied to every ball. Grid amplitudes are relative to the bump radius, since |dα| scales as t/η.
pub fn unbounded_iterate(packing: &Packing, sign: i32, rounds: usize, nu: f64, opts: &IterateOptions) -> Result<UnboundedReport> {
    let family = if sign >= 0 { FamilyName::P0Plus } else { FamilyName::P0Minus };
    unbounded_iterate_family(packing, family, rounds, nu, opts)
}

pub fn unbounded_iterate_family(packing: &Packing, family: FamilyName, rounds: usize, nu: f64, opts: &IterateOptions) -> Result<UnboundedReport> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::Invalid(format!("nu must lie in [0, 1), got {nu}")));
    }
    packing.validate()?;
    if packing.balls.is_empty() {
        return Err(Error::Packing("no balls".into()));
    }
    let covered = packing.covered_fraction();
    let required = 1.0 - nu;
    if covered < required {
        return Err(Error::Coverage { covered, required, deficit: required - covered });
    }
    let kind = family.kind();
    let base_form = family.base_form();
    let h0 = voldensity(kind, &base_form)? * packing.domain.volume();
    let mut values = vec![h0];
    let mut amplitudes = Vec::new();
    let mut local: Vec<FormField> = vec![FormField::constant(&base_form); packing.balls.len()];
    let mut eps_hat = f64::NAN;
    let a = BumpProfile::DEFAULT_A;
    for round in 0..rounds {
        let scale = a.powi(round as i32);
        let fam = |b: &Ball| PerturbationFamily::new(family, b.center, b.radius * scale, 1.0);
        let first = fam(&packing.balls[0]);
        let grid: Vec<f64> = opts.t_grid.iter().map(|t| t * first.eta).collect();
        let rep = optimize_amplitude(kind, &local[0], &first, &grid, opts.nodes)?;
        if round == 0 {
            eps_hat = rep.eps_hat;
        }
        let t = rep.best_t / first.eta;
        amplitudes.push(t);
        let fam = |b: &Ball| {
            let p = fam(b);
            p.with_amplitude(t * p.eta)
        };
        // Balls of equal radius carry translated copies of the same local field, so the change
        // is computed once per radius.
        let mut by_radius: Vec<(u64, f64)> = Vec::new();
        let mut total = Vec::with_capacity(packing.balls.len());
        for (b, base) in packing.balls.iter().zip(&local) {
            let key = b.radius.to_bits();
            let change = match by_radius.iter().find(|e| e.0 == key) {
                Some(e) => e.1,
                None => {
                    let p = fam(b);
                    let v = make_family(&p)?.d_alpha;
                    let c = functional_change(kind, &Domain7::Ball { center: b.center, radius: p.eta }, base, &v, 1.0, opts.nodes)?;
                    by_radius.push((key, c));
                    c
                }
            };
            total.push(change);
        }
        values.push(values.last().unwrap() + crate::quadrature::pairwise_sum(&total));
        local = packing
            .balls
            .iter()
            .zip(&local)
            .map(|(b, base)| Ok(base.add(&make_family(&fam(b))?.d_alpha)))
            .collect::<Result<_>>()?;
    }
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let s = family.sign() as f64;
    let ratio_bound_holds = !eps_hat.is_nan() && ratios.iter().all(|r| s * (r - 1.0) >= eps_hat / 2.0);
    let strictly_monotone = values.windows(2).all(|w| s * (w[1] - w[0]) > 0.0);
    Ok(UnboundedReport {
        family,
        values,
        ratios,
        amplitudes,
        eps_hat: if eps_hat.is_nan() { 0.0 } else { eps_hat },
        covered_fraction: covered,
        required_fraction: required,
        ratio_bound_holds,
        strictly_monotone,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SaddleReport {
    pub gram: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub max_off_diagonal: f64,
    /// +1 positive definite, −1 negative definite, 0 indefinite or degenerate.
    pub definiteness: i32,
}

/// Gram matrix of the second variation on the span of the bumps' dα.
pub fn saddle_gram(kind: FunctionalKind, base: &FormField, bumps: &[PerturbationFamily], q: &QuadratureSpec) -> Result<SaddleReport> {
    for (i, a) in bumps.iter().enumerate() {
        if let Some(j) = bumps[..i].iter().position(|b| !a.ball().is_disjoint(&b.ball())) {
            return Err(Error::Packing(format!("bumps {j} and {i} overlap")));
        }
    }
    let fields: Vec<FormField> = bumps.iter().map(|p| make_family(p).map(|f| f.d_alpha)).collect::<Result<_>>()?;
    let domain = enclosing_domain(bumps);
    let k = bumps.len();
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = second_variation(kind, &domain, base, &fields[i], &fields[j], q)?.value;
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| gram[i][j]);
    let mut eigenvalues: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let max_off_diagonal = (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| gram[i][j].abs()).fold(0.0, f64::max);
    let definiteness = match (eigenvalues.first(), eigenvalues.last()) {
        (Some(lo), _) if *lo > 0.0 => 1,
        (_, Some(hi)) if *hi < 0.0 => -1,
        _ => 0,
    };
    Ok(SaddleReport { gram, eigenvalues, max_off_diagonal, definiteness })
}

/// Smallest ball about the origin containing every bump ball.
pub fn enclosing_domain(bumps: &[PerturbationFamily]) -> Domain7 {
    let r = bumps.iter().map(|p| dist(&p.center, &[0.0; 7]) + p.eta).fold(0.0, f64::max);
    Domain7::Ball { center: [0.0; 7], radius: r.max(1e-300) }
}

/// k bumps of radius η on the first coordinate axis, spaced 2η apart and centred about the origin.
pub fn bump_row(name: FamilyName, k: usize, eta: f64) -> Vec<PerturbationFamily> {
    (0..k)
        .map(|i| {
            let mut c = [0.0; 7];
            c[0] = (2.0 * i as f64 - (k as f64 - 1.0)) * eta;
            PerturbationFamily::new(name, c, eta, 1.0)
        })
        .collect()
}
