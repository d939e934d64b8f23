//! Integration over balls, boxes and flat tori in R^7.

pub mod radial;
pub mod sphere;

pub use radial::{integrate_adaptive, segment_rule, Integral1d};
pub use sphere::{angular_moment, angular_moment_f64, ball_volume, sphere_area, sphere_rule, AngularMoment};

use crate::error::{Error, Result};
use crate::exterior::field::dist;
use crate::exterior::{Ball, RadialProfile, Vector7};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

/// Integration domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain7 {
    Ball { center: Vector7, radius: f64 },
    Box { corner: Vector7, edges: Vector7 },
    Torus { periods: Vector7 },
}

impl Domain7 {
    pub fn unit_ball() -> Self {
        Domain7::Ball { center: [0.0; 7], radius: 1.0 }
    }

    pub fn ball(center: Vector7, radius: f64) -> Self {
        Domain7::Ball { center, radius }
    }

    pub fn cube(side: f64) -> Self {
        Domain7::Box { corner: [0.0; 7], edges: [side; 7] }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Domain7::Ball { radius, .. } => *radius > 0.0,
            Domain7::Box { edges, .. } => edges.iter().all(|&e| e > 0.0),
            Domain7::Torus { periods } => periods.iter().all(|&p| p > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid("domain radius, edges and periods must be positive".into()))
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain7::Ball { radius, .. } => ball_volume() * radius.powi(7),
            Domain7::Box { edges, .. } => edges.iter().product(),
            Domain7::Torus { periods } => periods.iter().product(),
        }
    }

    /// Lower corner and edges of the coordinate box (fundamental domain for a torus).
    fn bounds(&self) -> Option<(Vector7, Vector7)> {
        match self {
            Domain7::Ball { .. } => None,
            Domain7::Box { corner, edges } => Some((*corner, *edges)),
            Domain7::Torus { periods } => Some(([0.0; 7], *periods)),
        }
    }

    /// Whether the closed ball lies inside the domain.
    pub fn contains_ball(&self, b: &Ball) -> bool {
        match self {
            Domain7::Ball { center, radius } => Ball::new(*center, *radius).contains_ball(b),
            _ => {
                let (lo, e) = self.bounds().expect("box-like");
                (0..7).all(|i| b.center[i] - b.radius >= lo[i] - 1e-12 && b.center[i] + b.radius <= lo[i] + e[i] + 1e-12)
            }
        }
    }

    pub fn contains_point(&self, x: &Vector7) -> bool {
        match self {
            Domain7::Ball { center, radius } => dist(x, center) <= *radius,
            _ => {
                let (lo, e) = self.bounds().expect("box-like");
                (0..7).all(|i| x[i] >= lo[i] && x[i] <= lo[i] + e[i])
            }
        }
    }
}

/// Quadrature method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    /// Exact angular moments times adaptive radial integrals.
    MomentReduction,
    /// Uniform sampling with a seeded counter-based stream.
    MonteCarlo { samples: usize, seed: u64 },
    /// Gauss–Legendre radial nodes per segment times the degree-7 sphere rule.
    Radial1d { nodes: usize },
    /// Tensor trapezoid rule with the given nodes per axis (tori and boxes).
    Trapezoid { nodes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    #[serde(flatten)]
    pub method: Method,
    pub tolerance: f64,
}

impl QuadratureSpec {
    pub fn moment_reduction() -> Self {
        QuadratureSpec { method: Method::MomentReduction, tolerance: 1e-10 }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureSpec { method: Method::MonteCarlo { samples, seed }, tolerance: 1e-10 }
    }

    pub fn radial_1d(nodes: usize) -> Self {
        QuadratureSpec { method: Method::Radial1d { nodes }, tolerance: 1e-10 }
    }

    pub fn trapezoid(nodes: usize) -> Self {
        QuadratureSpec { method: Method::Trapezoid { nodes }, tolerance: 1e-10 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::MonteCarlo { samples, .. } if samples < 1 => Err(Error::Invalid("samples must be at least 1".into())),
            Method::Radial1d { nodes } | Method::Trapezoid { nodes } if nodes < 2 => {
                Err(Error::Invalid("nodes must be at least 2".into()))
            }
            _ if !(self.tolerance > 0.0) => Err(Error::Invalid("tolerance must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// Integral value with an error estimate (a standard error for Monte Carlo).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// coeff · Π P_k(|x - c|) · (x - c)^m
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarTerm {
    pub coeff: f64,
    pub profiles: Vec<RadialProfile>,
    pub center: Vector7,
    pub exps: [u8; 7],
}

impl ScalarTerm {
    pub fn eval(&self, x: &Vector7) -> f64 {
        let y: [f64; 7] = std::array::from_fn(|i| x[i] - self.center[i]);
        let mut v = self.coeff;
        for i in 0..7 {
            if self.exps[i] > 0 {
                v *= y[i].powi(self.exps[i] as i32);
            }
        }
        if v == 0.0 || self.profiles.is_empty() {
            return v;
        }
        let r = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        for p in &self.profiles {
            v *= p.eval(r);
        }
        v
    }

    /// Radius of the support ball about the center, if any factor is compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        self.profiles.iter().filter_map(|p| p.support()).reduce(f64::min)
    }

    pub fn degree(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    fn radial(&self, r: f64) -> f64 {
        self.profiles.iter().map(|p| p.eval(r)).product()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.profiles.iter().flat_map(|p| p.breakpoints()).collect()
    }
}

/// Sum of radial × monomial scalar terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StructuredIntegrand {
    pub terms: Vec<ScalarTerm>,
}

impl StructuredIntegrand {
    pub fn eval(&self, x: &Vector7) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Smallest ball containing the supports of all terms; None if some term is not compactly supported.
    pub fn support(&self) -> Option<Ball> {
        let mut out: Option<Ball> = None;
        for t in &self.terms {
            let b = Ball::new(t.center, t.support_radius()?);
            out = Some(match out {
                None => b,
                Some(o) => o.enclose(&b),
            });
        }
        out
    }
}

type ScalarFn = Arc<dyn Fn(&Vector7) -> f64 + Send + Sync>;

/// Scalar integrand: a black-box evaluator with optional structured representation and support data.
#[derive(Clone)]
pub struct Integrand {
    eval: ScalarFn,
    structured: Option<Arc<StructuredIntegrand>>,
    support: Option<Ball>,
    breakpoints: Vec<f64>,
}

impl std::fmt::Debug for Integrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrand")
            .field("structured", &self.structured.is_some())
            .field("support", &self.support)
            .finish()
    }
}

impl Integrand {
    pub fn from_fn(f: impl Fn(&Vector7) -> f64 + Send + Sync + 'static) -> Self {
        Integrand { eval: Arc::new(f), structured: None, support: None, breakpoints: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Integrand::from_structured(StructuredIntegrand {
            terms: vec![ScalarTerm { coeff: c, profiles: vec![], center: [0.0; 7], exps: [0; 7] }],
        })
    }

    pub fn from_structured(s: StructuredIntegrand) -> Self {
        let support = s.support();
        let breakpoints = match &support {
            Some(b) if s.terms.iter().all(|t| t.center == b.center) => {
                s.terms.iter().flat_map(|t| t.breakpoints()).collect()
            }
            _ => vec![],
        };
        let s = Arc::new(s);
        let e = s.clone();
        Integrand { eval: Arc::new(move |x| e.eval(x)), structured: Some(s), support, breakpoints }
    }

    /// Declare that the integrand vanishes outside `ball`; radial breakpoints are measured from its center.
    pub fn with_support(mut self, ball: Ball, breakpoints: Vec<f64>) -> Self {
        self.support = Some(ball);
        self.breakpoints = breakpoints;
        self
    }

    pub fn eval(&self, x: &Vector7) -> f64 {
        (self.eval)(x)
    }

    pub fn structured(&self) -> Option<&StructuredIntegrand> {
        self.structured.as_deref()
    }

    pub fn support(&self) -> Option<Ball> {
        self.support
    }
}

/// Deterministic pairwise (tree) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let m = v.len() / 2;
    pairwise_sum(&v[..m]) + pairwise_sum(&v[m..])
}

/// Integrate a scalar over a domain.
pub fn integrate(domain: &Domain7, f: &Integrand, q: &QuadratureSpec) -> Result<Estimate> {
    domain.validate()?;
    q.validate()?;
    match &q.method {
        Method::MomentReduction => {
            let s = f.structured().ok_or_else(|| {
                Error::Quadrature("moment reduction needs a structured radial × monomial integrand".into())
            })?;
            moment_reduction(domain, s, q.tolerance)
        }
        Method::MonteCarlo { samples, seed } => Ok(monte_carlo(domain, f, *samples, *seed)),
        Method::Radial1d { nodes } => {
            let rule = ball_rule_for(domain, f, *nodes)?;
            Ok(apply_rule(&rule, |x| f.eval(x)))
        }
        Method::Trapezoid { nodes } => trapezoid(domain, f, *nodes),
    }
}

/// Integrate a structured integrand with exact angular moments.
pub fn moment_reduction(domain: &Domain7, s: &StructuredIntegrand, rel: f64) -> Result<Estimate> {
    let mut cache: HashMap<(Vec<(u8, u64, u64, u64, u8)>, usize, u64), Integral1d> = HashMap::new();
    let mut values = Vec::with_capacity(s.terms.len());
    let mut error = 0.0;
    let mut evaluations = 0;
    for t in &s.terms {
        if t.coeff == 0.0 || t.exps.iter().any(|e| e % 2 == 1) {
            continue;
        }
        let rho = upper_radius(domain, t)?;
        let n = t.degree() + 6;
        let radial = if t.profiles.iter().all(|p| matches!(p, RadialProfile::One)) {
            Integral1d { value: rho.powi(n as i32 + 1) / (n as f64 + 1.0), error: 0.0, evaluations: 0 }
        } else {
            let mut keys: Vec<_> = t.profiles.iter().map(|p| p.key()).collect();
            keys.sort();
            let key = (keys, n, rho.to_bits());
            *cache.entry(key).or_insert_with(|| {
                let g = |r: f64| t.radial(r) * r.powi(n as i32);
                integrate_adaptive(&g, 0.0, rho, &t.breakpoints(), rel)
            })
        };
        let a = angular_moment_f64(&t.exps);
        values.push(t.coeff * a * radial.value);
        error += (t.coeff * a).abs() * radial.error;
        evaluations += radial.evaluations;
    }
    Ok(Estimate { value: pairwise_sum(&values), error, evaluations })
}

fn upper_radius(domain: &Domain7, t: &ScalarTerm) -> Result<f64> {
    let support = t.support_radius();
    if let Some(s) = support {
        if domain.contains_ball(&Ball::new(t.center, s)) {
            return Ok(s);
        }
    }
    if let Domain7::Ball { center, radius } = domain {
        if *center == t.center {
            return Ok(support.map_or(*radius, |s| s.min(*radius)));
        }
    }
    Err(Error::Quadrature(
        "moment reduction needs each term supported inside the domain or centred at the domain ball".into(),
    ))
}

pub fn sample_point(domain: &Domain7, rng: &mut ChaCha8Rng) -> Vector7 {
    match domain {
        Domain7::Ball { center, radius } => loop {
            let g: [f64; 7] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n == 0.0 {
                continue;
            }
            let r = radius * rng.random::<f64>().powf(1.0 / 7.0);
            break std::array::from_fn(|i| center[i] + r * g[i] / n);
        },
        _ => {
            let (lo, e) = domain.bounds().expect("box-like");
            std::array::from_fn(|i| lo[i] + e[i] * rng.random::<f64>())
        }
    }
}

/// The sample stream for index `i` under `seed`; independent of evaluation order.
pub fn sample_stream(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Plain Monte Carlo with standard error.
pub fn monte_carlo(domain: &Domain7, f: &Integrand, samples: usize, seed: u64) -> Estimate {
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| f.eval(&sample_point(domain, &mut sample_stream(seed, i))))
        .collect();
    mean_estimate(&values, domain.volume())
}

/// vol · mean of the samples, with the standard error of the mean.
pub fn mean_estimate(values: &[f64], vol: f64) -> Estimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if values.len() > 1 { pairwise_sum(&sq) / (n - 1.0) } else { 0.0 };
    Estimate { value: vol * mean, error: vol * (var / n).sqrt(), evaluations: values.len() }
}

/// Product rule on a ball: Gauss–Legendre in r on each segment between breakpoints, sphere rule in angle.
pub fn ball_rule(ball: &Ball, breakpoints: &[f64], nodes: usize) -> Vec<(Vector7, f64)> {
    let radial = segment_rule(0.0, ball.radius, breakpoints, nodes);
    let area = sphere_area();
    let mut out = Vec::with_capacity(radial.len() * sphere_rule().len());
    for &(r, wr) in &radial {
        for (u, wu) in sphere_rule() {
            let x = std::array::from_fn(|i| ball.center[i] + r * u[i]);
            out.push((x, wr * r.powi(6) * wu * area));
        }
    }
    out
}

fn ball_rule_for(domain: &Domain7, f: &Integrand, nodes: usize) -> Result<Vec<(Vector7, f64)>> {
    if let Some(b) = f.support() {
        if domain.contains_ball(&b) {
            return Ok(ball_rule(&b, &f.breakpoints, nodes));
        }
    }
    match domain {
        Domain7::Ball { center, radius } => {
            let breaks = match f.support() {
                Some(b) if b.center == *center => f.breakpoints.clone(),
                _ => vec![],
            };
            Ok(ball_rule(&Ball::new(*center, *radius), &breaks, nodes))
        }
        _ => Err(Error::Quadrature("radial-1d needs a ball domain or an integrand supported inside the domain".into())),
    }
}

/// Σ w f(x) over a node rule, evaluated in parallel and summed pairwise.
pub fn apply_rule(rule: &[(Vector7, f64)], f: impl Fn(&Vector7) -> f64 + Sync) -> Estimate {
    let values: Vec<f64> = rule.par_iter().map(|(x, w)| w * f(x)).collect();
    Estimate { value: pairwise_sum(&values), error: 0.0, evaluations: rule.len() }
}

fn trapezoid(domain: &Domain7, f: &Integrand, nodes: usize) -> Result<Estimate> {
    let (lo, e) = match domain {
        Domain7::Torus { periods } => ([0.0; 7], *periods),
        _ => return Err(Error::Quadrature("the trapezoid rule is implemented for tori".into())),
    };
    let total = nodes.checked_pow(7).ok_or_else(|| Error::Quadrature("too many trapezoid nodes".into()))?;
    let cell: f64 = e.iter().map(|p| p / nodes as f64).product();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut k| {
            let mut x = [0.0; 7];
            for i in 0..7 {
                x[i] = lo[i] + e[i] * (k % nodes) as f64 / nodes as f64;
                k /= nodes;
            }
            f.eval(&x)
        })
        .collect();
    Ok(Estimate { value: cell * pairwise_sum(&values), error: 0.0, evaluations: total })
}
