use super::form::{ConstForm, Vector7};
use super::multiindex::MultiIndex;
use super::radial::RadialProfile;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Closed ball in R^7.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vector7,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vector7, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, x: &Vector7) -> bool {
        dist(x, &self.center) <= self.radius
    }

    pub fn contains_ball(&self, other: &Ball) -> bool {
        dist(&self.center, &other.center) + other.radius <= self.radius * (1.0 + 1e-12)
    }

    pub fn is_disjoint(&self, other: &Ball) -> bool {
        dist(&self.center, &other.center) >= self.radius + other.radius
    }

    /// Smallest ball containing both.
    pub fn enclose(&self, other: &Ball) -> Ball {
        let d = dist(&self.center, &other.center);
        if d + other.radius <= self.radius {
            return *self;
        }
        if d + self.radius <= other.radius {
            return *other;
        }
        let radius = 0.5 * (d + self.radius + other.radius);
        let t = (radius - self.radius) / d;
        let center = std::array::from_fn(|i| self.center[i] + t * (other.center[i] - self.center[i]));
        Ball { center, radius }
    }
}

pub fn dist(a: &Vector7, b: &Vector7) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// coeff · P(|x - c|) · (x - c)^m · dx^I
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub profile: RadialProfile,
    pub center: Vector7,
    pub exps: [u8; 7],
    pub index: MultiIndex,
}

impl Term {
    /// Scalar factor coeff · P(r) · (x - c)^m at x.
    pub fn scalar_at(&self, x: &Vector7) -> f64 {
        let y: [f64; 7] = std::array::from_fn(|i| x[i] - self.center[i]);
        let mut mono = self.coeff;
        for i in 0..7 {
            if self.exps[i] > 0 {
                mono *= y[i].powi(self.exps[i] as i32);
            }
        }
        if mono == 0.0 {
            return 0.0;
        }
        match self.profile {
            RadialProfile::One => mono,
            p => {
                let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                mono * p.eval(r)
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    fn key(&self) -> TermKey {
        (self.profile.key(), self.center.map(f64::to_bits), self.exps, self.index)
    }
}

type TermKey = ((u8, u64, u64, u64, u8), [u64; 7], [u8; 7], MultiIndex);

/// Finite sum of radial × monomial × basis terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Structured {
    pub grade: usize,
    pub terms: Vec<Term>,
}

impl Structured {
    /// Merge like terms and drop zero coefficients; the order is canonical.
    pub fn new(grade: usize, terms: Vec<Term>) -> Self {
        let mut map: BTreeMap<TermKey, Term> = BTreeMap::new();
        for t in terms {
            assert_eq!(t.index.grade(), grade);
            match map.get_mut(&t.key()) {
                Some(existing) => existing.coeff += t.coeff,
                None => {
                    map.insert(t.key(), t);
                }
            }
        }
        Structured { grade, terms: map.into_values().filter(|t| t.coeff != 0.0).collect() }
    }

    pub fn constant(form: &ConstForm<f64>) -> Self {
        let terms = form
            .terms()
            .map(|(index, c)| Term { coeff: *c, profile: RadialProfile::One, center: [0.0; 7], exps: [0; 7], index })
            .collect();
        Structured::new(form.grade(), terms)
    }

    pub fn eval(&self, x: &Vector7) -> ConstForm<f64> {
        let mut out = ConstForm::zero(self.grade);
        // Terms are sorted by profile and center, so the radial factor is reused across runs of terms.
        let mut cached: Option<(&RadialProfile, &Vector7, f64)> = None;
        for t in &self.terms {
            let radial = match (&t.profile, cached) {
                (RadialProfile::One, _) => 1.0,
                (p, Some((cp, cc, v))) if cp == p && *cc == t.center => v,
                (p, _) => {
                    let r = dist(x, &t.center);
                    let v = p.eval(r);
                    cached = Some((p, &t.center, v));
                    v
                }
            };
            if radial == 0.0 {
                continue;
            }
            let mut v = t.coeff * radial;
            for i in 0..7 {
                if t.exps[i] > 0 {
                    v *= (x[i] - t.center[i]).powi(t.exps[i] as i32);
                }
            }
            if v != 0.0 {
                out.add_to(t.index, v);
            }
        }
        out
    }

    /// Exact exterior derivative.
    pub fn d(&self) -> Structured {
        let mut out = Vec::new();
        for t in &self.terms {
            if let Some(p2) = t.profile.reduced_d() {
                for axis in 1..=7 {
                    let dxi = MultiIndex::of(&[axis]);
                    let s = dxi.wedge_sign(t.index);
                    if s == 0 {
                        continue;
                    }
                    let mut exps = t.exps;
                    exps[axis - 1] += 1;
                    out.push(Term {
                        coeff: t.coeff * s as f64,
                        profile: p2,
                        center: t.center,
                        exps,
                        index: dxi.union(t.index),
                    });
                }
            }
            for axis in 1..=7 {
                let m = t.exps[axis - 1];
                if m == 0 {
                    continue;
                }
                let dxi = MultiIndex::of(&[axis]);
                let s = dxi.wedge_sign(t.index);
                if s == 0 {
                    continue;
                }
                let mut exps = t.exps;
                exps[axis - 1] -= 1;
                out.push(Term {
                    coeff: t.coeff * m as f64 * s as f64,
                    profile: t.profile,
                    center: t.center,
                    exps,
                    index: dxi.union(t.index),
                });
            }
        }
        Structured::new(self.grade + 1, out)
    }

    pub fn add(&self, other: &Structured) -> Structured {
        assert_eq!(self.grade, other.grade);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Structured::new(self.grade, terms)
    }

    pub fn scale(&self, s: f64) -> Structured {
        Structured::new(
            self.grade,
            self.terms.iter().map(|t| Term { coeff: t.coeff * s, ..t.clone() }).collect(),
        )
    }

    /// Right wedge with a constant form.
    pub fn wedge_const(&self, c: &ConstForm<f64>) -> Structured {
        let mut out = Vec::new();
        for t in &self.terms {
            for (j, cj) in c.terms() {
                let s = t.index.wedge_sign(j);
                if s == 0 {
                    continue;
                }
                out.push(Term { coeff: t.coeff * cj * s as f64, index: t.index.union(j), ..t.clone() });
            }
        }
        Structured::new(self.grade + c.grade(), out)
    }

    /// Multiply every term by a radial profile about `center`. Needs all terms to carry the constant
    /// profile, and non-constant monomials to share that center.
    pub fn times_profile(&self, profile: RadialProfile, center: &Vector7) -> Option<Structured> {
        let movable = |t: &Term| t.degree() == 0 || t.center == *center;
        if self.terms.iter().any(|t| t.profile != RadialProfile::One || !movable(t)) {
            return None;
        }
        Some(Structured::new(
            self.grade,
            self.terms.iter().map(|t| Term { profile, center: *center, ..t.clone() }).collect(),
        ))
    }

    /// Smallest ball containing every term's support; None if some term is not compactly supported.
    pub fn support(&self) -> Option<Ball> {
        let mut acc: Option<Ball> = None;
        for t in &self.terms {
            let r = t.profile.support()?;
            let b = Ball::new(t.center, r);
            acc = Some(match acc {
                None => b,
                Some(a) => a.enclose(&b),
            });
        }
        acc.or(Some(Ball::new([0.0; 7], 0.0)))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max)
    }
}

type Evaluator = Arc<dyn Fn(&Vector7) -> ConstForm<f64> + Send + Sync>;

/// Form-valued function on R^7.
#[derive(Clone)]
pub struct FormField {
    grade: usize,
    eval: Evaluator,
    support: Option<Ball>,
    structured: Option<Arc<Structured>>,
    fd_step: Option<f64>,
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormField")
            .field("grade", &self.grade)
            .field("support", &self.support)
            .field("structured_terms", &self.structured.as_ref().map(|s| s.terms.len()))
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl FormField {
    pub fn from_structured(s: Structured) -> Self {
        let support = s.support();
        let s = Arc::new(s);
        let s2 = s.clone();
        FormField { grade: s.grade, eval: Arc::new(move |x| s2.eval(x)), support, structured: Some(s), fd_step: None }
    }

    pub fn constant(c: &ConstForm<f64>) -> Self {
        Self::from_structured(Structured::constant(c))
    }

    /// Black-box field. With a support ball the evaluator is forced to zero outside it.
    pub fn from_fn(
        grade: usize,
        support: Option<Ball>,
        f: impl Fn(&Vector7) -> ConstForm<f64> + Send + Sync + 'static,
    ) -> Self {
        let eval: Evaluator = match support {
            Some(b) => Arc::new(move |x: &Vector7| if b.contains(x) { f(x) } else { ConstForm::zero(grade) }),
            None => Arc::new(f),
        };
        FormField { grade, eval, support, structured: None, fd_step: None }
    }

    /// Allow differentiation of black-box fields by central differences with step h.
    pub fn with_finite_differences(mut self, h: f64) -> Self {
        self.fd_step = Some(h);
        self
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn support(&self) -> Option<Ball> {
        self.support
    }

    pub fn structured(&self) -> Option<&Structured> {
        self.structured.as_deref()
    }

    pub fn fd_step(&self) -> Option<f64> {
        self.fd_step
    }

    pub fn eval(&self, x: &Vector7) -> ConstForm<f64> {
        (self.eval)(x)
    }

    pub fn d(&self) -> Result<FormField> {
        if let Some(s) = &self.structured {
            let mut out = FormField::from_structured(s.d());
            out.support = self.support;
            return Ok(out);
        }
        let Some(h) = self.fd_step else { return Err(Error::NotDifferentiable) };
        let f = self.eval.clone();
        let grade = self.grade;
        let mut out = FormField::from_fn(grade + 1, self.support, move |x| {
            let mut acc = ConstForm::zero(grade + 1);
            for axis in 1..=7 {
                let mut xp = *x;
                let mut xm = *x;
                xp[axis - 1] += h;
                xm[axis - 1] -= h;
                let deriv = f(&xp).sub(&f(&xm)).scale(&(0.5 / h));
                acc = acc.add(&ConstForm::basis(MultiIndex::of(&[axis])).wedge(&deriv));
            }
            acc
        });
        out.fd_step = Some(h);
        Ok(out)
    }

    pub fn add(&self, other: &FormField) -> FormField {
        assert_eq!(self.grade, other.grade, "cannot add fields of different grade");
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some(a.enclose(&b)),
            _ => None,
        };
        if let (Some(a), Some(b)) = (&self.structured, &other.structured) {
            let mut f = FormField::from_structured(a.add(b));
            if f.support.is_some() {
                f.support = support;
            }
            return f;
        }
        let (fa, fb) = (self.eval.clone(), other.eval.clone());
        let mut f = FormField::from_fn(self.grade, None, move |x| fa(x).add(&fb(x)));
        f.support = support;
        f.fd_step = self.fd_step.or(other.fd_step);
        f
    }

    pub fn scale(&self, s: f64) -> FormField {
        if let Some(st) = &self.structured {
            let mut f = FormField::from_structured(st.scale(s));
            f.support = self.support;
            return f;
        }
        let fe = self.eval.clone();
        let mut f = FormField::from_fn(self.grade, None, move |x| fe(x).scale(&s));
        f.support = self.support;
        f.fd_step = self.fd_step;
        f
    }

    pub fn sub(&self, other: &FormField) -> FormField {
        self.add(&other.scale(-1.0))
    }

    /// self + t·other
    pub fn axpy(&self, t: f64, other: &FormField) -> FormField {
        self.add(&other.scale(t))
    }

    pub fn wedge_const(&self, c: &ConstForm<f64>) -> FormField {
        if let Some(st) = &self.structured {
            let mut f = FormField::from_structured(st.wedge_const(c));
            f.support = self.support;
            return f;
        }
        let fe = self.eval.clone();
        let c = c.clone();
        let mut f = FormField::from_fn(self.grade + c.grade(), None, move |x| fe(x).wedge(&c));
        f.support = self.support;
        f.fd_step = self.fd_step;
        f
    }

    /// Largest coefficient magnitude over the sample points.
    pub fn sup_norm_on(&self, points: &[Vector7]) -> f64 {
        points.iter().map(|x| self.eval(x).max_abs()).fold(0.0, f64::max)
    }

    /// Largest Euclidean coefficient norm over the sample points.
    pub fn sup_euclidean_on(&self, points: &[Vector7]) -> f64 {
        points.iter().map(|x| self.eval(x).norm()).fold(0.0, f64::max)
    }
}
