use super::metric::{hodge_star, metric_from_3form, metric_from_4form_closed, Metric7};
use crate::error::{Error, Result};
use crate::exterior::{ConstForm, Mat7};
use crate::linalg::Dense;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Orbit of a 3-form or 4-form under GL₊(7).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orbit {
    CompactG2,
    SplitG2,
    Degenerate,
}

impl Orbit {
    pub fn from_signature(sig: (usize, usize, usize)) -> Orbit {
        match sig {
            (7, 0, 0) => Orbit::CompactG2,
            (3, 4, 0) => Orbit::SplitG2,
            _ => Orbit::Degenerate,
        }
    }

    /// Signature of the induced metric for the orbit.
    pub fn signature(self) -> Option<(usize, usize)> {
        match self {
            Orbit::CompactG2 => Some((7, 0)),
            Orbit::SplitG2 => Some((3, 4)),
            Orbit::Degenerate => None,
        }
    }
}

/// Stable 3-form with its 4-form ⋆φ, metric and orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct G2Structure<T: Scalar = f64> {
    pub threeform: ConstForm<T>,
    pub fourform: ConstForm<T>,
    pub metric: Metric7<T>,
    pub orbit: Orbit,
    /// Sign of the volume form against dx^{1...7}.
    pub orientation: i32,
}

impl<T: Scalar> G2Structure<T> {
    /// Hodge star of the structure (metric and induced orientation).
    pub fn star(&self, a: &ConstForm<T>) -> ConstForm<T> {
        let s = hodge_star(&self.metric, a);
        if self.orientation < 0 {
            s.neg()
        } else {
            s
        }
    }

    pub fn pairing(&self, a: &ConstForm<T>, b: &ConstForm<T>) -> T {
        self.metric.pairing(a, b)
    }

    pub fn voldensity(&self) -> &T {
        self.metric.voldensity()
    }

    pub fn to_f64(&self) -> G2Structure<f64> {
        G2Structure {
            threeform: self.threeform.to_f64(),
            fourform: self.fourform.to_f64(),
            metric: self.metric.to_f64(),
            orbit: self.orbit,
            orientation: self.orientation,
        }
    }
}

/// Orbit class of a 3-form from the signature of its bilinear form.
pub fn classify_3<T: Scalar>(phi: &ConstForm<T>) -> Orbit {
    match metric_from_3form(phi) {
        Ok((m, _)) => Orbit::from_signature((m.signature().0, m.signature().1, 0)),
        Err(_) => Orbit::Degenerate,
    }
}

/// Metric, orbit and 4-form of a stable 3-form.
pub fn classify_and_metric_3<T: Scalar>(phi: &ConstForm<T>) -> Result<G2Structure<T>> {
    if phi.grade() != 3 {
        return Err(Error::Grade(format!("expected a 3-form, got degree {}", phi.grade())));
    }
    let (metric, orientation) = metric_from_3form(phi)?;
    let (p, q) = metric.signature();
    let orbit = Orbit::from_signature((p, q, 0));
    if orbit == Orbit::Degenerate {
        return Err(Error::Unstable(format!("induced metric has signature ({p},{q})")));
    }
    let mut fourform = hodge_star(&metric, phi);
    if orientation < 0 {
        fourform = fourform.neg();
    }
    Ok(G2Structure { threeform: phi.clone(), fourform, metric, orbit, orientation })
}

/// Orbit class of a 4-form from the closed-form metric.
pub fn classify_4<T: Scalar>(psi: &ConstForm<T>) -> Orbit {
    match metric_from_4form_closed(psi) {
        Ok(m) => Orbit::from_signature((m.signature().0, m.signature().1, 0)),
        Err(_) => Orbit::Degenerate,
    }
}

/// Structure of a stable 4-form by the closed-form dual 3-vector construction.
pub fn structure_from_4form_closed<T: Scalar>(psi: &ConstForm<T>) -> Result<G2Structure<T>> {
    if psi.grade() != 4 {
        return Err(Error::Grade(format!("expected a 4-form, got degree {}", psi.grade())));
    }
    let metric = metric_from_4form_closed(psi)?;
    let (p, q) = metric.signature();
    let orbit = Orbit::from_signature((p, q, 0));
    if orbit == Orbit::Degenerate {
        return Err(Error::Unstable(format!("induced metric has signature ({p},{q})")));
    }
    let threeform = hodge_star(&metric, psi);
    Ok(G2Structure { threeform, fourform: psi.clone(), metric, orbit, orientation: 1 })
}

/// Starting point of the fixed-point recovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seed {
    /// g0 = identity.
    Euclidean,
    /// The closed-form metric of the dual 3-vector.
    DualThreeVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: Seed,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { tolerance: 1e-12, max_iters: 50, seed: Seed::Euclidean }
    }
}

/// Result of the fixed-point metric recovery.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub structure: G2Structure<f64>,
    pub iterations: usize,
    /// max |metric(⋆_g ψ) - g| at the returned metric.
    pub residual: f64,
    /// max |⋆φ - ψ| for the returned structure.
    pub star_residual: f64,
    /// Successive metric differences.
    pub history: Vec<f64>,
}

fn fixed_point_map(g: &Dense<f64>, psi: &ConstForm<f64>) -> Option<Dense<f64>> {
    let m = Metric7::new(g.clone()).ok()?;
    let phi = hodge_star(&m, psi);
    let (next, _) = metric_from_3form(&phi).ok()?;
    let out = next.matrix().clone();
    out.data.iter().all(|x| x.is_finite()).then_some(out)
}

fn frobenius(m: &Dense<f64>) -> f64 {
    m.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Step (1 - L)^{-1} r using the linearisation L at a fixed point: -1/3 on pure trace, 2 on trace-free.
fn preconditioned_step(g: &Dense<f64>, r: &Dense<f64>) -> Result<Dense<f64>> {
    let ginv = g.inverse().ok_or(Error::DegenerateMetric)?;
    let tr = ginv.mul(r).trace() / 7.0;
    let r_trace = g.scale(&tr);
    let r_free = r.sub(&r_trace);
    Ok(r_trace.scale(&0.75).sub(&r_free))
}

/// Newton step for R(g) = metric(⋆_g ψ) - g with a forward-difference Jacobian on symmetric matrices.
fn newton_step(g: &Dense<f64>, r: &Dense<f64>, psi: &ConstForm<f64>) -> Option<Dense<f64>> {
    let pairs: Vec<(usize, usize)> = (0..7).flat_map(|i| (i..7).map(move |j| (i, j))).collect();
    let h = 1e-7 * g.max_abs().max(1.0);
    let r0: Vec<f64> = pairs.iter().map(|&(i, j)| *r.get(i, j)).collect();
    let mut jac = Dense::zeros(28, 28);
    for (c, &(i, j)) in pairs.iter().enumerate() {
        let mut gp = g.clone();
        gp.set(i, j, g.get(i, j) + h);
        gp.set(j, i, g.get(i, j) + h);
        let rp = fixed_point_map(&gp, psi)?.sub(&gp);
        for (k, &(a, b)) in pairs.iter().enumerate() {
            jac.set(k, c, (rp.get(a, b) - r0[k]) / h);
        }
    }
    let delta = jac.inverse()?.mul_vec(&r0);
    let mut step = Dense::zeros(7, 7);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        step.set(i, j, -delta[k]);
        step.set(j, i, -delta[k]);
    }
    step.data.iter().all(|x| x.is_finite()).then_some(step)
}

/// Recover the metric of a stable 4-form as the fixed point of g ↦ metric(⋆_g ψ).
///
/// The plain iteration is unstable (its linearisation has eigenvalues -1/3 on pure-trace and 2 on
/// trace-free directions). Each step therefore tries a Newton update with a difference Jacobian,
/// then the update (1 - L)^{-1} r, halving the step until the residual norm decreases.
///
/// If the iteration from the seed fails, the solve is continued along the segment from the model
/// form of the same orbit type (whose metric is known) to ψ, re-seeding each sub-step with the
/// previous solution. All phases count towards `iterations` and `max_iters` bounds each sub-solve.
pub fn metric_from_4form(psi: &ConstForm<f64>, opts: &FixedPointOptions) -> Result<Recovery> {
    if psi.grade() != 4 {
        return Err(Error::Grade(format!("expected a 4-form, got degree {}", psi.grade())));
    }
    let seed = match opts.seed {
        Seed::Euclidean => Dense::identity(7),
        Seed::DualThreeVector => metric_from_4form_closed(psi)?.matrix().clone(),
    };
    let direct = solve_from(psi, seed, opts);
    let Err(err) = direct else { return direct };
    let (model, model_metric) = match classify_4(psi) {
        Orbit::CompactG2 => (crate::g2structure::models::psi0_f64(), Dense::identity(7)),
        Orbit::SplitG2 => {
            let d = crate::g2structure::models::split_diagonal();
            (crate::g2structure::models::psi_tilde0_f64(), Dense::from_fn(7, 7, |i, j| if i == j { d[i] } else { 0.0 }))
        }
        Orbit::Degenerate => return Err(err),
    };
    let mut g = model_metric;
    let mut s = 0.0_f64;
    let mut ds = 0.25_f64;
    let mut total = 0;
    let mut history = Vec::new();
    while s < 1.0 {
        let next = (s + ds).min(1.0);
        let target = model.scale(&(1.0 - next)).axpy(&next, psi);
        match solve_from(&target, g.clone(), opts) {
            Ok(rec) => {
                total += rec.iterations;
                history.extend(rec.history.iter().copied());
                g = rec.structure.metric.matrix().clone();
                s = next;
                ds = (ds * 2.0).min(0.5);
            }
            Err(_) if ds > 1.0 / 1024.0 => ds *= 0.5,
            Err(_) => return Err(err),
        }
    }
    let mut rec = solve_from(psi, g, opts)?;
    rec.iterations += total;
    history.extend(rec.history.iter().copied());
    rec.history = history;
    Ok(rec)
}

fn solve_from(psi: &ConstForm<f64>, seed: Dense<f64>, opts: &FixedPointOptions) -> Result<Recovery> {
    let mut g = seed;
    let fail = |iterations: usize, residual: f64| Error::NoConvergence { iterations, residual };
    let Some(fg) = fixed_point_map(&g, psi) else { return Err(fail(0, f64::INFINITY)) };
    let mut r = fg.sub(&g);
    let mut res = r.max_abs();
    let mut merit = frobenius(&r);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = res <= opts.tolerance;
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let mut accepted = None;
        'dirs: for attempt in 0..2 {
            let step = if attempt == 0 {
                preconditioned_step(&g, &r)?
            } else {
                match newton_step(&g, &r, psi) {
                    Some(s) => s,
                    None => break,
                }
            };
            let mut lambda = 1.0;
            while lambda >= 1e-6 {
                let cand = g.add(&step.scale(&lambda));
                if let Some(fc) = fixed_point_map(&cand, psi) {
                    let rc = fc.sub(&cand);
                    let m = frobenius(&rc);
                    if m < merit {
                        accepted = Some((cand, fc, rc, m));
                        break 'dirs;
                    }
                }
                lambda *= 0.5;
            }
        }
        let Some((cand, _fc, rc, m)) = accepted else {
            if res <= 100.0 * opts.tolerance * g.max_abs().max(1.0) {
                // Stalled at rounding level.
                converged = true;
                break;
            }
            return Err(fail(iterations, res));
        };
        let diff = cand.sub(&g).max_abs();
        history.push(diff);
        g = cand;
        r = rc;
        merit = m;
        res = r.max_abs();
        converged = diff <= opts.tolerance || res <= opts.tolerance;
    }
    if !converged {
        return Err(fail(iterations, res));
    }
    let metric = Metric7::new(g)?;
    let (p, q) = metric.signature();
    let orbit = Orbit::from_signature((p, q, 0));
    if orbit == Orbit::Degenerate {
        return Err(Error::Unstable(format!("recovered metric has signature ({p},{q})")));
    }
    let threeform = hodge_star(&metric, psi);
    let star_residual = hodge_star(&metric, &threeform).sub(psi).max_abs();
    let structure = G2Structure { threeform, fourform: psi.clone(), metric, orbit, orientation: 1 };
    Ok(Recovery { structure, iterations, residual: res, star_residual, history })
}

/// Linear map x ↦ A x as a matrix of f64 from a closure over entries.
pub fn mat7_from_fn(f: impl Fn(usize, usize) -> f64) -> Mat7<f64> {
    std::array::from_fn(|i| std::array::from_fn(|j| f(i, j)))
}
