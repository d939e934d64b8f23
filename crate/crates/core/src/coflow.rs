//! Laplacian coflow ∂ψ/∂t = dd*ψ of closed 4-forms on a flat 7-torus whose fields depend on at
//! most two coordinates, with torsion, pointwise volume monotonicity and the flat-ball volume bound.

use crate::error::{Error, Result};
use crate::exterior::{wedge, ConstForm, MultiIndex, Vector7};
use crate::functionals::{evaluate, FunctionalKind};
use crate::g2structure::models::{phi0_f64, psi0_f64};
use crate::g2structure::{structure_from_4form_closed, G2Structure, Orbit};
use crate::quadrature::{pairwise_sum, segment_rule, sphere_area, sphere_rule, Domain7, QuadratureSpec};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default multiple of h²/λ_max allowed as time step.
pub const DEFAULT_CFL_FACTOR: f64 = 0.1;

/// Periodic lattice over one or two active coordinates of the torus (R/LZ)⁷.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Active coordinate axes, numbered 1..=7.
    pub axes: Vec<usize>,
    /// Nodes per active axis.
    pub n: usize,
    pub period: f64,
    /// Optional Galerkin truncation: Fourier modes with |m| above the cutoff are dropped from
    /// every derivative.
    #[serde(default)]
    pub mode_cutoff: Option<usize>,
}

impl Grid {
    pub fn new(axes: &[usize], n: usize, period: f64) -> Result<Grid> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Invalid(format!("the coflow grid needs one or two active axes, got {}", axes.len())));
        }
        if axes.iter().any(|a| !(1..=7).contains(a)) || (axes.len() == 2 && axes[0] == axes[1]) {
            return Err(Error::Invalid(format!("active axes must be distinct and in 1..=7, got {axes:?}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Invalid(format!("nodes per axis must be even and at least 4, got {n}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Invalid(format!("period must be positive, got {period}")));
        }
        Ok(Grid { axes: axes.to_vec(), n, period, mode_cutoff: None })
    }

    /// One active coordinate x¹ with n nodes on the unit torus.
    pub fn line(n: usize) -> Result<Grid> {
        Grid::new(&[1], n, 1.0)
    }

    pub fn with_mode_cutoff(self, cutoff: Option<usize>) -> Grid {
        Grid { mode_cutoff: cutoff, ..self }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.axes.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Volume of the torus carried by each node.
    pub fn cell_volume(&self) -> f64 {
        self.period.powi(7) / self.len() as f64
    }

    /// Node coordinates; inactive coordinates are 0. Node k has index k mod n along the first axis.
    pub fn point(&self, node: usize) -> Vector7 {
        let mut x = [0.0; 7];
        let mut k = node;
        for &a in &self.axes {
            x[a - 1] = (k % self.n) as f64 * self.spacing();
            k /= self.n;
        }
        x
    }
}

/// Spectral differentiation along the active axes.
struct Spectral {
    n: usize,
    dims: usize,
    period: f64,
    cutoff: usize,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Spectral {
    fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            n: grid.n,
            dims: grid.axes.len(),
            period: grid.period,
            cutoff: grid.mode_cutoff.unwrap_or(grid.n / 2),
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
        }
    }

    /// ∂/∂x along active axis `k` (position in the axis list) of nodal samples.
    fn derivative(&self, values: &[f64], k: usize) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; values.len()];
        if values.iter().all(|v| *v == values[0]) {
            return out;
        }
        let stride = if k == 0 { 1 } else { n };
        let lines = values.len() / n;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for line in 0..lines {
            let start = if k == 0 { line * n } else { line };
            for (j, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(values[start + j * stride], 0.0);
            }
            self.forward.process(&mut buf);
            for (j, b) in buf.iter_mut().enumerate() {
                let m = if j < n / 2 {
                    j as f64
                } else if j == n / 2 {
                    0.0
                } else {
                    j as f64 - n as f64
                };
                let m = if m.abs() > self.cutoff as f64 { 0.0 } else { m };
                let k = 2.0 * PI * m / self.period;
                *b = Complex::new(-k * b.im, k * b.re) / n as f64;
            }
            self.inverse.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                out[start + j * stride] = b.re;
            }
        }
        debug_assert!(k < self.dims);
        out
    }
}

/// Exterior derivative Σ_a dx^a ∧ ∂_a ω of a nodal field.
pub fn grid_d(grid: &Grid, field: &[ConstForm<f64>]) -> Vec<ConstForm<f64>> {
    let sp = Spectral::new(grid);
    grid_d_with(&sp, grid, field)
}

fn grid_d_with(sp: &Spectral, grid: &Grid, field: &[ConstForm<f64>]) -> Vec<ConstForm<f64>> {
    let p = field.first().map(|f| f.grade()).unwrap_or(0);
    let mut out = vec![ConstForm::zero(p + 1); field.len()];
    let dim = field.first().map(|f| f.coeffs().len()).unwrap_or(0);
    for (k, &a) in grid.axes.iter().enumerate() {
        let dxa = ConstForm::basis(MultiIndex::of(&[a]));
        let mut partial = vec![ConstForm::zero(p); field.len()];
        for c in 0..dim {
            let samples: Vec<f64> = field.iter().map(|f| f.coeffs()[c]).collect();
            if samples.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (node, v) in sp.derivative(&samples, k).into_iter().enumerate() {
                partial[node].coeffs_mut()[c] = v;
            }
        }
        for (o, part) in out.iter_mut().zip(&partial) {
            *o = o.add(&wedge(&dxa, part));
        }
    }
    out
}

/// Closed 4-form per node of a periodic grid, with the accumulated primitive of ψ(t) − ψ(0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoflowState {
    pub grid: Grid,
    pub psi: Vec<ConstForm<f64>>,
    pub t: f64,
    pub initial: Vec<ConstForm<f64>>,
    /// ∫₀ᵗ d*ψ, so that dΠ = ψ(t) − ψ(0).
    pub primitive: Vec<ConstForm<f64>>,
}

impl CoflowState {
    /// Nodal values ψ_k; the field must be closed for the coflow to be meaningful.
    pub fn new(grid: Grid, psi: Vec<ConstForm<f64>>) -> Result<CoflowState> {
        if psi.len() != grid.len() {
            return Err(Error::Invalid(format!("expected {} nodal values, got {}", grid.len(), psi.len())));
        }
        if psi.iter().any(|f| f.grade() != 4) {
            return Err(Error::Grade("coflow states carry 4-forms".into()));
        }
        let primitive = vec![ConstForm::zero(3); psi.len()];
        Ok(CoflowState { grid, initial: psi.clone(), psi, t: 0.0, primitive })
    }

    pub fn constant(grid: Grid, psi: &ConstForm<f64>) -> Result<CoflowState> {
        let n = grid.len();
        CoflowState::new(grid, vec![psi.clone(); n])
    }

    /// base + s·dα for a periodic 3-form potential α sampled on the grid.
    pub fn from_potential(grid: Grid, base: &ConstForm<f64>, s: f64, alpha: impl Fn(&Vector7) -> ConstForm<f64>) -> Result<CoflowState> {
        let a: Vec<ConstForm<f64>> = (0..grid.len()).map(|k| alpha(&grid.point(k))).collect();
        if a.iter().any(|f| f.grade() != 3) {
            return Err(Error::Grade("the potential must be a 3-form".into()));
        }
        let da = grid_d(&grid, &a);
        let psi = da.iter().map(|d| base.axpy(&s, d)).collect();
        CoflowState::new(grid, psi)
    }

    /// ψ0 + s·d(f φ0) with f = (L/2π) sin(2πx/L) times cos(2πy/L) on a second active axis, the
    /// periodic analogue of the P0+ bump.
    pub fn perturbed_psi0(grid: Grid, s: f64) -> Result<CoflowState> {
        let (l, axes) = (grid.period, grid.axes.clone());
        let phi0 = phi0_f64();
        CoflowState::from_potential(grid, &psi0_f64(), s, move |x| {
            let mut f = l / (2.0 * PI) * (2.0 * PI * x[axes[0] - 1] / l).sin();
            if let Some(b) = axes.get(1) {
                f *= (2.0 * PI * x[b - 1] / l).cos();
            }
            phi0.scale(&f)
        })
    }

    /// Pointwise G2 structures; fails at the first node outside the compact orbit.
    pub fn structures(&self) -> Result<Vec<G2Structure<f64>>> {
        self.psi
            .iter()
            .enumerate()
            .map(|(k, psi)| {
                let s = structure_from_4form_closed(psi).map_err(|e| self.node_error(k, &e.to_string()))?;
                if s.orbit != Orbit::CompactG2 {
                    return Err(self.node_error(k, &format!("orbit {:?}", s.orbit)));
                }
                Ok(s)
            })
            .collect()
    }

    fn node_error(&self, k: usize, detail: &str) -> Error {
        Error::OrbitViolation { point: self.grid.point(k), detail: format!("metric recovery failed at node {k}: {detail}") }
    }

    /// H⁴ over the torus, the periodic trapezoid sum of the volume densities.
    pub fn functional(&self) -> Result<f64> {
        let s = self.structures()?;
        Ok(self.functional_from(&s))
    }

    fn functional_from(&self, s: &[G2Structure<f64>]) -> f64 {
        let v: Vec<f64> = s.iter().map(|s| *s.voldensity()).collect();
        pairwise_sum(&v) * self.grid.cell_volume()
    }

    /// Largest eigenvalue of g⁻¹ over the nodes.
    pub fn max_inverse_metric_eigenvalue(&self) -> Result<f64> {
        let s = self.structures()?;
        Ok(max_inverse_eigenvalue(&s))
    }

    /// Stability bound factor·h²/λ_max(g⁻¹) for the explicit step.
    pub fn cfl_bound(&self, factor: f64) -> Result<f64> {
        Ok(factor * self.grid.spacing().powi(2) / self.max_inverse_metric_eigenvalue()?)
    }
}

fn max_inverse_eigenvalue(s: &[G2Structure<f64>]) -> f64 {
    s.iter()
        .map(|s| {
            let inv = s.metric.inverse();
            let m = nalgebra::DMatrix::from_fn(7, 7, |i, j| *inv.get(i, j));
            m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Torsion fields dψ and d⋆ψ with their sup norms over the nodes (Euclidean coefficient norm).
#[derive(Clone, Debug, Serialize)]
pub struct TorsionReport {
    #[serde(skip)]
    pub d_psi: Vec<ConstForm<f64>>,
    #[serde(skip)]
    pub d_star_psi: Vec<ConstForm<f64>>,
    pub d_psi_norm: f64,
    pub d_star_psi_norm: f64,
}

impl TorsionReport {
    pub fn is_torsion_free(&self, tol: f64) -> bool {
        self.d_psi_norm <= tol && self.d_star_psi_norm <= tol
    }
}

fn sup_norm(f: &[ConstForm<f64>]) -> f64 {
    f.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn torsion(state: &CoflowState) -> Result<TorsionReport> {
    let s = state.structures()?;
    Ok(torsion_from(state, &s, &Spectral::new(&state.grid)))
}

fn torsion_from(state: &CoflowState, s: &[G2Structure<f64>], sp: &Spectral) -> TorsionReport {
    let d_psi = grid_d_with(sp, &state.grid, &state.psi);
    let phi: Vec<ConstForm<f64>> = s.iter().map(|s| s.threeform.clone()).collect();
    let d_star_psi = grid_d_with(sp, &state.grid, &phi);
    TorsionReport { d_psi_norm: sup_norm(&d_psi), d_star_psi_norm: sup_norm(&d_star_psi), d_psi, d_star_psi }
}

/// d*ψ = (−1)^p ⋆d⋆ψ with the nodal metrics, and the velocity dd*ψ.
struct Velocity {
    codifferential: Vec<ConstForm<f64>>,
    velocity: Vec<ConstForm<f64>>,
}

fn velocity(state: &CoflowState, s: &[G2Structure<f64>], sp: &Spectral) -> Velocity {
    let phi: Vec<ConstForm<f64>> = s.iter().map(|s| s.threeform.clone()).collect();
    let dphi = grid_d_with(sp, &state.grid, &phi);
    // (−1)^p with p = 4.
    let codifferential: Vec<ConstForm<f64>> = s.iter().zip(&dphi).map(|(s, d)| s.star(d)).collect();
    let velocity = grid_d_with(sp, &state.grid, &codifferential);
    Velocity { codifferential, velocity }
}

/// Diagnostics of one explicit step.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub functional: f64,
    /// min over nodes of (v(ψ_{n+1}) − v(ψ_n))/Δt.
    pub min_volume_rate: f64,
    pub max_volume_rate: f64,
    /// Torsion norms at the end of the step.
    pub d_psi_norm: f64,
    pub d_star_psi_norm: f64,
}

/// One explicit Euler step ψ ← ψ + Δt dd*ψ with the default stability factor.
pub fn coflow_step(state: &CoflowState, dt: f64) -> Result<CoflowState> {
    coflow_step_with(state, dt, DEFAULT_CFL_FACTOR).map(|r| r.0)
}

/// Explicit Euler step with a configurable stability factor; also returns the step diagnostics.
pub fn coflow_step_with(state: &CoflowState, dt: f64, cfl_factor: f64) -> Result<(CoflowState, StepRecord)> {
    let sp = Spectral::new(&state.grid);
    let s = state.structures()?;
    let (next, rates, next_s) = advance(state, &s, &sp, dt, cfl_factor)?;
    let tor = torsion_from(&next, &next_s, &sp);
    let record = StepRecord {
        t: next.t,
        functional: next.functional_from(&next_s),
        min_volume_rate: rates.iter().cloned().fold(f64::INFINITY, f64::min),
        max_volume_rate: rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        d_psi_norm: tor.d_psi_norm,
        d_star_psi_norm: tor.d_star_psi_norm,
    };
    Ok((next, record))
}

type Advanced = (CoflowState, Vec<f64>, Vec<G2Structure<f64>>);

fn advance(state: &CoflowState, s: &[G2Structure<f64>], sp: &Spectral, dt: f64, cfl_factor: f64) -> Result<Advanced> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let bound = cfl_factor * state.grid.spacing().powi(2) / max_inverse_eigenvalue(s);
    if dt > bound {
        return Err(Error::Invalid(format!("time step {dt:e} exceeds the stability bound {bound:e}")));
    }
    let v = velocity(state, s, sp);
    let psi: Vec<ConstForm<f64>> = state.psi.iter().zip(&v.velocity).map(|(p, u)| p.axpy(&dt, u)).collect();
    let primitive = state.primitive.iter().zip(&v.codifferential).map(|(p, c)| p.axpy(&dt, c)).collect();
    let next = CoflowState { grid: state.grid.clone(), psi, t: state.t + dt, initial: state.initial.clone(), primitive };
    let mut next_s = Vec::with_capacity(s.len());
    for (k, psi) in next.psi.iter().enumerate() {
        match structure_from_4form_closed(psi) {
            Ok(st) if st.orbit == Orbit::CompactG2 => next_s.push(st),
            _ => return Err(Error::OrbitExit { node: k, suggested_dt: 0.5 * dt }),
        }
    }
    let rates = s.iter().zip(&next_s).map(|(a, b)| (b.voldensity() - a.voldensity()) / dt).collect();
    Ok((next, rates, next_s))
}

/// Run `steps` explicit steps, returning the final state and per-step records.
pub fn run(state: &CoflowState, dt: f64, steps: usize, cfl_factor: f64) -> Result<(CoflowState, Vec<StepRecord>)> {
    let mut cur = state.clone();
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, rec) = coflow_step_with(&cur, dt, cfl_factor)?;
        records.push(rec);
        cur = next;
    }
    Ok((cur, records))
}

/// sup over nodes of |dΠ − (ψ(t) − ψ(0))| for the accumulated primitive Π.
pub fn exactness_residual(state: &CoflowState) -> f64 {
    let d = grid_d(&state.grid, &state.primitive);
    d.iter()
        .zip(state.psi.iter().zip(&state.initial))
        .map(|(dp, (p, p0))| dp.sub(&p.sub(p0)).max_abs())
        .fold(0.0, f64::max)
}

/// Pointwise volume growth over one explicit step.
#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub dt: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    /// min over nodes of the first-order rate ¼⟨dd*ψ, ψ⟩ v(ψ).
    pub min_first_order_rate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn volume_monotonicity_check(state: &CoflowState, dt: f64, tolerance: f64) -> Result<MonotonicityReport> {
    let sp = Spectral::new(&state.grid);
    let s = state.structures()?;
    let (_, rates, _) = advance(state, &s, &sp, dt, f64::INFINITY)?;
    let first = first_order_rates(state, &s, &sp);
    let min_rate = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MonotonicityReport {
        dt,
        min_rate,
        max_rate: rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min_first_order_rate: first.iter().cloned().fold(f64::INFINITY, f64::min),
        tolerance,
        pass: min_rate >= -tolerance,
    })
}

/// d/dt v(ψ) = ¼⟨∂ψ/∂t, ψ⟩_g v(ψ) at each node.
fn first_order_rates(state: &CoflowState, s: &[G2Structure<f64>], sp: &Spectral) -> Vec<f64> {
    let v = velocity(state, s, sp);
    s.iter().zip(&v.velocity).map(|(s, u)| 0.25 * s.pairing(u, &s.fourform) * s.voldensity()).collect()
}

/// First-order convergence of the measured rates to the exact derivative as Δt is halved.
#[derive(Clone, Debug, Serialize)]
pub struct RichardsonReport {
    pub dts: Vec<f64>,
    /// max over nodes of |measured rate − first-order rate| for each Δt.
    pub errors: Vec<f64>,
    /// Successive error ratios, ≈ 2 for a first-order scheme.
    pub ratios: Vec<f64>,
}

pub fn richardson_check(state: &CoflowState, dt: f64, halvings: usize) -> Result<RichardsonReport> {
    let sp = Spectral::new(&state.grid);
    let s = state.structures()?;
    let exact = first_order_rates(state, &s, &sp);
    let mut dts = Vec::new();
    let mut errors = Vec::new();
    let mut h = dt;
    for _ in 0..=halvings {
        let (_, rates, _) = advance(state, &s, &sp, h, f64::INFINITY)?;
        errors.push(rates.iter().zip(&exact).map(|(r, e)| (r - e).abs()).fold(0.0, f64::max));
        dts.push(h);
        h *= 0.5;
    }
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(RichardsonReport { dts, errors, ratios })
}

/// Flat-ball volume against the sphere-area bound ∫₀^η (1 − r/η)^k dr · Area(S⁶_η).
#[derive(Clone, Debug, Serialize)]
pub struct HkReport {
    pub eta: f64,
    /// Vol(B_η) of ψ0.
    pub ball_volume: f64,
    /// Area(S⁶_η) in the metric of ψ0.
    pub sphere_area: f64,
    /// (η/7)·Area(S⁶_η).
    pub stated_bound: f64,
    /// ∫₀^η (1 − r/η)⁶ dr · Area.
    pub exponent6_bound: f64,
    /// ∫₀^η (1 − r/η)⁷ dr · Area.
    pub exponent7_bound: f64,
    /// |Vol − (η/7)·Area| / Vol.
    pub relative_gap: f64,
    pub saturated: bool,
}

pub fn hk_bound_check(eta: f64) -> Result<HkReport> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Invalid(format!("radius must be positive, got {eta}")));
    }
    let psi0 = psi0_f64();
    let domain = Domain7::Ball { center: [0.0; 7], radius: eta };
    let ball_volume = evaluate(FunctionalKind::H4, &domain, &crate::exterior::FormField::constant(&psi0), &QuadratureSpec::radial_1d(8))?.value;
    let s = structure_from_4form_closed(&psi0)?;
    let ginv = s.metric.inverse();
    let sqrt_det = s.metric.voldensity();
    // Area element of the Euclidean unit sphere induced by g: √det g · |n|_{g⁻¹}.
    let area_unit: f64 = sphere_rule()
        .iter()
        .map(|(u, w)| {
            let nn: f64 = (0..7).map(|i| (0..7).map(|j| u[i] * ginv.get(i, j) * u[j]).sum::<f64>()).sum();
            w * sqrt_det * nn.sqrt()
        })
        .sum();
    let sphere_area = area_unit * sphere_area() * eta.powi(6);
    let radial = |k: i32| -> f64 { segment_rule(0.0, eta, &[], 8).iter().map(|(r, w)| w * (1.0 - r / eta).powi(k)).sum() };
    let stated_bound = eta / 7.0 * sphere_area;
    let relative_gap = (ball_volume - stated_bound).abs() / ball_volume;
    Ok(HkReport {
        eta,
        ball_volume,
        sphere_area,
        stated_bound,
        exponent6_bound: radial(6) * sphere_area,
        exponent7_bound: radial(7) * sphere_area,
        relative_gap,
        saturated: relative_gap <= 1e-12,
    })
}
