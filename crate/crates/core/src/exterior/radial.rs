//! Radial profiles and Taylor-jet differentiation of the smooth bump.

use serde::{Deserialize, Serialize};

/// Truncated Taylor series c_0 + c_1 h + ... + c_{n-1} h^{n-1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(v: f64, n: usize) -> Self {
        let mut c = vec![0.0; n];
        c[0] = v;
        Jet(c)
    }

    /// Affine jet v + slope h.
    pub fn affine(v: f64, slope: f64, n: usize) -> Self {
        let mut c = vec![0.0; n];
        c[0] = v;
        if n > 1 {
            c[1] = slope;
        }
        Jet(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.len();
        let mut c = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(c)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet(self.0.iter().map(|a| a * s).collect())
    }

    pub fn recip(&self) -> Jet {
        let n = self.len();
        let a = &self.0;
        let mut q = vec![0.0; n];
        q[0] = 1.0 / a[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| a[j] * q[k - j]).sum();
            q[k] = -s / a[0];
        }
        Jet(q)
    }

    pub fn exp(&self) -> Jet {
        let n = self.len();
        let a = &self.0;
        let mut e = vec![0.0; n];
        e[0] = a[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    /// j-th derivative at the expansion point.
    pub fn derivative(&self, j: usize) -> f64 {
        let fact: f64 = (1..=j).map(|x| x as f64).product();
        self.0[j] * fact
    }
}

/// Jet of x ↦ exp(-1/x) for x > 0, extended by zero.
fn plateau_jet(x: &Jet) -> Jet {
    let n = x.len();
    if x.0[0] <= 1.0 / 700.0 {
        return Jet::constant(0.0, n);
    }
    x.recip().scale(-1.0).exp()
}

/// Smoothstep S(u) = h(u) / (h(u) + h(1-u)) with h(x) = exp(-1/x): S = 0 for u ≤ 0, S = 1 for u ≥ 1.
pub fn smoothstep_jet(u: &Jet) -> Jet {
    let n = u.len();
    let u0 = u.0[0];
    if u0 <= 0.0 {
        return Jet::constant(0.0, n);
    }
    if u0 >= 1.0 {
        return Jet::constant(1.0, n);
    }
    let one_minus = Jet::constant(1.0, n).add(&u.scale(-1.0));
    let h0 = plateau_jet(u);
    let h1 = plateau_jet(&one_minus);
    let denom = h0.add(&h1);
    h0.mul(&denom.recip())
}

/// Smooth radial cutoff f(r) = S((b - r/η)/(b - a)): f = 1 on [0, aη], f = 0 on [bη, ∞).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
}

impl BumpProfile {
    pub const DEFAULT_A: f64 = 0.3;
    pub const DEFAULT_B: f64 = 0.8;

    pub fn new(eta: f64) -> Self {
        BumpProfile { a: Self::DEFAULT_A, b: Self::DEFAULT_B, eta }
    }

    pub fn with_plateau(a: f64, b: f64, eta: f64) -> Self {
        assert!(0.0 < a && a < b && b < 1.0, "plateau fractions must satisfy 0 < a < b < 1");
        assert!(eta > 0.0);
        BumpProfile { a, b, eta }
    }

    /// Radii where the profile stops being polynomial-smooth: aη and bη.
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.a * self.eta, self.b * self.eta]
    }

    /// Outer radius of the support.
    pub fn support(&self) -> f64 {
        self.b * self.eta
    }

    /// Derivatives f, f', ..., f^(n-1) at r.
    pub fn derivatives(&self, r: f64, n: usize) -> Vec<f64> {
        let w = self.eta * (self.b - self.a);
        let u = Jet::affine((self.b - r / self.eta) / (self.b - self.a), -1.0 / w, n);
        let s = smoothstep_jet(&u);
        (0..n).map(|j| s.derivative(j)).collect()
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivatives(r, 1)[0]
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.derivatives(r, 2)[1]
    }

    /// (D^k f)(r) with D = (1/r) d/dr.
    pub fn reduced_derivative(&self, k: usize, r: f64) -> f64 {
        if k == 0 {
            return self.value(r);
        }
        if r <= self.a * self.eta || r >= self.b * self.eta {
            return 0.0;
        }
        let d = self.derivatives(r, k + 1);
        let c = reduced_coefficients(k);
        c.iter().enumerate().map(|(j, cj)| cj * d[j] * r.powi(j as i32 - 2 * k as i32)).sum()
    }
}

/// Coefficients c_j with D^k f = Σ_j c_j f^(j) r^(j - 2k).
pub fn reduced_coefficients(k: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for level in 0..k {
        let mut next = vec![0.0; c.len() + 1];
        for (j, cj) in c.iter().enumerate() {
            next[j + 1] += cj;
            next[j] += (j as f64 - 2.0 * level as f64) * cj;
        }
        c = next;
    }
    c
}

/// Radial factor of a structured term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RadialProfile {
    /// The constant 1.
    One,
    /// D^order f for a bump f.
    Bump { bump: BumpProfile, order: u8 },
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::One => 1.0,
            RadialProfile::Bump { bump, order } => bump.reduced_derivative(*order as usize, r),
        }
    }

    /// Profile of D applied to this one, or None when it vanishes identically.
    pub fn reduced_d(&self) -> Option<RadialProfile> {
        match self {
            RadialProfile::One => None,
            RadialProfile::Bump { bump, order } => Some(RadialProfile::Bump { bump: *bump, order: order + 1 }),
        }
    }

    pub fn support(&self) -> Option<f64> {
        match self {
            RadialProfile::One => None,
            RadialProfile::Bump { bump, .. } => Some(bump.support()),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::One => vec![],
            RadialProfile::Bump { bump, .. } => bump.breakpoints().to_vec(),
        }
    }

    /// Bit-exact key for merging like terms.
    pub fn key(&self) -> (u8, u64, u64, u64, u8) {
        match self {
            RadialProfile::One => (0, 0, 0, 0, 0),
            RadialProfile::Bump { bump, order } => {
                (1, bump.a.to_bits(), bump.b.to_bits(), bump.eta.to_bits(), *order)
            }
        }
    }
}
