use crate::error::{Error, Result};
use crate::exterior::{basis, induced_matrix, ConstForm, Mat7, MultiIndex};
use crate::exterior::form::{dense_to_mat7, mat7_to_dense};
use crate::linalg::Dense;
use crate::scalar::Scalar;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Symmetric bilinear form on R^7 with its signature and volume density |det|^{1/2}.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric7<T = f64> {
    matrix: Dense<T>,
    inverse: Dense<T>,
    signature: (usize, usize),
    voldensity: T,
}

impl<T: Scalar> Metric7<T> {
    pub fn new(matrix: Dense<T>) -> Result<Self> {
        assert_eq!((matrix.rows, matrix.cols), (7, 7));
        let (p, q, z) = matrix.inertia();
        if z > 0 {
            return Err(Error::DegenerateMetric);
        }
        let inverse = matrix.inverse().ok_or(Error::DegenerateMetric)?;
        let det = matrix.determinant();
        let abs = if det.signum_i32() < 0 { -det } else { det };
        let voldensity = abs
            .nth_root(2)
            .ok_or_else(|| Error::Invalid("volume density is not representable exactly; use f64".into()))?;
        Ok(Metric7 { matrix, inverse, signature: (p, q), voldensity })
    }

    pub fn from_mat7(m: &Mat7<T>) -> Result<Self> {
        Self::new(mat7_to_dense(m))
    }

    pub fn euclidean() -> Self {
        Self::new(Dense::identity(7)).unwrap()
    }

    pub fn diagonal(d: &[T; 7]) -> Result<Self> {
        Self::new(Dense::from_fn(7, 7, |i, j| if i == j { d[i].clone() } else { T::zero() }))
    }

    pub fn matrix(&self) -> &Dense<T> {
        &self.matrix
    }

    pub fn inverse(&self) -> &Dense<T> {
        &self.inverse
    }

    pub fn to_mat7(&self) -> Mat7<T> {
        dense_to_mat7(&self.matrix)
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn voldensity(&self) -> &T {
        &self.voldensity
    }

    pub fn is_riemannian(&self) -> bool {
        self.signature == (7, 0)
    }

    /// Congruence transform Aᵀ g A, the metric pulled back by x ↦ A x.
    pub fn pullback(&self, a: &Mat7<T>) -> Result<Self> {
        let am = mat7_to_dense(a);
        Self::new(am.transpose().mul(&self.matrix).mul(&am))
    }

    pub fn to_f64(&self) -> Metric7<f64> {
        Metric7 {
            matrix: self.matrix.to_f64(),
            inverse: self.inverse.to_f64(),
            signature: self.signature,
            voldensity: self.voldensity.to_f64(),
        }
    }
}

impl Serialize for Metric7<f64> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| (0..7).map(|j| *self.matrix.get(i, j)).collect()).collect();
        let mut st = s.serialize_struct("Metric7", 3)?;
        st.serialize_field("matrix", &rows)?;
        st.serialize_field("signature", &[self.signature.0, self.signature.1])?;
        st.serialize_field("voldensity", &self.voldensity)?;
        st.end()
    }
}

/// b_ij = (1/6) (e_i ⌟ φ) ∧ (e_j ⌟ φ) ∧ φ / dx^{1...7}.
pub fn bilinear_3<T: Scalar>(phi: &ConstForm<T>) -> Dense<T> {
    assert_eq!(phi.grade(), 3);
    let contractions: Vec<ConstForm<T>> = (1..=7).map(|i| phi.interior_axis(i).unwrap()).collect();
    let sixth = T::from_ratio(1, 6);
    let mut b = Dense::zeros(7, 7);
    for i in 0..7 {
        let left = contractions[i].wedge(phi);
        for j in i..7 {
            let v = left.wedge(&contractions[j]).top() * sixth.clone();
            b.set(i, j, v.clone());
            b.set(j, i, v);
        }
    }
    b
}

/// Real 9th root with sign.
fn signed_root<T: Scalar>(v: &T, n: u32) -> Option<T> {
    if v.signum_i32() < 0 {
        (-v.clone()).nth_root(n).map(|r| -r)
    } else {
        v.nth_root(n)
    }
}

/// Metric g = b / det(b)^{1/9} of a stable 3-form, with the orientation given by sign det(b).
pub fn metric_from_3form<T: Scalar>(phi: &ConstForm<T>) -> Result<(Metric7<T>, i32)> {
    let b = bilinear_3(phi);
    let det = b.determinant();
    if det.negligible(b.max_abs().powi(7)) {
        return Err(Error::Unstable("the bilinear form of the 3-form is degenerate".into()));
    }
    let root = signed_root(&det, 9)
        .ok_or_else(|| Error::Invalid("normalisation is not representable exactly; use f64".into()))?;
    let g = b.scale(&(T::one() / root));
    Ok((Metric7::new(g)?, det.signum_i32()))
}

/// Dual 3-vector of a 4-form, ψ̂^I = sign(I, I^c) ψ_{I^c}, stored in the grade-3 coefficient layout.
pub fn dual_three_vector<T: Scalar>(psi: &ConstForm<T>) -> ConstForm<T> {
    assert_eq!(psi.grade(), 4);
    psi.complement_dual()
}

/// b*^{ij} = (1/6)(ξ_i ⌟ ψ̂)∧(ξ_j ⌟ ψ̂)∧ψ̂ on covectors.
pub fn bilinear_4<T: Scalar>(psi: &ConstForm<T>) -> Dense<T> {
    bilinear_3(&dual_three_vector(psi))
}

/// Closed-form metric of a stable 4-form: g = |det b*|^{1/6} (b*)^{-1}.
pub fn metric_from_4form_closed<T: Scalar>(psi: &ConstForm<T>) -> Result<Metric7<T>> {
    let b = bilinear_4(psi);
    let det = b.determinant();
    if det.negligible(b.max_abs().powi(7)) {
        return Err(Error::Unstable("the bilinear form of the 4-form is degenerate".into()));
    }
    let abs = if det.signum_i32() < 0 { -det } else { det };
    let root = abs
        .nth_root(6)
        .ok_or_else(|| Error::Invalid("normalisation is not representable exactly; use f64".into()))?;
    let inv = b.inverse().ok_or(Error::DegenerateMetric)?;
    Metric7::new(inv.scale(&root))
}

/// Volume density |det b*|^{1/12} of a 4-form together with the signature of b*.
pub fn voldensity_4(psi: &ConstForm<f64>) -> (f64, (usize, usize, usize)) {
    let b = bilinear_4(psi);
    let det = b.determinant();
    (det.abs().powf(1.0 / 12.0), b.inertia())
}

/// Volume density |det b|^{1/9} of a 3-form, the sign of det b, and the signature of b.
pub fn voldensity_3(phi: &ConstForm<f64>) -> (f64, i32, (usize, usize, usize)) {
    let b = bilinear_3(phi);
    let det = b.determinant();
    (det.abs().powf(1.0 / 9.0), det.signum_i32(), b.inertia())
}

/// Hodge star ⋆: Λ^p → Λ^{7-p} of the metric and the standard orientation dx^{1...7}.
pub fn hodge_star<T: Scalar>(m: &Metric7<T>, a: &ConstForm<T>) -> ConstForm<T> {
    let p = a.grade();
    let raise = induced_matrix(&m.to_inverse_mat7(), p);
    let raised = raise.mul_vec(a.coeffs());
    let mut out = ConstForm::zero(7 - p);
    for (k, idx) in basis(p).iter().enumerate() {
        if raised[k].is_zero() {
            continue;
        }
        let comp = idx.complement();
        let s = idx.wedge_sign(comp);
        let v = raised[k].clone() * m.voldensity().clone();
        out.add_to(comp, if s > 0 { v } else { -v });
    }
    out
}

impl<T: Scalar> Metric7<T> {
    fn to_inverse_mat7(&self) -> Mat7<T> {
        dense_to_mat7(&self.inverse)
    }

    /// Induced pairing ⟨a, b⟩ on p-forms, defined by a ∧ ⋆b = ⟨a, b⟩ vol.
    pub fn pairing(&self, a: &ConstForm<T>, b: &ConstForm<T>) -> T {
        assert_eq!(a.grade(), b.grade());
        a.wedge(&hodge_star(self, b)).top() / self.voldensity.clone()
    }

    /// Gram matrix of the induced pairing on Λ^p in the standard basis.
    pub fn pairing_matrix(&self, p: usize) -> Dense<T> {
        induced_matrix(&self.to_inverse_mat7(), p)
    }
}

/// Top-degree coefficient of a ∧ b for complementary grades.
pub fn top_pairing<T: Scalar>(a: &ConstForm<T>, b: &ConstForm<T>) -> T {
    assert_eq!(a.grade() + b.grade(), 7);
    let mut acc = T::zero();
    for (i, x) in a.terms() {
        let j = i.complement();
        let y = b.coeff(j);
        if y.is_zero() {
            continue;
        }
        let s = i.wedge_sign(j);
        let v = x.clone() * y.clone();
        acc = if s > 0 { acc + v } else { acc - v };
    }
    acc
}

/// Index of dx^{1...7}.
pub fn top_index() -> MultiIndex {
    MultiIndex::FULL
}
