use super::metric::Metric7;
use super::structure::{G2Structure, Orbit};
use crate::error::{Error, Result};
use crate::exterior::form::{mat7_to_dense, Mat7};
use crate::exterior::{basis, ConstForm, MultiIndex};
use crate::linalg::Dense;

/// Certified Cartan involution of a split structure.
#[derive(Clone, Debug)]
pub struct CartanInvolution {
    pub map: Mat7<f64>,
    /// h(u, v) = g(u, C v), positive definite.
    pub h: Metric7<f64>,
}

/// Check that C preserves φ̃, squares to one, and that g(-, C-) is symmetric positive definite.
pub fn cartan_check(s: &G2Structure<f64>, c: &Mat7<f64>, tol: f64) -> Result<CartanInvolution> {
    if s.orbit != Orbit::SplitG2 {
        return Err(Error::Invalid("Cartan involutions are defined for split structures".into()));
    }
    let pulled = s.threeform.pullback(c);
    let res = pulled.sub(&s.threeform).max_abs();
    if res > tol {
        return Err(Error::NotAutomorphism(res));
    }
    let cm = mat7_to_dense(c);
    let sq = cm.mul(&cm).sub(&Dense::identity(7)).max_abs();
    if sq > tol {
        return Err(Error::NotCartan(format!("map is not an involution (residual {sq:e})")));
    }
    let h = s.metric.matrix().mul(&cm);
    let asym = h.sub(&h.transpose()).max_abs();
    if asym > tol {
        return Err(Error::NotCartan(format!("g(-, C-) is not symmetric (residual {asym:e})")));
    }
    let hs = Dense::from_fn(7, 7, |i, j| 0.5 * (h.get(i, j) + h.get(j, i)));
    let (p, q, z) = hs.inertia();
    if (p, q, z) != (7, 0, 0) {
        return Err(Error::NotCartan(format!("g(-, C-) has signature ({p},{q}) and is not positive definite")));
    }
    Ok(CartanInvolution { map: *c, h: Metric7::new(hs)? })
}

/// Matrix of the linear map X ↦ (d/ds) exp(sX)^* φ at s = 0, columns indexed by (i, j) in row-major order.
///
/// (exp(sX))^* dx^i = dx^i + s Σ_j X_ij dx^j + ..., so the derivative is Σ_ij X_ij dx^j ∧ (e_i ⌟ φ).
pub fn orbit_jacobian(phi: &ConstForm<f64>) -> Dense<f64> {
    let p = phi.grade();
    let n = basis(p).len();
    let mut jac = Dense::zeros(n, 49);
    for i in 1..=7 {
        let contracted = phi.interior_axis(i).unwrap();
        for j in 1..=7 {
            let col = ConstForm::basis(MultiIndex::of(&[j])).wedge(&contracted);
            for (k, v) in col.coeffs().iter().enumerate() {
                jac.set(k, (i - 1) * 7 + (j - 1), *v);
            }
        }
    }
    jac
}

/// Basis of the stabiliser algebra {X : L_X φ = 0} as 7x7 matrices.
pub fn stabilizer_algebra(phi: &ConstForm<f64>) -> Vec<Mat7<f64>> {
    orbit_jacobian(phi)
        .kernel()
        .into_iter()
        .map(|v| std::array::from_fn(|i| std::array::from_fn(|j| v[i * 7 + j])))
        .collect()
}

/// exp(X) of a 7x7 matrix.
pub fn mat_exp(x: &Mat7<f64>) -> Mat7<f64> {
    let m = nalgebra::SMatrix::<f64, 7, 7>::from_fn(|i, j| x[i][j]);
    let e = m.exp();
    std::array::from_fn(|i| std::array::from_fn(|j| e[(i, j)]))
}
