//! Type decomposition of forms with respect to a G2 or split-G2 structure.
//!
//! Each projection matrix is assembled as B E_d B⁻¹, where the columns of B are bases of the
//! summands obtained from their defining linear conditions (images of v ↦ v ⌟ φ, kernels of wedge
//! maps, multiples of φ). No orthonormalisation is used, so the split case is handled without
//! null-vector trouble.

use crate::error::{Error, Result};
use crate::exterior::{basis, dim, ConstForm};
use crate::g2structure::G2Structure;
use crate::linalg::Dense;
use crate::scalar::Scalar;
use serde::Serialize;

/// Valid (degree, label) pairs.
pub const VALID: [(usize, usize); 10] =
    [(2, 7), (2, 14), (3, 1), (3, 7), (3, 27), (4, 1), (4, 7), (4, 27), (5, 7), (5, 14)];

pub fn labels(grade: usize) -> &'static [usize] {
    match grade {
        2 | 5 => &[7, 14],
        3 | 4 => &[1, 7, 27],
        _ => &[],
    }
}

pub fn is_valid(grade: usize, label: usize) -> bool {
    VALID.contains(&(grade, label))
}

/// A type component π_d(a).
#[derive(Clone, Debug, PartialEq)]
pub struct TypeComponent<T: Scalar = f64> {
    pub grade: usize,
    pub label: usize,
    pub form: ConstForm<T>,
}

/// Cached projection matrices for one structure.
#[derive(Clone, Debug)]
pub struct Projections<T: Scalar = f64> {
    structure: G2Structure<T>,
    /// Indexed by grade 2..=5, then by label order of [`labels`].
    mats: Vec<Vec<Dense<T>>>,
    bases: Vec<Vec<Vec<ConstForm<T>>>>,
}

fn to_columns<T: Scalar>(forms: &[ConstForm<T>]) -> Vec<Vec<T>> {
    forms.iter().map(|f| f.coeffs().to_vec()).collect()
}

/// Matrix of the linear map a ↦ a ∧ c on Λ^p.
fn wedge_matrix<T: Scalar>(p: usize, c: &ConstForm<T>) -> Dense<T> {
    let q = p + c.grade();
    let mut m = Dense::zeros(dim(q), dim(p));
    for (j, idx) in basis(p).iter().enumerate() {
        let w = ConstForm::<T>::basis(*idx).wedge(c);
        for (i, v) in w.coeffs().iter().enumerate() {
            m.set(i, j, v.clone());
        }
    }
    m
}

fn stack<T: Scalar>(a: &Dense<T>, b: &Dense<T>) -> Dense<T> {
    assert_eq!(a.cols, b.cols);
    Dense::from_fn(a.rows + b.rows, a.cols, |i, j| if i < a.rows { a.get(i, j).clone() } else { b.get(i - a.rows, j).clone() })
}

fn unit<T: Scalar>(axis: usize) -> [T; 7] {
    std::array::from_fn(|i| if i + 1 == axis { T::one() } else { T::zero() })
}

/// Bases of the summands of Λ^p in label order.
fn summand_bases<T: Scalar>(s: &G2Structure<T>, p: usize) -> Vec<Vec<ConstForm<T>>> {
    let phi = &s.threeform;
    let psi = &s.fourform;
    let from_vec = |v: Vec<T>, g: usize| ConstForm::from_coeffs(g, v);
    match p {
        2 => {
            let b7: Vec<_> = (1..=7).map(|i| phi.interior(&unit(i)).unwrap()).collect();
            let b14: Vec<_> = wedge_matrix(2, psi).kernel().into_iter().map(|v| from_vec(v, 2)).collect();
            vec![b7, b14]
        }
        3 => {
            let b1 = vec![phi.clone()];
            let b7: Vec<_> = (1..=7).map(|i| psi.interior(&unit(i)).unwrap()).collect();
            let m = stack(&wedge_matrix(3, phi), &wedge_matrix(3, psi));
            let b27: Vec<_> = m.kernel().into_iter().map(|v| from_vec(v, 3)).collect();
            vec![b1, b7, b27]
        }
        4 | 5 => summand_bases(s, 7 - p).into_iter().map(|b| b.iter().map(|f| s.star(f)).collect()).collect(),
        _ => vec![],
    }
}

impl<T: Scalar> Projections<T> {
    pub fn new(s: &G2Structure<T>) -> Self {
        let mut mats = Vec::new();
        let mut all_bases = Vec::new();
        for p in 2..=5 {
            let bases = summand_bases(s, p);
            let cols: Vec<Vec<T>> = bases.iter().flat_map(|b| to_columns(b)).collect();
            let n = dim(p);
            assert_eq!(cols.len(), n, "summand dimensions must add up to C(7,{p})");
            let bm = Dense::from_columns(n, &cols);
            let binv = bm.inverse().expect("summand bases must span");
            let mut per_label = Vec::new();
            let mut offset = 0;
            for b in &bases {
                let k = b.len();
                let mut e = Dense::zeros(n, n);
                for i in offset..offset + k {
                    e.set(i, i, T::one());
                }
                per_label.push(bm.mul(&e).mul(&binv));
                offset += k;
            }
            mats.push(per_label);
            all_bases.push(bases);
        }
        Projections { structure: s.clone(), mats, bases: all_bases }
    }

    pub fn structure(&self) -> &G2Structure<T> {
        &self.structure
    }

    /// Projection matrix of π_d on Λ^p.
    pub fn matrix(&self, grade: usize, label: usize) -> Result<&Dense<T>> {
        let k = labels(grade).iter().position(|&l| l == label).ok_or(Error::InvalidLabel { grade, label })?;
        Ok(&self.mats[grade - 2][k])
    }

    /// Basis of the summand Λ^p_d.
    pub fn summand_basis(&self, grade: usize, label: usize) -> Result<&[ConstForm<T>]> {
        let k = labels(grade).iter().position(|&l| l == label).ok_or(Error::InvalidLabel { grade, label })?;
        Ok(&self.bases[grade - 2][k])
    }

    pub fn project(&self, label: usize, a: &ConstForm<T>) -> Result<TypeComponent<T>> {
        let m = self.matrix(a.grade(), label)?;
        Ok(TypeComponent { grade: a.grade(), label, form: ConstForm::from_coeffs(a.grade(), m.mul_vec(a.coeffs())) })
    }

    /// All components of a form in label order.
    pub fn decompose(&self, a: &ConstForm<T>) -> Result<Vec<TypeComponent<T>>> {
        let ls = labels(a.grade());
        if ls.is_empty() {
            return Err(Error::InvalidLabel { grade: a.grade(), label: 0 });
        }
        ls.iter().map(|&l| self.project(l, a)).collect()
    }
}

/// π_d(a) for a structure; builds the projection cache on the fly.
pub fn project<T: Scalar>(s: &G2Structure<T>, label: usize, a: &ConstForm<T>) -> Result<TypeComponent<T>> {
    if !is_valid(a.grade(), label) {
        return Err(Error::InvalidLabel { grade: a.grade(), label });
    }
    Projections::new(s).project(label, a)
}

/// One membership condition and its residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub residual: f64,
    pub passed: bool,
}

/// Outcome of checking a component against its defining conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub grade: usize,
    pub label: usize,
    pub description: String,
    pub conditions: Vec<Condition>,
    pub passed: bool,
}

fn residual_check<T: Scalar>(name: &str, r: &ConstForm<T>, tol: f64) -> Condition {
    let residual = r.max_abs();
    let passed = if T::EXACT { r.is_zero() } else { residual <= tol };
    Condition { name: name.to_string(), residual, passed }
}

/// Residual of the least-squares fit of `a` by the span of `cols` (exact on rationals).
fn span_residual<T: Scalar>(cols: &[ConstForm<T>], a: &ConstForm<T>) -> ConstForm<T> {
    let n = cols.len();
    let gram = Dense::from_fn(n, n, |i, j| cols[i].dot(&cols[j]));
    let rhs: Vec<T> = cols.iter().map(|c| c.dot(a)).collect();
    let Some(inv) = gram.inverse() else { return a.clone() };
    let coeffs = inv.mul_vec(&rhs);
    let mut fit = ConstForm::zero(a.grade());
    for (c, w) in cols.iter().zip(coeffs) {
        fit = fit.axpy(&w, c);
    }
    a.sub(&fit)
}

fn characterize_form<T: Scalar>(s: &G2Structure<T>, grade: usize, label: usize, a: &ConstForm<T>, tol: f64) -> Vec<Condition> {
    let phi = &s.threeform;
    let psi = &s.fourform;
    match (grade, label) {
        (2, 7) => {
            let cols: Vec<_> = (1..=7).map(|i| phi.interior(&unit(i)).unwrap()).collect();
            vec![residual_check("a = v ⌟ φ for some v", &span_residual(&cols, a), tol)]
        }
        (2, 14) => vec![residual_check("a ∧ ψ = 0", &a.wedge(psi), tol)],
        (3, 1) => vec![residual_check("a ∈ R·φ", &span_residual(std::slice::from_ref(phi), a), tol)],
        (3, 7) => {
            let cols: Vec<_> = (1..=7).map(|i| psi.interior(&unit(i)).unwrap()).collect();
            vec![residual_check("a = v ⌟ ψ for some v", &span_residual(&cols, a), tol)]
        }
        (3, 27) => vec![
            residual_check("a ∧ φ = 0", &a.wedge(phi), tol),
            residual_check("a ∧ ψ = 0", &a.wedge(psi), tol),
        ],
        (4, _) | (5, _) => {
            let dual = s.star(a);
            characterize_form(s, 7 - grade, label, &dual, tol)
                .into_iter()
                .map(|c| Condition { name: format!("⋆a: {}", c.name), ..c })
                .collect()
        }
        _ => vec![],
    }
}

fn describe(grade: usize, label: usize) -> &'static str {
    match (grade, label) {
        (2, 7) => "{v ⌟ φ | v ∈ R^7}",
        (2, 14) => "{a | a ∧ ψ = 0}",
        (3, 1) => "R·φ",
        (3, 7) => "{v ⌟ ψ | v ∈ R^7}",
        (3, 27) => "{a | a ∧ φ = 0, a ∧ ψ = 0}",
        (4, 1) => "⋆Λ³_1 = R·ψ",
        (4, 7) => "⋆Λ³_7",
        (4, 27) => "⋆Λ³_27",
        (5, 7) => "⋆Λ²_7",
        (5, 14) => "⋆Λ²_14",
        _ => "invalid",
    }
}

/// Check a component against the characterisation of its summand. Exact on rationals, `tol` otherwise.
pub fn characterize<T: Scalar>(s: &G2Structure<T>, c: &TypeComponent<T>, tol: f64) -> Certificate {
    let conditions = if is_valid(c.grade, c.label) && c.form.grade() == c.grade {
        characterize_form(s, c.grade, c.label, &c.form, tol)
    } else {
        vec![Condition { name: "valid (degree, label)".into(), residual: f64::INFINITY, passed: false }]
    };
    let passed = conditions.iter().all(|x| x.passed);
    Certificate { grade: c.grade, label: c.label, description: describe(c.grade, c.label).into(), conditions, passed }
}
