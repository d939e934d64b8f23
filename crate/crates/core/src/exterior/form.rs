use super::multiindex::{basis, dim, MultiIndex};
use crate::error::{Error, Result};
use crate::linalg::Dense;
use crate::scalar::{Rational, Scalar};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

/// Linear maps of R^7 as 7x7 arrays; `a[i][j]` is the (i,j) entry.
pub type Mat7<T> = [[T; 7]; 7];

/// Vector of R^7.
pub type Vector7<T = f64> = [T; 7];

/// Alternating form with constant coefficients, one per increasing multi-index.
#[derive(Clone, PartialEq)]
pub struct ConstForm<T = f64> {
    grade: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> ConstForm<T> {
    /// Zero form of the given grade. Grades above 7 give the empty zero form.
    pub fn zero(grade: usize) -> Self {
        ConstForm { grade, coeffs: vec![T::zero(); dim(grade)] }
    }

    pub fn basis(index: MultiIndex) -> Self {
        let mut f = Self::zero(index.grade());
        f.coeffs[index.position()] = T::one();
        f
    }

    pub fn scalar(v: T) -> Self {
        ConstForm { grade: 0, coeffs: vec![v] }
    }

    pub fn from_coeffs(grade: usize, coeffs: Vec<T>) -> Self {
        assert_eq!(coeffs.len(), dim(grade), "coefficient count must be C(7, grade)");
        ConstForm { grade, coeffs }
    }

    /// Sum of coefficient times dx^I. Terms with repeated axes are dropped, unsorted axes are sign-corrected.
    pub fn from_terms(grade: usize, terms: &[(T, &[usize])]) -> Self {
        let mut f = Self::zero(grade);
        for (c, axes) in terms {
            assert_eq!(axes.len(), grade);
            if let Some((idx, sign)) = sorted_index(axes) {
                let v = if sign > 0 { c.clone() } else { -c.clone() };
                f.coeffs[idx.position()] = f.coeffs[idx.position()].clone() + v;
            }
        }
        f
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, index: MultiIndex) -> &T {
        &self.coeffs[index.position()]
    }

    pub fn set(&mut self, index: MultiIndex, v: T) {
        assert_eq!(index.grade(), self.grade);
        self.coeffs[index.position()] = v;
    }

    pub fn add_to(&mut self, index: MultiIndex, v: T) {
        let k = index.position();
        self.coeffs[k] = self.coeffs[k].clone() + v;
    }

    /// Nonzero terms in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, &T)> {
        basis(self.grade.min(7)).iter().copied().zip(self.coeffs.iter()).filter(|(_, c)| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.to_f64().powi(2)).sum::<f64>().sqrt()
    }

    /// Coefficient-wise dot product (the Euclidean pairing of the standard frame).
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.grade, other.grade);
        let mut acc = T::zero();
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            if !a.is_zero() && !b.is_zero() {
                acc = acc + a.clone() * b.clone();
            }
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grade, other.grade, "cannot add forms of different grade");
        ConstForm {
            grade: self.grade,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grade, other.grade, "cannot subtract forms of different grade");
        ConstForm {
            grade: self.grade,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        ConstForm { grade: self.grade, coeffs: self.coeffs.iter().map(|a| a.clone() * s.clone()).collect() }
    }

    pub fn neg(&self) -> Self {
        ConstForm { grade: self.grade, coeffs: self.coeffs.iter().map(|a| -a.clone()).collect() }
    }

    /// a + s b
    pub fn axpy(&self, s: &T, b: &Self) -> Self {
        assert_eq!(self.grade, b.grade);
        ConstForm {
            grade: self.grade,
            coeffs: self.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.clone() + s.clone() * y.clone()).collect(),
        }
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let grade = self.grade + other.grade;
        let mut out = Self::zero(grade);
        if grade > 7 {
            return out;
        }
        for (i, a) in self.terms() {
            for (j, b) in other.terms() {
                let s = i.wedge_sign(j);
                if s == 0 {
                    continue;
                }
                let v = a.clone() * b.clone();
                out.add_to(i.union(j), if s > 0 { v } else { -v });
            }
        }
        out
    }

    /// Contraction v ⌟ a.
    pub fn interior(&self, v: &Vector7<T>) -> Result<Self> {
        if self.grade == 0 {
            return Err(Error::ContractScalar);
        }
        let mut out = Self::zero(self.grade - 1);
        for (idx, c) in self.terms() {
            for axis in idx.axes() {
                let va = &v[axis - 1];
                if va.is_zero() {
                    continue;
                }
                let val = c.clone() * va.clone();
                let val = if idx.rank_of(axis) % 2 == 0 { val } else { -val };
                out.add_to(idx.without(axis), val);
            }
        }
        Ok(out)
    }

    /// Contraction with the coordinate vector e_axis (1-based).
    pub fn interior_axis(&self, axis: usize) -> Result<Self> {
        let mut v: Vector7<T> = std::array::from_fn(|_| T::zero());
        v[axis - 1] = T::one();
        self.interior(&v)
    }

    /// Pullback by x ↦ A x, so that A* dx^i = Σ_j A_ij dx^j.
    pub fn pullback(&self, a: &Mat7<T>) -> Self {
        let m = induced_matrix(a, self.grade);
        ConstForm { grade: self.grade, coeffs: m.transpose().mul_vec(&self.coeffs) }
    }

    /// Hodge-dual index placement using the Euclidean structure of the standard frame.
    pub fn complement_dual(&self) -> Self {
        let mut out = Self::zero(7 - self.grade);
        for (idx, c) in self.terms() {
            let comp = idx.complement();
            let s = idx.wedge_sign(comp);
            out.add_to(comp, if s > 0 { c.clone() } else { -c.clone() });
        }
        out
    }

    pub fn to_f64(&self) -> ConstForm<f64> {
        ConstForm { grade: self.grade, coeffs: self.coeffs.iter().map(|c| c.to_f64()).collect() }
    }

    /// Coefficient of dx^{1...7} for a top form.
    pub fn top(&self) -> T {
        assert_eq!(self.grade, 7);
        self.coeffs[0].clone()
    }
}

impl ConstForm<Rational> {
    /// Exact rational copy of a float form; every float is a dyadic rational.
    pub fn from_f64_exact(f: &ConstForm<f64>) -> Option<Self> {
        let coeffs: Option<Vec<Rational>> = f.coeffs.iter().map(|c| Rational::from_float(*c)).collect();
        coeffs.map(|coeffs| ConstForm { grade: f.grade, coeffs })
    }
}

fn sorted_index(axes: &[usize]) -> Option<(MultiIndex, i32)> {
    let idx = MultiIndex::new(axes)?;
    let mut inv = 0;
    for i in 0..axes.len() {
        for j in i + 1..axes.len() {
            if axes[i] > axes[j] {
                inv += 1;
            }
        }
    }
    Some((idx, if inv % 2 == 0 { 1 } else { -1 }))
}

/// Matrix of p x p minors of A: entry (I,J) is det A[I,J], so that A* dx^I = Σ_J entry(I,J) dx^J.
/// Minors of each order are built from those of the previous order by expansion along the first row.
pub fn induced_matrix<T: Scalar>(a: &Mat7<T>, p: usize) -> Dense<T> {
    if p == 0 {
        return Dense::identity(1);
    }
    let mut prev: Dense<T> = Dense::from_fn(7, 7, |i, j| a[i][j].clone());
    for q in 2..=p {
        let b = basis(q);
        let axes: Vec<Vec<usize>> = b.iter().map(|i| i.axes()).collect();
        let mut next = Dense::zeros(b.len(), b.len());
        for (r, i) in b.iter().enumerate() {
            let top = axes[r][0];
            let rest = i.without(top).position();
            for (c, j) in b.iter().enumerate() {
                let mut acc = T::zero();
                for (k, &col) in axes[c].iter().enumerate() {
                    let x = &a[top - 1][col - 1];
                    if x.is_zero() {
                        continue;
                    }
                    let term = x.clone() * prev.get(rest, j.without(col).position()).clone();
                    acc = if k % 2 == 0 { acc + term } else { acc - term };
                }
                next.set(r, c, acc);
            }
        }
        prev = next;
    }
    prev
}

pub fn identity7<T: Scalar>() -> Mat7<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn mat7_mul<T: Scalar>(a: &Mat7<T>, b: &Mat7<T>) -> Mat7<T> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = T::zero();
            for k in 0..7 {
                acc = acc + a[i][k].clone() * b[k][j].clone();
            }
            acc
        })
    })
}

pub fn mat7_to_dense<T: Scalar>(a: &Mat7<T>) -> Dense<T> {
    Dense::from_fn(7, 7, |i, j| a[i][j].clone())
}

pub fn dense_to_mat7<T: Scalar>(d: &Dense<T>) -> Mat7<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| d.get(i, j).clone()))
}

impl<T: Scalar + fmt::Display> fmt::Display for ConstForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, c) in self.terms() {
            let axes: Vec<String> = idx.axes().iter().map(|a| a.to_string()).collect();
            let neg = c.signum_i32() < 0;
            let mag = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            if mag != T::one() {
                write!(f, "{mag} ")?;
            }
            write!(f, "dx[{}]", axes.join(","))?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for ConstForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConstForm<{}>{{", self.grade)?;
        for (idx, c) in self.terms() {
            write!(f, " {idx}:{:?}", c)?;
        }
        write!(f, " }}")
    }
}

/// JSON shape: `{"grade": p, "coeffs": {"123": 1.0, ...}}` with zero coefficients omitted.
impl Serialize for ConstForm<f64> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Coeffs<'a>(&'a ConstForm<f64>);
        impl Serialize for Coeffs<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let terms: Vec<_> = self.0.terms().collect();
                let mut m = s.serialize_map(Some(terms.len()))?;
                for (idx, c) in terms {
                    let key: String = idx.axes().iter().map(|a| a.to_string()).collect();
                    m.serialize_entry(&key, c)?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("grade", &self.grade)?;
        m.serialize_entry("coeffs", &Coeffs(self))?;
        m.end()
    }
}

impl<'de> Deserialize<'de> for ConstForm<f64> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            grade: usize,
            coeffs: BTreeMap<String, f64>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.grade > 7 {
            return Err(serde::de::Error::custom("grade must be at most 7"));
        }
        let mut f = ConstForm::zero(raw.grade);
        for (k, v) in raw.coeffs {
            let axes: Option<Vec<usize>> = k.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect();
            let axes = axes.ok_or_else(|| serde::de::Error::custom(format!("bad multi-index {k}")))?;
            if axes.len() != raw.grade {
                return Err(serde::de::Error::custom(format!("multi-index {k} has wrong length")));
            }
            let (idx, sign) =
                sorted_index(&axes).ok_or_else(|| serde::de::Error::custom(format!("bad multi-index {k}")))?;
            f.add_to(idx, sign as f64 * v);
        }
        Ok(f)
    }
}
