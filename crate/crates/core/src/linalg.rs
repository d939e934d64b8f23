//! Small dense linear algebra over any [`Scalar`], exact for rationals.

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Dense { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i].clone())
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (j, x) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc + a.clone() * x.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * s.clone()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for i in 0..self.rows.min(self.cols) {
            t = t + self.get(i, i).clone();
        }
        t
    }

    pub fn to_f64(&self) -> Dense<f64> {
        Dense { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.to_f64()).collect() }
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let scale = self.max_abs().max(1e-300);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let mut best = None;
            let mut best_mag = 0.0;
            for i in r..m.rows {
                let v = m.get(i, c);
                if v.negligible(scale) {
                    continue;
                }
                let mag = v.magnitude();
                if best.is_none() || (!T::EXACT && mag > best_mag) {
                    best = Some(i);
                    best_mag = mag;
                    if T::EXACT {
                        break;
                    }
                }
            }
            let Some(p) = best else { continue };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let inv = T::one() / m.get(r, c).clone();
            for j in 0..m.cols {
                let v = m.get(r, j).clone() * inv.clone();
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    let v = m.get(i, j).clone() - f.clone() * m.get(r, j).clone();
                    m.set(i, j, v);
                }
            }
            if !T::EXACT {
                for i in 0..m.rows {
                    if i != r && m.get(i, c).negligible(1.0) {
                        m.set(i, c, T::zero());
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the null space, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<T>> {
        let (m, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![T::zero(); self.cols];
                v[f] = T::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -m.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    /// Inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, T::one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| r.get(i, n + j).clone()))
    }

    pub fn determinant(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let scale = self.max_abs().max(1e-300);
        let mut det = T::one();
        for c in 0..n {
            let mut best = None;
            let mut best_mag = 0.0;
            for i in c..n {
                let v = m.get(i, c);
                if v.is_zero() || (T::EXACT && best.is_some()) {
                    continue;
                }
                let mag = v.magnitude();
                if best.is_none() || mag > best_mag {
                    best = Some(i);
                    best_mag = mag;
                }
            }
            let Some(p) = best else { return T::zero() };
            if !T::EXACT && best_mag <= 1e-300 * scale {
                return T::zero();
            }
            if p != c {
                for j in 0..n {
                    m.data.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let piv = m.get(c, c).clone();
            det = det * piv.clone();
            for i in c + 1..n {
                let f = m.get(i, c).clone() / piv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let v = m.get(i, j).clone() - f.clone() * m.get(c, j).clone();
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    /// Signature (positive, negative, zero) of a symmetric matrix by congruence diagonalisation.
    pub fn inertia(&self) -> (usize, usize, usize) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let scale = self.max_abs().max(1e-300);
        let mut m = self.clone();
        let mut pos = 0;
        let mut neg = 0;
        let mut active: Vec<usize> = (0..n).collect();
        while !active.is_empty() {
            let mut pivot = None;
            let mut best = 0.0;
            for &i in &active {
                let v = m.get(i, i);
                if !v.negligible(scale) && (pivot.is_none() || v.magnitude() > best) {
                    pivot = Some(i);
                    best = v.magnitude();
                }
            }
            if pivot.is_none() {
                let mut pair = None;
                'outer: for &i in &active {
                    for &j in &active {
                        if i != j && !m.get(i, j).negligible(scale) {
                            pair = Some((i, j));
                            break 'outer;
                        }
                    }
                }
                let Some((i, j)) = pair else { break };
                // Replace e_i by e_i + e_j so the diagonal entry becomes 2 m_ij.
                for k in 0..n {
                    let v = m.get(i, k).clone() + m.get(j, k).clone();
                    m.set(i, k, v);
                }
                for k in 0..n {
                    let v = m.get(k, i).clone() + m.get(k, j).clone();
                    m.set(k, i, v);
                }
                continue;
            }
            let p = pivot.unwrap();
            let d = m.get(p, p).clone();
            if d.signum_i32() > 0 {
                pos += 1;
            } else {
                neg += 1;
            }
            active.retain(|&i| i != p);
            for &i in &active {
                let f = m.get(i, p).clone() / d.clone();
                if f.is_zero() {
                    continue;
                }
                for &j in &active {
                    let v = m.get(i, j).clone() - f.clone() * m.get(p, j).clone();
                    m.set(i, j, v);
                }
            }
            for &i in &active {
                m.set(i, p, T::zero());
                m.set(p, i, T::zero());
            }
        }
        (pos, neg, n - pos - neg)
    }
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    #[test]
    fn exact_inverse_and_determinant() {
        let m = Dense::from_fn(3, 3, |i, j| ratio(((i + 1) * (j + 2) % 5) as i64 + (i == j) as i64, 1));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Dense::<Rational>::identity(3));
        let d = m.determinant();
        assert_eq!(d * inv.determinant(), ratio(1, 1));
    }

    #[test]
    fn kernel_spans_null_space() {
        let m = Dense::from_fn(2, 4, |i, j| ratio((i * 4 + j) as i64, 1));
        let k = m.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(m.mul_vec(v).iter().all(|x| *x == ratio(0, 1)));
        }
    }

    #[test]
    fn inertia_of_indefinite_forms() {
        let split = Dense::from_fn(7, 7, |i, j| if i != j { 0.0 } else if i < 3 { 1.0 } else { -1.0 });
        assert_eq!(split.inertia(), (3, 4, 0));
        let hyperbolic = Dense::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(hyperbolic.inertia(), (1, 1, 0));
        let singular = Dense::from_fn(2, 2, |_, _| 1.0);
        assert_eq!(singular.inertia(), (1, 0, 1));
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
    }
}
