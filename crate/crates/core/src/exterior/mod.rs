//! Coordinate exterior algebra on R^7.

pub mod field;
pub mod form;
pub mod multiindex;
pub mod parse;
pub mod radial;

pub use field::{Ball, FormField, Structured, Term};
pub use form::{identity7, induced_matrix, mat7_mul, ConstForm, Mat7, Vector7};
pub use multiindex::{basis, dim, MultiIndex};
pub use parse::parse_form;
pub use radial::{BumpProfile, RadialProfile};

use crate::error::Result;
use crate::scalar::Scalar;

pub fn wedge<T: Scalar>(a: &ConstForm<T>, b: &ConstForm<T>) -> ConstForm<T> {
    a.wedge(b)
}

pub fn interior<T: Scalar>(v: &Vector7<T>, a: &ConstForm<T>) -> Result<ConstForm<T>> {
    a.interior(v)
}

pub fn pullback<T: Scalar>(a: &Mat7<T>, f: &ConstForm<T>) -> ConstForm<T> {
    f.pullback(a)
}

pub fn exterior_derivative(f: &FormField) -> Result<FormField> {
    f.d()
}
