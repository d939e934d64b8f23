//! Model forms on R^7 and named fixtures.

use crate::exterior::ConstForm;
use crate::scalar::{ratio, Rational};

fn build(grade: usize, terms: &[(i64, &[usize])]) -> ConstForm<Rational> {
    let t: Vec<(Rational, &[usize])> = terms.iter().map(|(c, a)| (ratio(*c, 1), *a)).collect();
    ConstForm::from_terms(grade, &t)
}

/// φ0 = dx123 + dx145 + dx167 + dx246 - dx257 - dx347 - dx356
pub fn phi0() -> ConstForm<Rational> {
    build(
        3,
        &[
            (1, &[1, 2, 3]),
            (1, &[1, 4, 5]),
            (1, &[1, 6, 7]),
            (1, &[2, 4, 6]),
            (-1, &[2, 5, 7]),
            (-1, &[3, 4, 7]),
            (-1, &[3, 5, 6]),
        ],
    )
}

/// ψ0 = dx4567 + dx2367 + dx2345 + dx1357 - dx1346 - dx1256 - dx1247
pub fn psi0() -> ConstForm<Rational> {
    build(
        4,
        &[
            (1, &[4, 5, 6, 7]),
            (1, &[2, 3, 6, 7]),
            (1, &[2, 3, 4, 5]),
            (1, &[1, 3, 5, 7]),
            (-1, &[1, 3, 4, 6]),
            (-1, &[1, 2, 5, 6]),
            (-1, &[1, 2, 4, 7]),
        ],
    )
}

/// φ̃0 = dx123 - dx145 - dx167 + dx246 - dx257 - dx347 - dx356
pub fn phi_tilde0() -> ConstForm<Rational> {
    build(
        3,
        &[
            (1, &[1, 2, 3]),
            (-1, &[1, 4, 5]),
            (-1, &[1, 6, 7]),
            (1, &[2, 4, 6]),
            (-1, &[2, 5, 7]),
            (-1, &[3, 4, 7]),
            (-1, &[3, 5, 6]),
        ],
    )
}

/// ψ̃0 = dx4567 - dx2367 - dx2345 + dx1357 - dx1346 - dx1256 - dx1247
pub fn psi_tilde0() -> ConstForm<Rational> {
    build(
        4,
        &[
            (1, &[4, 5, 6, 7]),
            (-1, &[2, 3, 6, 7]),
            (-1, &[2, 3, 4, 5]),
            (1, &[1, 3, 5, 7]),
            (-1, &[1, 3, 4, 6]),
            (-1, &[1, 2, 5, 6]),
            (-1, &[1, 2, 4, 7]),
        ],
    )
}

/// The restatement of φ0 with -dx247 in place of -dx257.
pub fn phi0_variant_247() -> ConstForm<Rational> {
    build(
        3,
        &[
            (1, &[1, 2, 3]),
            (1, &[1, 4, 5]),
            (1, &[1, 6, 7]),
            (1, &[2, 4, 6]),
            (-1, &[2, 4, 7]),
            (-1, &[3, 4, 7]),
            (-1, &[3, 5, 6]),
        ],
    )
}

/// The restatement of φ̃0 with -dx247 in place of -dx257.
pub fn phi_tilde0_variant_247() -> ConstForm<Rational> {
    build(
        3,
        &[
            (1, &[1, 2, 3]),
            (-1, &[1, 4, 5]),
            (-1, &[1, 6, 7]),
            (1, &[2, 4, 6]),
            (-1, &[2, 4, 7]),
            (-1, &[3, 4, 7]),
            (-1, &[3, 5, 6]),
        ],
    )
}

/// Named fixtures available to the CLI and tests.
pub fn named(name: &str) -> Option<ConstForm<Rational>> {
    match name {
        "phi0" => Some(phi0()),
        "psi0" => Some(psi0()),
        "phit0" | "phi_tilde0" => Some(phi_tilde0()),
        "psit0" | "psi_tilde0" => Some(psi_tilde0()),
        "phi0_247" => Some(phi0_variant_247()),
        "phit0_247" => Some(phi_tilde0_variant_247()),
        _ => None,
    }
}

/// Split metric diag(+1,+1,+1,-1,-1,-1,-1), which is also the model Cartan involution.
pub fn split_diagonal() -> [f64; 7] {
    [1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]
}

pub fn phi0_f64() -> ConstForm<f64> {
    phi0().to_f64()
}

pub fn psi0_f64() -> ConstForm<f64> {
    psi0().to_f64()
}

pub fn phi_tilde0_f64() -> ConstForm<f64> {
    phi_tilde0().to_f64()
}

pub fn psi_tilde0_f64() -> ConstForm<f64> {
    psi_tilde0().to_f64()
}
