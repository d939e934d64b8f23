//! Monomial moments over the unit sphere S⁶ and a fully symmetric cubature rule on it.

use crate::exterior::Vector7;
use crate::scalar::{ratio, Rational};
use num_traits::ToPrimitive;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Area of the unit sphere S⁶, 16π³/15.
pub fn sphere_area() -> f64 {
    16.0 * PI.powi(3) / 15.0
}

/// Volume of the unit ball in R^7, 16π³/105.
pub fn ball_volume() -> f64 {
    16.0 * PI.powi(3) / 105.0
}

/// ∫_{S⁶} u^m as an exact rational multiple of Area(S⁶).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngularMoment {
    #[serde(serialize_with = "ser_rational")]
    pub area_multiple: Rational,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl AngularMoment {
    /// Rational coefficient c with moment = c·π³.
    pub fn pi_cubed_coefficient(&self) -> Rational {
        &self.area_multiple * ratio(16, 15)
    }

    pub fn value(&self) -> f64 {
        self.area_multiple.to_f64().expect("finite") * sphere_area()
    }

    pub fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(&self.area_multiple)
    }
}

fn double_factorial_odd(k: u32) -> i64 {
    // (2k - 1)!! with (-1)!! = 1.
    (1..=k as i64).map(|j| 2 * j - 1).product()
}

/// Exact moment ∫_{S⁶} Π u_i^{m_i} / Area(S⁶); zero when any exponent is odd.
pub fn angular_moment(exps: &[u8; 7]) -> AngularMoment {
    if exps.iter().any(|e| e % 2 == 1) {
        return AngularMoment { area_multiple: ratio(0, 1) };
    }
    let half: u32 = exps.iter().map(|&e| e as u32 / 2).sum();
    let mut num = num_bigint::BigInt::from(1);
    for &e in exps {
        num *= double_factorial_odd(e as u32 / 2);
    }
    let mut den = num_bigint::BigInt::from(1);
    for j in 0..half {
        den *= 7 + 2 * j as i64;
    }
    AngularMoment { area_multiple: Rational::new(num, den) }
}

/// Same as [`angular_moment`] in floating point, times Area(S⁶).
pub fn angular_moment_f64(exps: &[u8; 7]) -> f64 {
    if exps.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let mut v = sphere_area();
    let mut d = 7.0;
    for &e in exps {
        for j in 0..(e / 2) {
            v *= (2 * j + 1) as f64 / d;
            d += 2.0;
        }
    }
    v
}

/// Points and weights (summing to 1) of the degree-7 fully symmetric rule on S⁶: the 14 axis
/// points, the 84 points (±e_i ± e_j)/√2 and the 128 points (±1, …, ±1)/√7.
pub fn sphere_rule() -> &'static [(Vector7, f64)] {
    static RULE: OnceLock<Vec<(Vector7, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (wa, wb, wc) = (1.0 / 693.0, 4.0 / 693.0, 49.0 / 12672.0);
        let mut out = Vec::with_capacity(226);
        for i in 0..7 {
            for s in [1.0, -1.0] {
                let mut p = [0.0; 7];
                p[i] = s;
                out.push((p, wa));
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..7 {
            for j in (i + 1)..7 {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut p = [0.0; 7];
                    p[i] = si * h;
                    p[j] = sj * h;
                    out.push((p, wb));
                }
            }
        }
        let c = 1.0 / 7f64.sqrt();
        for bits in 0u32..128 {
            let p = std::array::from_fn(|i| if bits & (1 << i) != 0 { -c } else { c });
            out.push((p, wc));
        }
        out
    })
}
