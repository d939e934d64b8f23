//! Textual form literals such as `dx[1,2,3] - 2/3 dx[4,5,6] + 0.5 phi0`.
//!
//! A term is an optional sign, an optional rational or decimal coefficient (with an optional `*`),
//! and either `dx[i,j,...]` or one of the named model forms `phi0`, `psi0`, `phit0`, `psit0`.

use super::form::ConstForm;
use super::multiindex::MultiIndex;
use crate::error::{Error, Result};
use crate::g2structure::models;
use crate::scalar::Rational;
use num_bigint::BigInt;
use num_traits::{One, Zero};

pub fn parse_form(text: &str) -> Result<ConstForm<Rational>> {
    let mut p = Parser { s: text.as_bytes(), i: 0 };
    let mut acc: Option<ConstForm<Rational>> = None;
    p.skip_ws();
    if p.done() {
        return Err(Error::Parse("empty literal".into()));
    }
    let mut first = true;
    while !p.done() {
        let mut sign = Rational::one();
        let had_op = if p.eat(b'+') {
            true
        } else if p.eat(b'-') {
            sign = -sign;
            true
        } else {
            false
        };
        if !first && !had_op {
            return Err(Error::Parse(format!("expected + or - at offset {}", p.i)));
        }
        first = false;
        p.skip_ws();
        let coeff = match p.number()? {
            Some(c) => {
                p.skip_ws();
                p.eat(b'*');
                p.skip_ws();
                c
            }
            None => Rational::one(),
        };
        let form = p.atom()?;
        let term = form.scale(&(sign * coeff));
        acc = Some(match acc {
            None => term,
            Some(a) => {
                if a.grade() != term.grade() {
                    return Err(Error::Parse(format!(
                        "mixed grades {} and {} in one literal",
                        a.grade(),
                        term.grade()
                    )));
                }
                a.add(&term)
            }
        });
        p.skip_ws();
    }
    Ok(acc.unwrap())
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn done(&self) -> bool {
        self.i >= self.s.len()
    }

    fn skip_ws(&mut self) {
        while !self.done() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if !self.done() && self.s[self.i] == c {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> &str {
        let start = self.i;
        while !self.done() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[start..self.i]).unwrap()
    }

    fn number(&mut self) -> Result<Option<Rational>> {
        self.skip_ws();
        if self.done() || !(self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
            return Ok(None);
        }
        let int_part = self.digits().to_string();
        let mut num: BigInt = if int_part.is_empty() { BigInt::zero() } else { int_part.parse().unwrap() };
        let mut den = BigInt::one();
        if !self.done() && self.s[self.i] == b'.' {
            self.i += 1;
            let frac = self.digits().to_string();
            for ch in frac.chars() {
                num = num * 10 + BigInt::from(ch.to_digit(10).unwrap());
                den *= 10;
            }
        }
        let mut value = Rational::new(num, den);
        let save = self.i;
        self.skip_ws();
        if !self.done() && self.s[self.i] == b'/' {
            self.i += 1;
            self.skip_ws();
            let d = self.digits().to_string();
            if d.is_empty() {
                return Err(Error::Parse(format!("missing denominator at offset {}", self.i)));
            }
            let d: BigInt = d.parse().unwrap();
            if d.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            value /= Rational::from_integer(d);
        } else {
            self.i = save;
        }
        Ok(Some(value))
    }

    fn atom(&mut self) -> Result<ConstForm<Rational>> {
        self.skip_ws();
        let rest = std::str::from_utf8(&self.s[self.i..]).unwrap();
        for (name, form) in [
            ("phit0", models::phi_tilde0()),
            ("psit0", models::psi_tilde0()),
            ("phi0", models::phi0()),
            ("psi0", models::psi0()),
        ] {
            if rest.starts_with(name) {
                self.i += name.len();
                return Ok(form);
            }
        }
        if !rest.starts_with("dx") {
            return Err(Error::Parse(format!("expected dx[...] or a named form at offset {}", self.i)));
        }
        self.i += 2;
        if !self.eat(b'[') {
            return Err(Error::Parse(format!("expected [ at offset {}", self.i)));
        }
        let mut axes = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b']') {
                break;
            }
            let d = self.digits().to_string();
            if d.is_empty() {
                return Err(Error::Parse(format!("expected axis at offset {}", self.i)));
            }
            axes.push(d.parse::<usize>().unwrap());
            self.skip_ws();
            if self.eat(b',') {
                continue;
            }
            if !self.eat(b']') {
                return Err(Error::Parse(format!("expected , or ] at offset {}", self.i)));
            }
            break;
        }
        if MultiIndex::new(&axes).is_none() {
            return Err(Error::Parse(format!("invalid multi-index {axes:?}")));
        }
        let grade = axes.len();
        let form = ConstForm::from_terms(grade, &[(Rational::one(), &axes[..])]);
        Ok(form)
    }
}
