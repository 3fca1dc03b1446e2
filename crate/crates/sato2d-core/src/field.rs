//! Exact scalar arithmetic over Q and one quadratic extension Q(alpha),
//! alpha^2 = d with d a fixed non-square rational.
//!
//! The extension constant is fixed once per session; elements carry a cheap
//! handle to it and arithmetic across sessions is rejected.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always stored reduced with positive denominator.
pub type Rat = BigRational;

/// Build a rational from machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Build an integer rational.
pub fn rat_int(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// Canonical text for a rational: `p` when integral, `p/q` otherwise.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, PartialEq, Eq)]
enum FieldKind {
    Rational,
    Quadratic { d: Rat },
}

/// Session field: Q, or Q(alpha) with alpha^2 = d.
///
/// Cloning is cheap; elements hold a handle so mixed-session arithmetic can
/// be detected.
#[derive(Debug, Clone)]
pub struct KField(Arc<FieldKind>);

impl PartialEq for KField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}
impl Eq for KField {}

fn is_rational_square(d: &Rat) -> bool {
    if d.is_negative() {
        return false;
    }
    // d = p/q reduced; d is a square iff p*q is a perfect square.
    let pq = d.numer() * d.denom();
    let root = pq.sqrt();
    &root * &root == pq
}

impl KField {
    /// The plain rationals.
    pub fn rational() -> Self {
        KField(Arc::new(FieldKind::Rational))
    }

    /// Q(alpha) with alpha^2 = d; rejects squares to keep field semantics.
    pub fn quadratic(d: Rat) -> Result<Self> {
        if d.is_zero() || is_rational_square(&d) {
            return Err(Error::SquareExtension(rat_to_string(&d)));
        }
        Ok(KField(Arc::new(FieldKind::Quadratic { d })))
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(*self.0, FieldKind::Quadratic { .. })
    }

    /// The extension constant, if any.
    pub fn extension_constant(&self) -> Option<&Rat> {
        match &*self.0 {
            FieldKind::Rational => None,
            FieldKind::Quadratic { d } => Some(d),
        }
    }

    pub fn zero(&self) -> KElem {
        KElem {
            field: self.clone(),
            a: Rat::zero(),
            b: Rat::zero(),
        }
    }

    pub fn one(&self) -> KElem {
        KElem {
            field: self.clone(),
            a: Rat::one(),
            b: Rat::zero(),
        }
    }

    /// Embed a rational.
    pub fn from_rat(&self, a: Rat) -> KElem {
        KElem {
            field: self.clone(),
            a,
            b: Rat::zero(),
        }
    }

    pub fn from_int(&self, n: i64) -> KElem {
        self.from_rat(rat_int(n))
    }

    /// a + b*alpha; requires a quadratic session when b != 0.
    pub fn elem(&self, a: Rat, b: Rat) -> Result<KElem> {
        if !b.is_zero() && !self.is_quadratic() {
            return Err(Error::Domain("alpha used in a plain-Q session".into()));
        }
        Ok(KElem {
            field: self.clone(),
            a,
            b,
        })
    }

    /// The generator alpha itself.
    pub fn alpha(&self) -> Result<KElem> {
        self.elem(Rat::zero(), Rat::one())
    }
}

/// Element a + b*alpha of the session field (b = 0 embeds Q).
#[derive(Debug, Clone)]
pub struct KElem {
    field: KField,
    a: Rat,
    b: Rat,
}

impl PartialEq for KElem {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.a == other.a && self.b == other.b
    }
}
impl Eq for KElem {}

impl KElem {
    pub fn field(&self) -> &KField {
        &self.field
    }

    pub fn rational_part(&self) -> &Rat {
        &self.a
    }

    pub fn alpha_part(&self) -> &Rat {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    /// Is this element a rational (b = 0)?
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn check(&self, other: &KElem) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn checked_add(&self, other: &KElem) -> Result<KElem> {
        self.check(other)?;
        Ok(KElem {
            field: self.field.clone(),
            a: &self.a + &other.a,
            b: &self.b + &other.b,
        })
    }

    pub fn checked_sub(&self, other: &KElem) -> Result<KElem> {
        self.check(other)?;
        Ok(KElem {
            field: self.field.clone(),
            a: &self.a - &other.a,
            b: &self.b - &other.b,
        })
    }

    pub fn checked_mul(&self, other: &KElem) -> Result<KElem> {
        self.check(other)?;
        // (a + b alpha)(a' + b' alpha) = aa' + bb'd + (ab' + a'b) alpha
        let mut a = &self.a * &other.a;
        if !self.b.is_zero() && !other.b.is_zero() {
            let d = self
                .field
                .extension_constant()
                .expect("nonzero alpha part in plain-Q session");
            a += &self.b * &other.b * d;
        }
        let b = &self.a * &other.b + &other.a * &self.b;
        Ok(KElem {
            field: self.field.clone(),
            a,
            b,
        })
    }

    pub fn neg(&self) -> KElem {
        KElem {
            field: self.field.clone(),
            a: -self.a.clone(),
            b: -self.b.clone(),
        }
    }

    /// Multiplicative inverse; the norm a^2 - d b^2 is nonzero because d is
    /// not a square.
    pub fn inv(&self) -> Result<KElem> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.b.is_zero() {
            return Ok(KElem {
                field: self.field.clone(),
                a: self.a.recip(),
                b: Rat::zero(),
            });
        }
        let d = self
            .field
            .extension_constant()
            .expect("nonzero alpha part in plain-Q session");
        let norm = &self.a * &self.a - d * &self.b * &self.b;
        debug_assert!(!norm.is_zero());
        Ok(KElem {
            field: self.field.clone(),
            a: &self.a / &norm,
            b: -(&self.b / &norm),
        })
    }

    pub fn checked_div(&self, other: &KElem) -> Result<KElem> {
        self.checked_mul(&other.inv()?)
    }

    /// Multiply by a plain rational.
    pub fn scale(&self, r: &Rat) -> KElem {
        KElem {
            field: self.field.clone(),
            a: &self.a * r,
            b: &self.b * r,
        }
    }

    /// Canonical text: `p/q`, or `p/q + r/s*alpha` with signs folded in.
    pub fn to_canonical_string(&self) -> String {
        if self.b.is_zero() {
            return rat_to_string(&self.a);
        }
        let alpha_mag = {
            let babs = self.b.abs();
            if babs.is_one() {
                String::from("alpha")
            } else {
                format!("{}*alpha", rat_to_string(&babs))
            }
        };
        if self.a.is_zero() {
            if self.b.is_negative() {
                format!("-{alpha_mag}")
            } else {
                alpha_mag
            }
        } else if self.b.is_negative() {
            format!("{} - {alpha_mag}", rat_to_string(&self.a))
        } else {
            format!("{} + {alpha_mag}", rat_to_string(&self.a))
        }
    }
}

impl fmt::Display for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl core::ops::$trait for &KElem {
            type Output = KElem;
            fn $method(self, rhs: &KElem) -> KElem {
                self.$checked(rhs).expect("field operation failed")
            }
        }
        impl core::ops::$trait for KElem {
            type Output = KElem;
            fn $method(self, rhs: KElem) -> KElem {
                (&self).$checked(&rhs).expect("field operation failed")
            }
        }
    };
}
binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl core::ops::Neg for &KElem {
    type Output = KElem;
    fn neg(self) -> KElem {
        KElem::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_rational_arithmetic() {
        let k = KField::rational();
        let half = k.from_rat(rat(1, 2));
        let two_thirds = k.from_rat(rat(2, 3));
        assert_eq!(half.checked_mul(&two_thirds).unwrap(), k.from_rat(rat(1, 3)));
        let x = k.from_int(7);
        assert_eq!(x.checked_add(&k.zero()).unwrap(), x);
    }

    #[test]
    fn quadratic_norm_product() {
        // (1 + alpha)(1 - alpha) = 1 - d = 4 for d = -3
        let k = KField::quadratic(rat_int(-3)).unwrap();
        let p = k.elem(rat_int(1), rat_int(1)).unwrap();
        let q = k.elem(rat_int(1), rat_int(-1)).unwrap();
        assert_eq!(p.checked_mul(&q).unwrap(), k.from_int(4));
    }

    #[test]
    fn inverses() {
        let k = KField::quadratic(rat_int(-3)).unwrap();
        assert_eq!(k.from_int(2).inv().unwrap(), k.from_rat(rat(1, 2)));
        // inv(alpha) = -alpha/3 for d = -3
        let alpha = k.alpha().unwrap();
        assert_eq!(alpha.inv().unwrap(), k.elem(rat_int(0), rat(-1, 3)).unwrap());
        // inv(1 + alpha) = (1 - alpha)/4, norm = 1 - d = 4
        let p = k.elem(rat_int(1), rat_int(1)).unwrap();
        assert_eq!(p.inv().unwrap(), k.elem(rat(1, 4), rat(-1, 4)).unwrap());
        assert_eq!(p.checked_mul(&p.inv().unwrap()).unwrap(), k.one());
    }

    #[test]
    fn square_extensions_rejected() {
        assert!(KField::quadratic(rat_int(4)).is_err());
        assert!(KField::quadratic(rat(1, 4)).is_err());
        assert!(KField::quadratic(rat_int(0)).is_err());
        assert!(KField::quadratic(rat_int(2)).is_ok());
        assert!(KField::quadratic(rat(-4, 9)).is_ok());
    }

    #[test]
    fn mismatched_sessions_rejected() {
        let k1 = KField::quadratic(rat_int(-3)).unwrap();
        let k2 = KField::quadratic(rat_int(2)).unwrap();
        let x = k1.one();
        let y = k2.one();
        assert_eq!(x.checked_add(&y), Err(Error::FieldMismatch));
    }

    #[test]
    fn zero_inverse_rejected() {
        let k = KField::rational();
        assert_eq!(k.zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn canonical_text() {
        let k = KField::quadratic(rat_int(-3)).unwrap();
        assert_eq!(k.from_rat(rat(-3, 7)).to_canonical_string(), "-3/7");
        assert_eq!(
            k.elem(rat(1, 2), rat(3, 4)).unwrap().to_canonical_string(),
            "1/2 + 3/4*alpha"
        );
        assert_eq!(
            k.elem(rat_int(2), rat_int(-1)).unwrap().to_canonical_string(),
            "2 - alpha"
        );
        assert_eq!(k.alpha().unwrap().to_canonical_string(), "alpha");
    }
}
