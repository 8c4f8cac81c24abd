//! Exact arithmetic in `Q(sqrt(D))`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, Zero};

use super::point::Rational;
use super::ToralError;

/// `p + q * sqrt(radicand)` with rational `p`, `q` and a squarefree radicand `> 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    pub p: Rational,
    pub q: Rational,
    pub radicand: i128,
}

fn of() -> ToralError {
    ToralError::Overflow("surd arithmetic")
}

/// Split `n > 0` as `k^2 * m` with `m` squarefree.
pub fn squarefree_split(n: i128) -> (i128, i128) {
    assert!(n > 0, "squarefree_split needs a positive integer");
    let mut k = 1i128;
    let mut m = n;
    let mut f = 2i128;
    while f * f <= m {
        while m % (f * f) == 0 {
            m /= f * f;
            k *= f;
        }
        f += 1;
    }
    (k, m)
}

impl QuadSurd {
    pub fn new(p: Rational, q: Rational, radicand: i128) -> Self {
        Self { p, q, radicand }
    }

    pub fn rational(p: Rational, radicand: i128) -> Self {
        Self::new(p, Rational::zero(), radicand)
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    fn same_field(&self, other: &Self) {
        debug_assert_eq!(self.radicand, other.radicand, "mixed quadratic fields");
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ToralError> {
        self.same_field(other);
        Ok(Self::new(
            self.p.checked_add(&other.p).ok_or_else(of)?,
            self.q.checked_add(&other.q).ok_or_else(of)?,
            self.radicand,
        ))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ToralError> {
        self.same_field(other);
        Ok(Self::new(
            self.p.checked_sub(&other.p).ok_or_else(of)?,
            self.q.checked_sub(&other.q).ok_or_else(of)?,
            self.radicand,
        ))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ToralError> {
        self.same_field(other);
        let d = Rational::from_integer(self.radicand);
        let pp = self.p.checked_mul(&other.p).ok_or_else(of)?;
        let qq = self
            .q
            .checked_mul(&other.q)
            .and_then(|v| v.checked_mul(&d))
            .ok_or_else(of)?;
        let pq = self.p.checked_mul(&other.q).ok_or_else(of)?;
        let qp = self.q.checked_mul(&other.p).ok_or_else(of)?;
        Ok(Self::new(
            pp.checked_add(&qq).ok_or_else(of)?,
            pq.checked_add(&qp).ok_or_else(of)?,
            self.radicand,
        ))
    }

    pub fn scale(&self, k: &Rational) -> Result<Self, ToralError> {
        Ok(Self::new(
            self.p.checked_mul(k).ok_or_else(of)?,
            self.q.checked_mul(k).ok_or_else(of)?,
            self.radicand,
        ))
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.p, -self.q, self.radicand)
    }

    /// Field norm `p^2 - q^2 D`.
    pub fn norm(&self) -> Result<Rational, ToralError> {
        let d = Rational::from_integer(self.radicand);
        let a = self.p.checked_mul(&self.p).ok_or_else(of)?;
        let b = self
            .q
            .checked_mul(&self.q)
            .and_then(|v| v.checked_mul(&d))
            .ok_or_else(of)?;
        a.checked_sub(&b).ok_or_else(of)
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, ToralError> {
        let n = other.norm()?;
        if n.is_zero() {
            return Err(ToralError::DivisionByZero);
        }
        self.checked_mul(&other.conjugate())?
            .scale(&(Rational::one() / n))
    }

    pub fn checked_pow(&self, mut n: u32) -> Result<Self, ToralError> {
        let mut acc = Self::rational(Rational::one(), self.radicand);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.checked_mul(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Exact sign, decided without floating point.
    pub fn signum(&self) -> Ordering {
        let sp = self.p.cmp(&Rational::zero());
        let sq = self.q.cmp(&Rational::zero());
        if sq == Ordering::Equal {
            return sp;
        }
        if sp == Ordering::Equal || sp == sq {
            return sq;
        }
        // opposite signs: compare p^2 with q^2 D
        let p2 = self.p * self.p;
        let q2d = self.q * self.q * Rational::from_integer(self.radicand);
        match p2.cmp(&q2d) {
            Ordering::Greater => sp,
            Ordering::Less => sq,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            Self::new(-self.p, -self.q, self.radicand)
        } else {
            self.clone()
        }
    }

    pub fn cmp_exact(&self, other: &Self) -> Result<Ordering, ToralError> {
        Ok(self.checked_sub(other)?.signum())
    }

    pub fn to_f64(&self) -> f64 {
        let f = |r: &Rational| *r.numer() as f64 / *r.denom() as f64;
        f(&self.p) + f(&self.q) * (self.radicand as f64).sqrt()
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            return write!(f, "{}", self.p);
        }
        let sign = if self.q.is_negative() { '-' } else { '+' };
        write!(f, "{} {} {}*sqrt({})", self.p, sign, self.q.abs(), self.radicand)
    }
}

/// Convenience constructor `(p_num/p_den) + (q_num/q_den) sqrt(d)`.
pub fn surd(p_num: i128, p_den: i128, q_num: i128, q_den: i128, d: i128) -> QuadSurd {
    QuadSurd::new(Ratio::new(p_num, p_den), Ratio::new(q_num, q_den), d)
}
