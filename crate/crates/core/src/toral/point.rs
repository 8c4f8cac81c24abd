use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ToralError;

pub type Rational = Ratio<i128>;

/// Largest common denominator a [`RationalTorusPoint`] may carry. Keeping it
/// within 63 bits lets `apply` reduce matrix entries modulo the denominator and
/// multiply in `i128` without overflow.
pub const MAX_DENOMINATOR: i128 = i64::MAX as i128;

/// Reduce a rational into `[0, 1)`.
pub fn frac(r: &Rational) -> Rational {
    let n = r.numer().rem_euclid(*r.denom());
    Ratio::new_raw(n, *r.denom())
}

/// Exact point of `R^2 / Z^2` with both coordinates reduced fractions in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalTorusPoint {
    x: Rational,
    y: Rational,
}

impl RationalTorusPoint {
    pub fn new(x: Rational, y: Rational) -> Result<Self, ToralError> {
        let (x, y) = (frac(&x), frac(&y));
        let (qx, qy) = (*x.denom(), *y.denom());
        let common = (qx / qx.gcd(&qy)).checked_mul(qy);
        if common.map_or(true, |q| q > MAX_DENOMINATOR) {
            return Err(ToralError::InvalidPoint(format!(
                "denominator too large in ({x}, {y})"
            )));
        }
        Ok(Self { x, y })
    }

    /// `(px/qx, py/qy)` reduced modulo 1.
    pub fn from_fractions(px: i128, qx: i128, py: i128, qy: i128) -> Result<Self, ToralError> {
        if qx == 0 || qy == 0 {
            return Err(ToralError::InvalidPoint("zero denominator".into()));
        }
        Self::new(Ratio::new(px, qx), Ratio::new(py, qy))
    }

    pub fn origin() -> Self {
        Self {
            x: Rational::zero(),
            y: Rational::zero(),
        }
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }

    /// Common denominator of both coordinates.
    pub fn denominator(&self) -> i128 {
        self.x.denom().lcm(self.y.denom())
    }

    /// The point `-p` mod 1.
    pub fn neg(&self) -> Self {
        Self {
            x: frac(&-self.x),
            y: frac(&-self.y),
        }
    }

    pub fn to_f64(&self) -> TorusPoint {
        TorusPoint::new(ratio_to_f64(&self.x), ratio_to_f64(&self.y))
    }

    /// Squared flat torus distance, exact.
    pub fn torus_distance_sq(&self, other: &Self) -> Rational {
        let dx = min_image_rational(&(self.x - other.x));
        let dy = min_image_rational(&(self.y - other.y));
        dx * dx + dy * dy
    }
}

/// Signed representative of `r` mod 1 closest to zero, in `[-1/2, 1/2]`.
pub fn min_image_rational(r: &Rational) -> Rational {
    let f = frac(r);
    if f > Ratio::new(1, 2) {
        f - Rational::from_integer(1)
    } else {
        f
    }
}

pub fn ratio_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl fmt::Display for RationalTorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{},{}/{}",
            self.x.numer(),
            self.x.denom(),
            self.y.numer(),
            self.y.denom()
        )
    }
}

impl FromStr for RationalTorusPoint {
    type Err = ToralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ToralError::InvalidPoint(format!("expected \"p1/q1,p2/q2\", got {s:?}"));
        let (xs, ys) = s.split_once(',').ok_or_else(bad)?;
        let parse = |t: &str| -> Result<Rational, ToralError> {
            let t = t.trim();
            let (n, d) = match t.split_once('/') {
                Some((n, d)) => (n.trim(), d.trim()),
                None => (t, "1"),
            };
            let n: i128 = n.parse().map_err(|_| bad())?;
            let d: i128 = d.parse().map_err(|_| bad())?;
            if d <= 0 {
                return Err(bad());
            }
            Ok(Ratio::new(n, d))
        };
        Self::new(parse(xs)?, parse(ys)?)
    }
}

impl Serialize for RationalTorusPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalTorusPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Floating point on the torus, coordinates wrapped into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

pub fn wrap_unit(v: f64) -> f64 {
    let w = v - v.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Representative of `v` mod 1 in `[-1/2, 1/2)`.
pub fn min_image(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: wrap_unit(x),
            y: wrap_unit(y),
        }
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.x, -self.y)
    }

    pub fn translate(&self, v: [f64; 2]) -> Self {
        Self::new(self.x + v[0], self.y + v[1])
    }

    /// Shortest displacement from `self` to `other`.
    pub fn displacement_to(&self, other: &Self) -> [f64; 2] {
        [min_image(other.x - self.x), min_image(other.y - self.y)]
    }

    pub fn torus_distance(&self, other: &Self) -> f64 {
        let [dx, dy] = self.displacement_to(other);
        // components are at most 1/2, so the plain formula cannot overflow
        (dx * dx + dy * dy).sqrt()
    }

    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

/// Shared view of exact and floating torus points used by the sphere cover.
pub trait TorusRep: Clone + fmt::Debug {
    fn negated(&self) -> Self;
    /// Lexicographic comparison of the `[0,1)` coordinates.
    fn lex_cmp(&self, other: &Self) -> Ordering;
    /// Whether `p` and `-p` coincide (exactly for rationals, within 1e-12 for floats).
    fn is_self_antipodal(&self) -> bool;
    fn to_float(&self) -> TorusPoint;
    /// Image under the automorphism.
    fn image(&self, aut: &super::ToralAutomorphism) -> Self;
}

impl TorusRep for RationalTorusPoint {
    fn negated(&self) -> Self {
        self.neg()
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn is_self_antipodal(&self) -> bool {
        let half = Ratio::new(1, 2);
        (self.x.is_zero() || self.x == half) && (self.y.is_zero() || self.y == half)
    }

    fn to_float(&self) -> TorusPoint {
        self.to_f64()
    }

    fn image(&self, aut: &super::ToralAutomorphism) -> Self {
        aut.apply(self)
    }
}

pub const FLOAT_BRANCH_TOL: f64 = 1e-12;

impl TorusRep for TorusPoint {
    fn negated(&self) -> Self {
        self.neg()
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        TorusPoint::lex_cmp(self, other)
    }

    fn is_self_antipodal(&self) -> bool {
        // p = -p mod 1 iff 2p is integral
        min_image(2.0 * self.x).abs() <= FLOAT_BRANCH_TOL
            && min_image(2.0 * self.y).abs() <= FLOAT_BRANCH_TOL
    }

    fn to_float(&self) -> TorusPoint {
        *self
    }

    fn image(&self, aut: &super::ToralAutomorphism) -> Self {
        aut.apply_f64(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_form_round_trips_in_reduced_form() {
        let p: RationalTorusPoint = "2/10,-1/5".parse().unwrap();
        assert_eq!(p.to_string(), "1/5,4/5");
        let o: RationalTorusPoint = "0,0".parse().unwrap();
        assert_eq!(o.to_string(), "0/1,0/1");
        assert!("1/0,1/2".parse::<RationalTorusPoint>().is_err());
        assert!("1/2".parse::<RationalTorusPoint>().is_err());
    }

    #[test]
    fn float_wrapping_stays_in_unit_interval() {
        assert_eq!(wrap_unit(-1e-18), 0.0);
        assert_eq!(wrap_unit(1.0), 0.0);
        assert!((wrap_unit(-0.25) - 0.75).abs() < 1e-15);
        let p = TorusPoint::new(0.1, 0.0);
        let q = TorusPoint::new(0.9, 0.0);
        assert!((p.torus_distance(&q) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn antipodal_points_are_the_half_lattice() {
        let half: RationalTorusPoint = "1/2,0".parse().unwrap();
        assert!(half.is_self_antipodal());
        let third: RationalTorusPoint = "1/3,0".parse().unwrap();
        assert!(!third.is_self_antipodal());
        assert!(TorusPoint::new(0.5, 0.5).is_self_antipodal());
        assert!(!TorusPoint::new(0.5, 0.25).is_self_antipodal());
    }
}
