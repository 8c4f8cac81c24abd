use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ToralError;

/// A 2x2 integer matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix2 {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub d: i128,
}

impl IntMatrix2 {
    pub const fn new(a: i128, b: i128, c: i128, d: i128) -> Self {
        Self { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Self::new(1, 0, 0, 1)
    }

    pub fn from_rows(rows: [[i128; 2]; 2]) -> Self {
        Self::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn rows(&self) -> [[i128; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn det(&self) -> i128 {
        self.a * self.d - self.b * self.c
    }

    pub fn checked_det(&self) -> Option<i128> {
        self.a
            .checked_mul(self.d)?
            .checked_sub(self.b.checked_mul(self.c)?)
    }

    pub fn trace(&self) -> i128 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }

    /// `adj(M)`, so that `M * adj(M) = det(M) * I`.
    pub fn adjugate(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, ToralError> {
        let dot = |x: i128, y: i128, z: i128, w: i128| -> Option<i128> {
            x.checked_mul(y)?.checked_add(z.checked_mul(w)?)
        };
        let of = || ToralError::Overflow("matrix product");
        Ok(Self::new(
            dot(self.a, rhs.a, self.b, rhs.c).ok_or_else(of)?,
            dot(self.a, rhs.b, self.b, rhs.d).ok_or_else(of)?,
            dot(self.c, rhs.a, self.d, rhs.c).ok_or_else(of)?,
            dot(self.c, rhs.b, self.d, rhs.d).ok_or_else(of)?,
        ))
    }

    /// Non-negative power by repeated squaring, with overflow checks.
    pub fn checked_pow(&self, mut n: u32) -> Result<Self, ToralError> {
        let mut acc = Self::identity();
        let mut base = *self;
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

    pub fn sub_identity(&self) -> Result<Self, ToralError> {
        let of = || ToralError::Overflow("A - I");
        Ok(Self::new(
            self.a.checked_sub(1).ok_or_else(of)?,
            self.b,
            self.c,
            self.d.checked_sub(1).ok_or_else(of)?,
        ))
    }

    pub fn mul_vec(&self, v: [i128; 2]) -> Option<[i128; 2]> {
        Some([
            self.a.checked_mul(v[0])?.checked_add(self.b.checked_mul(v[1])?)?,
            self.c.checked_mul(v[0])?.checked_add(self.d.checked_mul(v[1])?)?,
        ])
    }

    pub fn mul_f64(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a as f64 * v[0] + self.b as f64 * v[1],
            self.c as f64 * v[0] + self.d as f64 * v[1],
        ]
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let (a, b, c, d) = (self.a as f64, self.b as f64, self.c as f64, self.d as f64);
        let frob2 = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (frob2 * frob2 - 4.0 * det * det).max(0.0).sqrt();
        ((frob2 + disc) / 2.0).sqrt()
    }
}

impl fmt::Display for IntMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

// JSON form is `[[a, b], [c, d]]` with 64-bit entries.
impl Serialize for IntMatrix2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let narrow = |v: i128| {
            i64::try_from(v).map_err(|_| serde::ser::Error::custom("matrix entry exceeds 64 bits"))
        };
        let rows = [
            [narrow(self.a)?, narrow(self.b)?],
            [narrow(self.c)?, narrow(self.d)?],
        ];
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntMatrix2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = <[[i64; 2]; 2]>::deserialize(deserializer)
            .map_err(|e| D::Error::custom(format!("expected [[a, b], [c, d]] integers: {e}")))?;
        Ok(Self::new(
            rows[0][0].into(),
            rows[0][1].into(),
            rows[1][0].into(),
            rows[1][1].into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_norm_of_symmetric_matrix_is_spectral_radius() {
        let cat = IntMatrix2::new(2, 1, 1, 1);
        let lambda = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((cat.operator_norm() - lambda).abs() < 1e-12);
        assert!((IntMatrix2::identity().operator_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pow_overflow_is_reported() {
        let cat = IntMatrix2::new(2, 1, 1, 1);
        assert!(cat.checked_pow(40).is_ok());
        assert_eq!(
            cat.checked_pow(200).unwrap_err(),
            ToralError::Overflow("matrix product")
        );
    }

    #[test]
    fn json_form_is_nested_rows() {
        let m = IntMatrix2::new(2, 1, 1, 1);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[2,1],[1,1]]");
        let back: IntMatrix2 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<IntMatrix2>("[[2,1],[1]]").is_err());
    }
}
