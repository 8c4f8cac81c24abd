//! Integer-matrix automorphisms of the 2-torus, computed exactly.

mod matrix;
mod periodic;
mod point;
mod surd;

use std::cmp::Ordering;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrix::IntMatrix2;
pub use periodic::{
    exact_period, lefschetz_count, orbit, periodic_orbits, periodic_points,
    points_of_exact_period,
};
pub use point::{
    frac, min_image, min_image_rational, ratio_to_f64, wrap_unit, Rational, RationalTorusPoint,
    TorusPoint, TorusRep, FLOAT_BRANCH_TOL, MAX_DENOMINATOR,
};
pub use surd::{squarefree_split, surd, QuadSurd};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToralError {
    #[error("matrix {0} is not unimodular (|det| must be 1)")]
    NotUnimodular(IntMatrix2),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("automorphism is not hyperbolic")]
    NotHyperbolic,
    #[error("period must be at least 1, got {0}")]
    InvalidPeriod(i64),
    #[error("invalid torus point: {0}")]
    InvalidPoint(String),
    #[error("division by zero in surd arithmetic")]
    DivisionByZero,
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

/// A toral automorphism `x -> A x mod 1` together with its integer inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "IntMatrix2", into = "IntMatrix2")]
pub struct ToralAutomorphism {
    matrix: IntMatrix2,
    inverse: IntMatrix2,
}

impl TryFrom<IntMatrix2> for ToralAutomorphism {
    type Error = ToralError;

    fn try_from(m: IntMatrix2) -> Result<Self, Self::Error> {
        Self::new(m)
    }
}

impl From<ToralAutomorphism> for IntMatrix2 {
    fn from(a: ToralAutomorphism) -> Self {
        a.matrix
    }
}

impl ToralAutomorphism {
    pub fn new(matrix: IntMatrix2) -> Result<Self, ToralError> {
        let det = matrix
            .checked_det()
            .ok_or(ToralError::Overflow("determinant"))?;
        if det.abs() != 1 {
            return Err(ToralError::NotUnimodular(matrix));
        }
        // A^{-1} = adj(A) / det, and det = +-1
        let adj = matrix.adjugate();
        let inverse = IntMatrix2::new(adj.a * det, adj.b * det, adj.c * det, adj.d * det);
        Ok(Self { matrix, inverse })
    }

    /// Arnold's cat map `(x, y) -> (2x + y, x + y)`.
    pub fn cat_map() -> Self {
        Self::new(IntMatrix2::new(2, 1, 1, 1)).expect("cat map is unimodular")
    }

    pub fn matrix(&self) -> &IntMatrix2 {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &IntMatrix2 {
        &self.inverse
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.inverse,
            inverse: self.matrix,
        }
    }

    pub fn det(&self) -> i128 {
        self.matrix.det()
    }

    /// No eigenvalue on the unit circle.
    pub fn is_hyperbolic(&self) -> bool {
        let tr = self.matrix.trace();
        if self.det() == 1 {
            tr.abs() > 2
        } else {
            tr != 0
        }
    }

    /// `A^n`, using the inverse matrix for negative `n`.
    pub fn power(&self, n: i64) -> Result<Self, ToralError> {
        let e = u32::try_from(n.unsigned_abs()).map_err(|_| ToralError::Overflow("exponent"))?;
        let (m, inv) = if n >= 0 {
            (self.matrix.checked_pow(e)?, self.inverse.checked_pow(e)?)
        } else {
            (self.inverse.checked_pow(e)?, self.matrix.checked_pow(e)?)
        };
        Ok(Self {
            matrix: m,
            inverse: inv,
        })
    }

    /// `(A p) mod 1`, exactly. The denominator of the image divides that of `p`.
    pub fn apply(&self, p: &RationalTorusPoint) -> RationalTorusPoint {
        apply_matrix(&self.matrix, p)
    }

    pub fn apply_inverse(&self, p: &RationalTorusPoint) -> RationalTorusPoint {
        apply_matrix(&self.inverse, p)
    }

    pub fn apply_f64(&self, p: &TorusPoint) -> TorusPoint {
        let [x, y] = self.matrix.mul_f64([p.x, p.y]);
        TorusPoint::new(x, y)
    }

    pub fn apply_inverse_f64(&self, p: &TorusPoint) -> TorusPoint {
        let [x, y] = self.inverse.mul_f64([p.x, p.y]);
        TorusPoint::new(x, y)
    }

    /// Exact eigen-data. Fails for non-hyperbolic matrices.
    pub fn eigen(&self) -> Result<EigenData, ToralError> {
        EigenData::of(self)
    }
}

/// `(M p) mod 1` for any integer matrix; entries are reduced modulo the
/// common denominator before multiplying, so no intermediate exceeds `q^2`.
pub(crate) fn apply_matrix(m: &IntMatrix2, p: &RationalTorusPoint) -> RationalTorusPoint {
    let q = p.denominator();
    let px = p.x().numer() * (q / p.x().denom());
    let py = p.y().numer() * (q / p.y().denom());
    let r = |v: i128| v.rem_euclid(q);
    let nx = (r(m.a) * px + r(m.b) * py).rem_euclid(q);
    let ny = (r(m.c) * px + r(m.d) * py).rem_euclid(q);
    RationalTorusPoint::new(Ratio::new(nx, q), Ratio::new(ny, q))
        .expect("image denominator divides the input denominator")
}

/// Eigenvalues and eigendirections of a hyperbolic automorphism, in exact
/// surd form and as floats.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenData {
    pub lambda_u: f64,
    pub lambda_s: f64,
    /// Unit eigenvectors with positive first coordinate.
    pub dir_u: [f64; 2],
    pub dir_s: [f64; 2],
    pub lambda_u_exact: QuadSurd,
    pub lambda_s_exact: QuadSurd,
    /// Slope `y/x` of the eigendirection, exact.
    pub slope_u: QuadSurd,
    pub slope_s: QuadSurd,
}

impl EigenData {
    fn of(aut: &ToralAutomorphism) -> Result<Self, ToralError> {
        if !aut.is_hyperbolic() {
            return Err(ToralError::NotHyperbolic);
        }
        let m = aut.matrix();
        let tr = m.trace();
        let det = m.det();
        // roots of t^2 - tr t + det: (tr +- sqrt(disc)) / 2
        let disc = tr * tr - 4 * det;
        let (k, d) = squarefree_split(disc);
        let half = Ratio::new(1, 2);
        let plus = QuadSurd::new(Rational::from_integer(tr) * half, Ratio::new(k, 2), d);
        let minus = QuadSurd::new(Rational::from_integer(tr) * half, Ratio::new(-k, 2), d);
        let one = QuadSurd::rational(Rational::one(), d);
        let (lu, ls) = if plus.abs().cmp_exact(&one)? == Ordering::Greater {
            (plus, minus)
        } else {
            (minus, plus)
        };
        // a hyperbolic matrix has b != 0, so (1, (lambda - a)/b) is an eigenvector
        if m.b.is_zero() {
            return Err(ToralError::Inconsistent("hyperbolic matrix with b = 0".into()));
        }
        let a_s = QuadSurd::rational(Rational::from_integer(m.a), d);
        let inv_b = Ratio::new(1, m.b);
        let slope_u = lu.checked_sub(&a_s)?.scale(&inv_b)?;
        let slope_s = ls.checked_sub(&a_s)?.scale(&inv_b)?;
        let unit = |s: &QuadSurd| {
            let y = s.to_f64();
            let n = (1.0 + y * y).sqrt();
            [1.0 / n, y / n]
        };
        Ok(Self {
            lambda_u: lu.to_f64(),
            lambda_s: ls.to_f64(),
            dir_u: unit(&slope_u),
            dir_s: unit(&slope_s),
            lambda_u_exact: lu,
            lambda_s_exact: ls,
            slope_u,
            slope_s,
        })
    }

    /// Checks `A (1, m) = lambda (1, m)` in exact surd arithmetic.
    pub fn verify_exact(&self, m: &IntMatrix2) -> Result<bool, ToralError> {
        let d = self.lambda_u_exact.radicand;
        let check = |lambda: &QuadSurd, slope: &QuadSurd| -> Result<bool, ToralError> {
            let r = |v: i128| QuadSurd::rational(Rational::from_integer(v), d);
            let one = r(1);
            let img_x = r(m.a).checked_add(&r(m.b).checked_mul(slope)?)?;
            let img_y = r(m.c).checked_add(&r(m.d).checked_mul(slope)?)?;
            Ok(img_x == lambda.checked_mul(&one)? && img_y == lambda.checked_mul(slope)?)
        };
        Ok(check(&self.lambda_u_exact, &self.slope_u)? && check(&self.lambda_s_exact, &self.slope_s)?)
    }
}
