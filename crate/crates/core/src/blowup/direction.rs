//! The projective action of the matrix on directions, `theta -> arg(A u_theta)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::toral::{QuadSurd, Rational, ToralAutomorphism, ToralError};

/// Reduce an angle into `[0, 2pi)`.
pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed difference `a - b` reduced into `(-pi, pi]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

pub fn direction_map(aut: &ToralAutomorphism, theta: f64) -> f64 {
    let [x, y] = aut.matrix().mul_f64([theta.cos(), theta.sin()]);
    wrap_angle(y.atan2(x))
}

/// Direction map composed with the deck involution when `sign < 0`.
pub fn signed_direction_map(aut: &ToralAutomorphism, theta: f64, sign: i8) -> f64 {
    let t = direction_map(aut, theta);
    if sign < 0 {
        wrap_angle(t + PI)
    } else {
        t
    }
}

/// `d/dtheta arg(A u_theta) = det A / |A u_theta|^2`.
pub fn direction_map_derivative(aut: &ToralAutomorphism, theta: f64) -> f64 {
    let [x, y] = aut.matrix().mul_f64([theta.cos(), theta.sin()]);
    aut.det() as f64 / (x * x + y * y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedAngle {
    pub angle: f64,
    /// `tan(angle)`.
    pub slope: f64,
    pub derivative: f64,
}

/// Fixed points of the direction map located by sign changes on a grid of
/// `samples` angles, refined by bisection.
pub fn fixed_angles(aut: &ToralAutomorphism, samples: usize) -> Vec<FixedAngle> {
    let g = |t: f64| angle_difference(direction_map(aut, t), t);
    let samples = samples.max(8);
    let mut out = Vec::new();
    for i in 0..samples {
        let mut lo = TAU * i as f64 / samples as f64;
        let mut hi = TAU * (i + 1) as f64 / samples as f64;
        let (glo, ghi) = (g(lo), g(hi));
        // skip the jumps of the wrapped difference near +-pi
        if glo.abs() > PI / 2.0 || ghi.abs() > PI / 2.0 {
            continue;
        }
        if glo == 0.0 {
            out.push(lo);
            continue;
        }
        if glo.signum() == ghi.signum() {
            continue;
        }
        let up = glo < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (g(mid) < 0.0) == up {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out.into_iter()
        .map(|angle| FixedAngle {
            angle: wrap_angle(angle),
            slope: angle.tan(),
            derivative: direction_map_derivative(aut, angle),
        })
        .collect()
}

/// Whether the slope `t` satisfies `tan(arg(A (1, t))) = t`, i.e.
/// `b t^2 + (a - d) t - c = 0`, in exact surd arithmetic.
pub fn is_invariant_slope(aut: &ToralAutomorphism, t: &QuadSurd) -> Result<bool, ToralError> {
    let m = aut.matrix();
    let r = |v: i128| QuadSurd::rational(Rational::from_integer(v), t.radicand);
    let lhs = r(m.b)
        .checked_mul(&t.checked_mul(t)?)?
        .checked_add(&r(m.a - m.d).checked_mul(t)?)?
        .checked_sub(&r(m.c))?;
    Ok(lhs == r(0))
}
