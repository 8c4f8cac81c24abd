use num_rational::BigRational;
use num_traits::{pow, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::Error;

/// The linear saddle `f(x, y) = (a x, b y)` on the box `[-eps, eps]^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleModel {
    a: f64,
    b: f64,
    epsilon_box: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaddleExit {
    /// Last step `m` at which `a^m |p| >= b^m |q|`.
    pub m: u32,
    /// `b^(2m) |q| < eps`: the orbit is still in the box at step `2m`.
    pub bound_ok: bool,
}

impl SaddleModel {
    pub fn new(a: f64, b: f64, epsilon_box: f64) -> Result<Self, Error> {
        if !(a > 0.0 && a < 1.0 && b > 1.0) {
            return Err(crate::invalid("a, b", format!("need 0 < a < 1 < b, got {a}, {b}")));
        }
        if (a * b - 1.0).abs() > 1e-12 {
            return Err(crate::invalid("a, b", format!("a b = {} is not 1", a * b)));
        }
        if !(epsilon_box > 0.0 && epsilon_box.is_finite()) {
            return Err(crate::invalid("epsilon_box", format!("{epsilon_box} is not positive")));
        }
        Ok(Self { a, b, epsilon_box })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn epsilon_box(&self) -> f64 {
        self.epsilon_box
    }

    pub fn contains(&self, p: f64, q: f64) -> bool {
        p.abs() <= self.epsilon_box && q.abs() <= self.epsilon_box
    }

    pub fn step(&self, p: f64, q: f64) -> (f64, f64) {
        (self.a * p, self.b * q)
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// `a^m |p| >= b^m |q|`, compared exactly on the binary values of the inputs.
fn still_stable(a: &BigRational, b: &BigRational, p: &BigRational, q: &BigRational, m: u32) -> bool {
    pow(a.clone(), m as usize) * p >= pow(b.clone(), m as usize) * q
}

/// Number of steps the saddle keeps `(p, q)` on the stable side `|x| >= |y|`.
///
/// `m` is the unique integer with `a^m |p| >= b^m |q|` and
/// `a^(m+1) |p| < b^(m+1) |q|`. A logarithmic estimate is corrected by exact
/// rational comparisons. When the point leaves the stable side after one
/// step the result is `m = 0`.
pub fn saddle_exit_time(model: &SaddleModel, p: f64, q: f64) -> Result<SaddleExit, Error> {
    if q == 0.0 {
        return Err(Error::DegenerateInput("q = 0 lies on the stable axis".into()));
    }
    if !(p.is_finite() && q.is_finite()) || !model.contains(p, q) {
        return Err(Error::DegenerateInput(format!("({p}, {q}) is outside the box")));
    }
    if p.abs() < q.abs() {
        return Err(Error::DegenerateInput(format!("|p| < |q| for ({p}, {q})")));
    }
    let (a, b) = (exact(model.a), exact(model.b));
    let (pe, qe) = (exact(p).abs(), exact(q).abs());
    let guess = ((p.abs() / q.abs()).ln() / (model.b / model.a).ln()).floor();
    let mut m = if guess.is_finite() && guess > 0.0 { guess as u32 } else { 0 };
    while m > 0 && !still_stable(&a, &b, &pe, &qe, m) {
        m -= 1;
    }
    while still_stable(&a, &b, &pe, &qe, m + 1) {
        m += 1;
    }
    let reach = pow(b, 2 * m as usize) * &qe;
    Ok(SaddleExit {
        m,
        bound_ok: reach < exact(model.epsilon_box),
    })
}

/// `b^(2m) |q|` as a float, for reports.
pub fn saddle_reach(model: &SaddleModel, q: f64, m: u32) -> f64 {
    (pow(exact(model.b), 2 * m as usize) * exact(q).abs())
        .to_f64()
        .unwrap_or(f64::INFINITY)
}
