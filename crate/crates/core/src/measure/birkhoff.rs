use num_bigint::BigInt;
use num_rational::BigRational;

use crate::space::{DynamicalSystem, MetricSpace};
use crate::toral::{exact_period, Rational, RationalTorusPoint, ToralAutomorphism};
use crate::Error;

/// Neumaier's compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

type Point<S> = <<S as DynamicalSystem>::Space as MetricSpace>::Point;

/// `(1/n) sum_{j<n} f(T^j x)`.
pub fn birkhoff_average<S, F>(system: &S, f: F, start: &Point<S>, n: usize) -> Result<f64, Error>
where
    S: DynamicalSystem,
    F: Fn(&Point<S>) -> f64,
{
    if n == 0 {
        return Err(crate::invalid("n", "must be at least 1"));
    }
    let mut acc = NeumaierSum::default();
    let mut x = start.clone();
    for j in 0..n {
        acc.add(f(&x));
        if j + 1 < n {
            x = system.step(&x)?;
        }
    }
    Ok(acc.total() / n as f64)
}

/// Running averages at the checkpoints `ns` (sorted ascending).
pub fn birkhoff_series<S, F>(
    system: &S,
    f: F,
    start: &Point<S>,
    ns: &[usize],
) -> Result<Vec<(usize, f64)>, Error>
where
    S: DynamicalSystem,
    F: Fn(&Point<S>) -> f64,
{
    if ns.first().is_some_and(|&n| n == 0) || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(crate::invalid("ns", "checkpoints must be positive and increasing"));
    }
    let mut out = Vec::with_capacity(ns.len());
    let mut acc = NeumaierSum::default();
    let mut x = start.clone();
    let mut j = 0;
    for &n in ns {
        while j < n {
            if j > 0 {
                x = system.step(&x)?;
            }
            acc.add(f(&x));
            j += 1;
        }
        out.push((n, acc.total() / n as f64));
    }
    Ok(out)
}

fn big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact Birkhoff average of a rational observable along a rational orbit.
pub fn birkhoff_average_exact<F>(
    aut: &ToralAutomorphism,
    f: F,
    start: &RationalTorusPoint,
    n: usize,
) -> Result<BigRational, Error>
where
    F: Fn(&RationalTorusPoint) -> Rational,
{
    if n == 0 {
        return Err(crate::invalid("n", "must be at least 1"));
    }
    let mut acc = BigRational::from_integer(0.into());
    let mut x = start.clone();
    for _ in 0..n {
        acc += big(&f(&x));
        x = aut.apply(&x);
    }
    Ok(acc / BigRational::from_integer(n.into()))
}

/// Average of `f` over the periodic orbit through `p`, which is the limit of
/// the Birkhoff averages and equals them whenever `n` is a multiple of the
/// period. Every rational point is periodic.
pub fn periodic_orbit_average<F>(
    aut: &ToralAutomorphism,
    f: F,
    p: &RationalTorusPoint,
) -> BigRational
where
    F: Fn(&RationalTorusPoint) -> Rational,
{
    let period = exact_period(aut, p);
    birkhoff_average_exact(aut, f, p, period).expect("period is positive")
}
