use std::collections::BTreeSet;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::One;

use super::point::Rational;
use super::{QuadSurd, RationalTorusPoint, ToralAutomorphism, ToralError};

/// All points with `A^n x = x`, i.e. every point whose period divides `n`.
///
/// The fixed points of `A^n` are `M^{-1} Z^2 / Z^2` for `M = A^n - I`. A column
/// Hermite form `M W = [[g, 0], [h21, h22]]` (with `W` unimodular) gives the
/// coset representatives `{(i, j) : 0 <= i < g, 0 <= j < |h22|}` of
/// `Z^2 / M Z^2`, and each representative `k` yields the point
/// `adj(M) k / det(M) mod 1`. The result is sorted and has exactly
/// `|det(A^n - I)|` elements; each one is checked against `A^n`.
pub fn periodic_points(
    aut: &ToralAutomorphism,
    n: i64,
) -> Result<Vec<RationalTorusPoint>, ToralError> {
    if n < 1 {
        return Err(ToralError::InvalidPeriod(n));
    }
    let an = aut.power(n)?;
    let m = an.matrix().sub_identity()?;
    let det = m
        .checked_det()
        .ok_or(ToralError::Overflow("det(A^n - I)"))?;
    if det == 0 {
        return Err(ToralError::NotHyperbolic);
    }
    let q = det.abs();
    if q > super::MAX_DENOMINATOR {
        return Err(ToralError::Overflow("periodic point denominator"));
    }

    let eg = m.a.extended_gcd(&m.b);
    let g = eg.gcd;
    debug_assert_eq!(eg.x * m.a + eg.y * m.b, g);
    let h22 = det / g;

    let adj = m.adjugate();
    // reduce adj modulo q: only adj k mod q matters
    let r = |v: i128| v.rem_euclid(q);
    let (aa, ab, ac, ad) = (r(adj.a), r(adj.b), r(adj.c), r(adj.d));

    let mut out = Vec::with_capacity(q as usize);
    for i in 0..g {
        for j in 0..h22.abs() {
            let nx = (aa * i + ab * j).rem_euclid(q);
            let ny = (ac * i + ad * j).rem_euclid(q);
            // adj(M) k / det; the sign of det flips both coordinates
            let (nx, ny) = if det < 0 {
                ((q - nx) % q, (q - ny) % q)
            } else {
                (nx, ny)
            };
            let p = RationalTorusPoint::new(Ratio::new(nx, q), Ratio::new(ny, q))?;
            if an.apply(&p) != p {
                return Err(ToralError::Inconsistent(format!(
                    "{p} is not fixed by A^{n}"
                )));
            }
            out.push(p);
        }
    }
    out.sort();
    let before = out.len();
    out.dedup();
    if out.len() != before || out.len() as i128 != q {
        return Err(ToralError::Inconsistent(format!(
            "expected {q} distinct fixed points of A^{n}, found {}",
            out.len()
        )));
    }
    Ok(out)
}

fn proper_divisors(n: i64) -> Vec<i64> {
    (1..n).filter(|d| n % d == 0).collect()
}

/// Points of least period exactly `n`.
pub fn points_of_exact_period(
    aut: &ToralAutomorphism,
    n: i64,
) -> Result<Vec<RationalTorusPoint>, ToralError> {
    let pts = periodic_points(aut, n)?;
    let powers = proper_divisors(n)
        .into_iter()
        .map(|d| aut.power(d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pts
        .into_iter()
        .filter(|p| powers.iter().all(|ad| ad.apply(p) != *p))
        .collect())
}

/// Least period of a rational point, by exact iteration.
pub fn exact_period(aut: &ToralAutomorphism, p: &RationalTorusPoint) -> usize {
    let mut cur = aut.apply(p);
    let mut k = 1;
    while cur != *p {
        cur = aut.apply(&cur);
        k += 1;
    }
    k
}

/// Forward orbit of `p` up to (excluding) its first return.
pub fn orbit(aut: &ToralAutomorphism, p: &RationalTorusPoint) -> Vec<RationalTorusPoint> {
    let mut out = vec![p.clone()];
    let mut cur = aut.apply(p);
    while cur != *p {
        out.push(cur.clone());
        cur = aut.apply(&cur);
    }
    out
}

/// Orbits of exact period `n`, each starting at its smallest point; sorted.
pub fn periodic_orbits(
    aut: &ToralAutomorphism,
    n: i64,
) -> Result<Vec<Vec<RationalTorusPoint>>, ToralError> {
    let mut remaining: BTreeSet<_> = points_of_exact_period(aut, n)?.into_iter().collect();
    let mut out = Vec::new();
    while let Some(first) = remaining.pop_first() {
        let o = orbit(aut, &first);
        for p in &o[1..] {
            remaining.remove(p);
        }
        out.push(o);
    }
    Ok(out)
}

/// `|det(A^n - I)| = |(1 - lambda_u^n)(1 - lambda_s^n)|`, evaluated in exact
/// surd arithmetic from the eigenvalues rather than from matrix powers.
pub fn lefschetz_count(aut: &ToralAutomorphism, n: u32) -> Result<i128, ToralError> {
    let e = aut.eigen()?;
    let d = e.lambda_u_exact.radicand;
    let one = QuadSurd::rational(Rational::one(), d);
    let fu = one.checked_sub(&e.lambda_u_exact.checked_pow(n)?)?;
    let fs = one.checked_sub(&e.lambda_s_exact.checked_pow(n)?)?;
    let prod = fu.checked_mul(&fs)?;
    if !prod.is_rational() || !prod.p.is_integer() {
        return Err(ToralError::Inconsistent(format!(
            "Lefschetz number {prod} is not an integer"
        )));
    }
    Ok(prod.p.to_integer().abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: &str) -> RationalTorusPoint {
        s.parse().unwrap()
    }

    /// Oracle: every point of the `q x q` grid fixed by `A^n`.
    fn brute_force_fixed(aut: &ToralAutomorphism, n: i64, q: i128) -> Vec<RationalTorusPoint> {
        let an = aut.power(n).unwrap();
        let mut out = Vec::new();
        for i in 0..q {
            for j in 0..q {
                let p = RationalTorusPoint::from_fractions(i, q, j, q).unwrap();
                if an.apply(&p) == p {
                    out.push(p);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn period_examples() {
        let cat = ToralAutomorphism::cat_map();
        assert_eq!(periodic_points(&cat, 1).unwrap(), vec![pt("0,0")]);
        let p2 = periodic_points(&cat, 2).unwrap();
        assert_eq!(p2.len(), 5);
        assert_eq!(p2, brute_force_fixed(&cat, 2, 5));
        let p3 = periodic_points(&cat, 3).unwrap();
        assert_eq!(p3.len(), 16);
        // the 16 solutions all live on the 1/4 grid
        assert_eq!(p3, brute_force_fixed(&cat, 3, 4));
        assert_eq!(brute_force_fixed(&cat, 3, 16), p3);
    }

    #[test]
    fn enumeration_agrees_with_grid_brute_force_up_to_six() {
        let cat = ToralAutomorphism::cat_map();
        for n in 1..=6 {
            // every solution of (A^n - I) x in Z^2 has denominator dividing det(A^n - I)
            let m = cat.power(n).unwrap().matrix().sub_identity().unwrap();
            let q = m.det().abs();
            assert_eq!(periodic_points(&cat, n).unwrap(), brute_force_fixed(&cat, n, q), "period {n}");
        }
    }

    #[test]
    fn orbit_examples() {
        let cat = ToralAutomorphism::cat_map();
        assert_eq!(orbit(&cat, &pt("0,0")), vec![pt("0,0")]);
        assert_eq!(
            orbit(&cat, &pt("1/2,0")),
            vec![pt("1/2,0"), pt("0,1/2"), pt("1/2,1/2")]
        );
        let o = orbit(&cat, &pt("1/5,2/5"));
        assert_eq!(o.len(), 2);
        assert_eq!(exact_period(&cat, &pt("1/5,2/5")), 2);
    }

    #[test]
    fn exact_period_filtering() {
        let cat = ToralAutomorphism::cat_map();
        let exact4 = points_of_exact_period(&cat, 4).unwrap();
        // 45 fixed points of A^4, minus the 5 of A^2 (which include A's one)
        assert_eq!(exact4.len(), 40);
        assert!(exact4.iter().all(|p| exact_period(&cat, p) == 4));
        let orbits = periodic_orbits(&cat, 4).unwrap();
        assert_eq!(orbits.len(), 10);
    }

    #[test]
    fn lefschetz_matches_trace_formula() {
        let cat = ToralAutomorphism::cat_map();
        let expected = [1, 5, 16, 45, 121, 320, 841, 2205];
        for (i, &e) in expected.iter().enumerate() {
            let n = i as u32 + 1;
            assert_eq!(lefschetz_count(&cat, n).unwrap(), e);
            let tr = cat.power(n as i64).unwrap().matrix().trace();
            assert_eq!((tr - 2).abs(), e);
        }
    }

    #[test]
    fn orientation_reversing_counts() {
        // det -1: |det(A^n - I)| = |det(A)^n - tr(A^n) + 1|
        let m = ToralAutomorphism::new(super::super::IntMatrix2::new(1, 1, 1, 0)).unwrap();
        for n in 1..=8 {
            let an = m.power(n).unwrap();
            let det_n = an.det();
            let expect = (det_n - an.matrix().trace() + 1).abs();
            assert_eq!(periodic_points(&m, n).unwrap().len() as i128, expect);
            assert_eq!(lefschetz_count(&m, n as u32).unwrap(), expect);
        }
    }

    #[test]
    fn invalid_period_is_rejected() {
        let cat = ToralAutomorphism::cat_map();
        assert_eq!(periodic_points(&cat, 0).unwrap_err(), ToralError::InvalidPeriod(0));
    }
}
