//! The branched double cover of the sphere by the torus, `(x, y) ~ (-x, -y)`.
//!
//! The sphere is modelled intrinsically as the quotient ("pillowcase") with the
//! quotient of the flat metric. Every class has a canonical representative: the
//! lexicographically smaller of `p` and `-p` in `[0, 1)^2`. The four branch
//! points are the half-lattice points `C = {0, 1/2}^2`.

use std::cmp::Ordering;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::toral::{
    min_image, min_image_rational, Rational, RationalTorusPoint, ToralAutomorphism, TorusPoint,
    TorusRep,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("no isometric chart exists at the branch point {0}")]
    BranchPoint(String),
    #[error("chart radius must be positive, got {0}")]
    InvalidRadius(f64),
}

/// A point of the sphere, stored as its canonical torus representative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint<P> {
    rep: P,
    is_branch: bool,
}

pub type ExactSpherePoint = SpherePoint<RationalTorusPoint>;
pub type FloatSpherePoint = SpherePoint<TorusPoint>;

impl<P: TorusRep> SpherePoint<P> {
    pub fn rep(&self) -> &P {
        &self.rep
    }

    pub fn is_branch(&self) -> bool {
        self.is_branch
    }

    /// Both members of the class (equal at branch points).
    pub fn lifts(&self) -> [P; 2] {
        [self.rep.clone(), self.rep.negated()]
    }

    pub fn to_float(&self) -> FloatSpherePoint {
        project(&self.rep.to_float())
    }
}

impl Eq for ExactSpherePoint {}

impl PartialOrd for ExactSpherePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactSpherePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rep.cmp(&other.rep)
    }
}

impl std::hash::Hash for ExactSpherePoint {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rep.hash(state);
    }
}

/// `pi(p)`: the canonical representative of `{p, -p}`.
pub fn project<P: TorusRep>(p: &P) -> SpherePoint<P> {
    let q = p.negated();
    let is_branch = p.is_self_antipodal();
    let rep = if q.lex_cmp(p) == Ordering::Less {
        q
    } else {
        p.clone()
    };
    SpherePoint { rep, is_branch }
}

/// The factor map `G` with `G(pi(p)) = pi(A p)`; well defined since `A(-p) = -A(p)`.
pub fn factor_apply<P: TorusRep>(aut: &ToralAutomorphism, s: &SpherePoint<P>) -> SpherePoint<P> {
    project(&s.rep.image(aut))
}

pub fn factor_apply_inverse<P: TorusRep>(
    aut: &ToralAutomorphism,
    s: &SpherePoint<P>,
) -> SpherePoint<P> {
    project(&s.rep.image(&aut.inverse()))
}

/// Quotient metric: the flat torus distance minimised over lifts.
pub fn sphere_metric<P: TorusRep>(s1: &SpherePoint<P>, s2: &SpherePoint<P>) -> f64 {
    let a = s1.rep.to_float();
    let b = s2.rep.to_float();
    a.torus_distance(&b).min(a.torus_distance(&b.neg()))
}

/// Exact squared quotient distance between rational sphere points.
pub fn sphere_distance_sq_exact(s1: &ExactSpherePoint, s2: &ExactSpherePoint) -> Rational {
    let a = &s1.rep;
    let b = &s2.rep;
    let d1 = a.torus_distance_sq(b);
    let d2 = a.torus_distance_sq(&b.neg());
    d1.min(d2)
}

/// The four branch points `{(0,0), (1/2,0), (0,1/2), (1/2,1/2)}`.
pub fn branch_points() -> [RationalTorusPoint; 4] {
    let h = Ratio::new(1, 2);
    let z = Rational::zero();
    [
        RationalTorusPoint::new(z, z).unwrap(),
        RationalTorusPoint::new(h, z).unwrap(),
        RationalTorusPoint::new(z, h).unwrap(),
        RationalTorusPoint::new(h, h).unwrap(),
    ]
}

/// Flat distance from a torus point to the half lattice `C`.
pub fn distance_to_branch_set(p: &TorusPoint) -> f64 {
    let dx = min_image(2.0 * p.x).abs() / 2.0;
    let dy = min_image(2.0 * p.y).abs() / 2.0;
    dx.hypot(dy)
}

/// Exact squared distance from a rational point to the half lattice `C`.
pub fn distance_to_branch_set_sq_exact(p: &RationalTorusPoint) -> Rational {
    let two = Rational::from_integer(2);
    let half = Ratio::new(1, 2);
    let dx = min_image_rational(&(p.x() * two)) * half;
    let dy = min_image_rational(&(p.y() * two)) * half;
    dx * dx + dy * dy
}

/// Shortest displacement from `center` to the lift of `s` nearest to it.
pub fn local_displacement(center: &TorusPoint, s: &FloatSpherePoint) -> [f64; 2] {
    let v1 = center.displacement_to(&s.rep);
    let v2 = center.displacement_to(&s.rep.neg());
    if v1[0].hypot(v1[1]) <= v2[0].hypot(v2[1]) {
        v1
    } else {
        v2
    }
}

/// A ball on which `pi` is an isometry onto its image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereChart {
    pub center: FloatSpherePoint,
    pub radius: f64,
    pub lift: TorusPoint,
}

/// Largest radius for which a ball around `lift` maps isometrically to the
/// sphere: half the distance to the branch set, which is a quarter of the
/// distance from `lift` to its antipode `-lift`.
pub fn isometric_radius(lift: &TorusPoint) -> f64 {
    distance_to_branch_set(lift) / 2.0
}

pub fn local_chart(s: &FloatSpherePoint, r: f64) -> Result<SphereChart, SphereError> {
    if !(r > 0.0) {
        return Err(SphereError::InvalidRadius(r));
    }
    if s.is_branch() {
        return Err(SphereError::BranchPoint(format!("{:?}", s.rep())));
    }
    let lift = *s.rep();
    let safe = isometric_radius(&lift);
    if !(safe > 0.0) {
        return Err(SphereError::BranchPoint(format!("{lift:?}")));
    }
    Ok(SphereChart {
        center: s.clone(),
        radius: r.min(safe),
        lift,
    })
}

impl SphereChart {
    /// Chart coordinates of `s`, when it lies inside the chart.
    pub fn to_local(&self, s: &FloatSpherePoint) -> Option<[f64; 2]> {
        let v = local_displacement(&self.lift, s);
        (v[0].hypot(v[1]) < self.radius).then_some(v)
    }

    pub fn from_local(&self, v: [f64; 2]) -> FloatSpherePoint {
        project(&self.lift.translate(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(s: &str) -> RationalTorusPoint {
        s.parse().unwrap()
    }

    #[test]
    fn project_examples() {
        let o = project(&pt("0,0"));
        assert!(o.is_branch());
        assert_eq!(o.rep(), &pt("0,0"));
        assert_eq!(project(&pt("1/3,0")), project(&pt("2/3,0")));
        let s = project(&pt("1/5,2/5"));
        assert_eq!(s, project(&pt("4/5,3/5")));
        assert_eq!(s.rep(), &pt("1/5,2/5"));
        assert!(!s.is_branch());
        for c in branch_points() {
            assert!(project(&c).is_branch());
        }
    }

    #[test]
    fn factor_apply_examples() {
        let cat = ToralAutomorphism::cat_map();
        let o = project(&pt("0,0"));
        assert_eq!(factor_apply(&cat, &o), o);
        assert_eq!(factor_apply(&cat, &project(&pt("1/2,0"))), project(&pt("0,1/2")));
        // (1/5, 2/5) is sent to its own antipode, so it is fixed on the sphere
        let s = project(&pt("1/5,2/5"));
        assert_eq!(factor_apply(&cat, &s), s);
    }

    #[test]
    fn branch_set_is_invariant() {
        let cat = ToralAutomorphism::cat_map();
        let c = branch_points();
        assert_eq!(cat.apply(&c[0]), c[0]);
        // (1/2,0) -> (0,1/2) -> (1/2,1/2) -> (1/2,0)
        assert_eq!(cat.apply(&c[1]), c[2]);
        assert_eq!(cat.apply(&c[2]), c[3]);
        assert_eq!(cat.apply(&c[3]), c[1]);
    }

    #[test]
    fn metric_examples() {
        let a = project(&TorusPoint::new(0.0, 0.0));
        let b = project(&TorusPoint::new(0.5, 0.5));
        assert!((sphere_metric(&a, &b) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(sphere_metric(&a, &a), 0.0);
        // (0.9, 0) = -(0.1, 0) mod 1: same class, so the quotient distance is zero
        // even though the flat torus distance of the two lifts is 0.2
        let p = project(&TorusPoint::new(0.1, 0.0));
        let q = project(&TorusPoint::new(0.9, 0.0));
        assert!(sphere_metric(&p, &q) < 1e-15);
        assert!((TorusPoint::new(0.1, 0.0).torus_distance(&TorusPoint::new(0.9, 0.0)) - 0.2).abs() < 1e-15);
        // distinct classes at flat distance 0.2
        let r = project(&TorusPoint::new(0.1, 0.2));
        let t = project(&TorusPoint::new(0.9, 0.2));
        assert!((sphere_metric(&r, &t) - 0.2).abs() < 1e-12);
        // exact route agrees
        let e = sphere_distance_sq_exact(&project(&pt("0,0")), &project(&pt("1/2,1/2")));
        assert_eq!(e, Ratio::new(1, 2));
    }

    #[test]
    fn chart_examples() {
        let s = project(&TorusPoint::new(0.25, 0.125));
        let c = local_chart(&s, 10.0).unwrap();
        // nearest branch points (0,0) and (1/2,0) at sqrt(1/16 + 1/64)
        let d_c = (1.0f64 / 16.0 + 1.0 / 64.0).sqrt();
        assert!((c.radius - d_c / 2.0).abs() < 1e-15);
        assert!(c.radius < 10.0);
        let err = local_chart(&project(&TorusPoint::new(0.0, 0.0)), 0.1).unwrap_err();
        assert!(matches!(err, SphereError::BranchPoint(_)));
        assert!(matches!(local_chart(&s, 0.0), Err(SphereError::InvalidRadius(_))));
    }

    #[test]
    fn fibers_have_one_or_two_points() {
        for c in branch_points() {
            let s = project(&c);
            let [a, b] = s.lifts();
            assert_eq!(a, b);
        }
        let s = project(&pt("1/3,1/7"));
        let [a, b] = s.lifts();
        assert_ne!(a, b);
        assert_eq!(project(&a), project(&b));
    }

    #[test]
    fn grid_is_permuted_by_factor_map() {
        let cat = ToralAutomorphism::cat_map();
        for q in [1, 2, 3, 5, 7, 12] {
            let mut classes: Vec<_> = (0..q)
                .flat_map(|i| (0..q).map(move |j| project(&RationalTorusPoint::from_fractions(i, q, j, q).unwrap())))
                .collect();
            classes.sort();
            classes.dedup();
            let mut images: Vec<_> = classes.iter().map(|s| factor_apply(&cat, s)).collect();
            images.sort();
            assert_eq!(images, classes, "q = {q}");
        }
    }

    proptest! {
        #[test]
        fn semiconjugacy_on_rationals(px in -50i128..50, py in -50i128..50, q in 1i128..60) {
            let cat = ToralAutomorphism::cat_map();
            let p = RationalTorusPoint::from_fractions(px, q, py, q).unwrap();
            prop_assert_eq!(factor_apply(&cat, &project(&p)), project(&cat.apply(&p)));
        }

        #[test]
        fn semiconjugacy_on_floats(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let cat = ToralAutomorphism::cat_map();
            let p = TorusPoint::new(x, y);
            let lhs = factor_apply(&cat, &project(&p));
            let rhs = project(&cat.apply_f64(&p));
            prop_assert!(sphere_metric(&lhs, &rhs) <= 1e-12);
        }

        #[test]
        fn metric_axioms(a in (0.0f64..1.0, 0.0f64..1.0), b in (0.0f64..1.0, 0.0f64..1.0), c in (0.0f64..1.0, 0.0f64..1.0)) {
            let [sa, sb, sc] = [a, b, c].map(|(x, y)| project(&TorusPoint::new(x, y)));
            prop_assert!((sphere_metric(&sa, &sb) - sphere_metric(&sb, &sa)).abs() < 1e-15);
            prop_assert!(sphere_metric(&sa, &sc) <= sphere_metric(&sa, &sb) + sphere_metric(&sb, &sc) + 1e-12);
            prop_assert_eq!(sphere_metric(&sa, &sa), 0.0);
        }

        #[test]
        fn chart_is_isometric(x in 0.0f64..1.0, y in 0.0f64..1.0, u in (-1.0f64..1.0, -1.0f64..1.0), w in (-1.0f64..1.0, -1.0f64..1.0)) {
            let s = project(&TorusPoint::new(x, y));
            prop_assume!(!s.is_branch() && distance_to_branch_set(s.rep()) > 1e-6);
            let chart = local_chart(&s, 1.0).unwrap();
            let scale = chart.radius / 2.0;
            let v1 = [u.0 * scale, u.1 * scale];
            let v2 = [w.0 * scale, w.1 * scale];
            let p1 = chart.from_local(v1);
            let p2 = chart.from_local(v2);
            let flat = (v1[0] - v2[0]).hypot(v1[1] - v2[1]);
            prop_assert!((sphere_metric(&p1, &p2) - flat).abs() < 1e-12);
            let back = chart.to_local(&p1).unwrap();
            prop_assert!((back[0] - v1[0]).abs() < 1e-12 && (back[1] - v1[1]).abs() < 1e-12);
        }
    }
}
