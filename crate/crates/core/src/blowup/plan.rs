use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::BlowupError;
use crate::sphere::{factor_apply, project, ExactSpherePoint};
use crate::toral::{periodic_points, ToralAutomorphism};

/// A periodic orbit of the sphere factor, starting at its smallest point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedOrbit {
    /// Position in the plan's enumeration.
    pub id: usize,
    pub period: usize,
    pub points: Vec<ExactSpherePoint>,
    /// Whether the orbit is blown up (even positions) or spared (odd).
    pub selected: bool,
}

impl PlannedOrbit {
    pub fn base(&self) -> &ExactSpherePoint {
        &self.points[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPlan {
    pub aut: ToralAutomorphism,
    pub max_period: i64,
    pub orbits: Vec<PlannedOrbit>,
}

impl OrbitPlan {
    pub fn selected(&self) -> impl Iterator<Item = &PlannedOrbit> {
        self.orbits.iter().filter(|o| o.selected)
    }

    pub fn spared(&self) -> impl Iterator<Item = &PlannedOrbit> {
        self.orbits.iter().filter(|o| !o.selected)
    }
}

/// The orbit of `s` under the factor map, in order, until it closes up.
pub fn sphere_orbit(aut: &ToralAutomorphism, s: &ExactSpherePoint) -> Vec<ExactSpherePoint> {
    let mut out = vec![s.clone()];
    let mut cur = factor_apply(aut, s);
    while cur != *s {
        out.push(cur.clone());
        cur = factor_apply(aut, &cur);
    }
    out
}

/// Sphere orbits of all torus points of period at most `max_period`.
///
/// Orbits through the branch set are dropped; the rest are sorted by
/// `(period, base point)` and alternately selected and spared. A sphere orbit
/// of period `k` can come from torus period `k` or `2k`, so orbits whose lifts
/// need period above `max_period` are not listed.
pub fn plan_orbits(aut: &ToralAutomorphism, max_period: i64) -> Result<OrbitPlan, BlowupError> {
    if max_period < 1 {
        return Err(BlowupError::InvalidMaxPeriod(max_period));
    }
    let mut pending = BTreeSet::new();
    for n in 1..=max_period {
        for p in periodic_points(aut, n)? {
            pending.insert(project(&p));
        }
    }
    let mut orbits = Vec::new();
    while let Some(first) = pending.pop_first() {
        let o = sphere_orbit(aut, &first);
        for s in &o[1..] {
            pending.remove(s);
        }
        // the branch set is invariant, so an orbit meets it iff its base lies in it
        if !first.is_branch() {
            orbits.push(o);
        }
    }
    // popping in order makes each base the orbit minimum
    orbits.sort_by(|a, b| (a.len(), &a[0]).cmp(&(b.len(), &b[0])));
    let orbits = orbits
        .into_iter()
        .enumerate()
        .map(|(id, points)| PlannedOrbit {
            id,
            period: points.len(),
            points,
            selected: id % 2 == 0,
        })
        .collect();
    Ok(OrbitPlan {
        aut: *aut,
        max_period,
        orbits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toral::RationalTorusPoint;

    fn sp(s: &str) -> ExactSpherePoint {
        project(&s.parse::<RationalTorusPoint>().unwrap())
    }

    #[test]
    fn period_one_has_only_the_branch_point() {
        let plan = plan_orbits(&ToralAutomorphism::cat_map(), 1).unwrap();
        assert!(plan.orbits.is_empty());
        assert_eq!(plan.selected().count(), 0);
    }

    #[test]
    fn period_two_gives_two_fixed_sphere_points() {
        // torus points of period <= 2: (0,0) and the four fifths points, which
        // pair up under -1 into two fixed points of the factor map
        let plan = plan_orbits(&ToralAutomorphism::cat_map(), 2).unwrap();
        assert_eq!(plan.orbits.len(), 2);
        assert_eq!(plan.orbits[0].points, vec![sp("1/5,2/5")]);
        assert_eq!(plan.orbits[1].points, vec![sp("2/5,4/5")]);
        assert!(plan.orbits[0].selected && !plan.orbits[1].selected);
    }

    #[test]
    fn orbits_are_closed_sorted_and_alternate() {
        let aut = ToralAutomorphism::cat_map();
        let plan = plan_orbits(&aut, 6).unwrap();
        let mut seen = BTreeSet::new();
        for (i, o) in plan.orbits.iter().enumerate() {
            assert_eq!(o.id, i);
            assert_eq!(o.selected, i % 2 == 0);
            assert_eq!(o.period, o.points.len());
            assert!(o.points.iter().all(|s| !s.is_branch()));
            for (j, s) in o.points.iter().enumerate() {
                assert_eq!(factor_apply(&aut, s), o.points[(j + 1) % o.period]);
                assert!(s >= o.base());
                assert!(seen.insert(s.clone()), "point listed twice");
            }
        }
        for w in plan.orbits.windows(2) {
            assert!((w[0].period, w[0].base()) < (w[1].period, w[1].base()));
        }
        // every non-branch projection of a torus point of period <= 6 is listed
        for n in 1..=6 {
            for p in periodic_points(&aut, n).unwrap() {
                let s = project(&p);
                assert!(s.is_branch() || seen.contains(&s));
            }
        }
    }
}
