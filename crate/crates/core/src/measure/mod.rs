//! Finite-support measures and the statistics built on them.

mod birkhoff;
mod character;
mod lp;
mod support;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use birkhoff::{
    birkhoff_average, birkhoff_average_exact, birkhoff_series, periodic_orbit_average,
    NeumaierSum,
};
pub use character::{character_correlation, transpose_power_apply};
pub use lp::{lp_distance, lp_distance_matrix, lp_oracle_matrix};
pub use support::{nu_support_evidence, SupportReport};

use crate::space::{MetricSpace, PointKey, SpaceKind};
use crate::Error;

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;

/// Probability measure with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure<P> {
    kind: SpaceKind,
    atoms: Vec<(P, f64)>,
}

impl<P: Clone> DiscreteMeasure<P> {
    /// Merge atoms with the same canonical point and check the weights.
    pub fn new<S>(space: &S, atoms: Vec<(P, f64)>) -> Result<Self, Error>
    where
        S: MetricSpace<Point = P>,
    {
        let mut merged: BTreeMap<PointKey, (P, f64)> = BTreeMap::new();
        for (p, w) in atoms {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
            }
            merged
                .entry(space.key(&p))
                .and_modify(|e| e.1 += w)
                .or_insert((p, w));
        }
        let atoms: Vec<_> = merged.into_values().collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} is not 1")));
        }
        Ok(Self {
            kind: space.kind(),
            atoms,
        })
    }

    pub fn dirac<S: MetricSpace<Point = P>>(space: &S, p: P) -> Self {
        Self {
            kind: space.kind(),
            atoms: vec![(p, 1.0)],
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn atoms(&self) -> &[(P, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass of the set `{p : pred(p)}`.
    pub fn mass_where(&self, mut pred: impl FnMut(&P) -> bool) -> f64 {
        let mut s = NeumaierSum::default();
        for (p, w) in &self.atoms {
            if pred(p) {
                s.add(*w);
            }
        }
        s.total()
    }
}

/// Uniform measure on the points of an orbit segment; repeated points merge.
pub fn empirical_measure<S: MetricSpace>(
    space: &S,
    orbit: &[S::Point],
) -> Result<DiscreteMeasure<S::Point>, Error> {
    if orbit.is_empty() {
        return Err(Error::EmptyOrbit);
    }
    let mut counts: BTreeMap<PointKey, (S::Point, usize)> = BTreeMap::new();
    for p in orbit {
        counts
            .entry(space.key(p))
            .and_modify(|e| e.1 += 1)
            .or_insert((p.clone(), 1));
    }
    let n = orbit.len() as f64;
    Ok(DiscreteMeasure {
        kind: space.kind(),
        atoms: counts
            .into_values()
            .map(|(p, c)| (p, c as f64 / n))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::TorusSpace;
    use crate::toral::TorusPoint;

    #[test]
    fn empirical_measure_examples() {
        let s = TorusSpace;
        let p = TorusPoint::new(0.25, 0.5);
        let m = empirical_measure(&s, &[p]).unwrap();
        assert_eq!(m.atoms(), &[(p, 1.0)]);

        let orbit: Vec<_> = ["1/2,0", "0,1/2", "1/2,1/2"]
            .iter()
            .map(|t| t.parse::<crate::toral::RationalTorusPoint>().unwrap().to_f64())
            .collect();
        let m = empirical_measure(&s, &orbit).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.atoms().iter().all(|a| a.1 == 1.0 / 3.0));

        let q = TorusPoint::new(0.1, 0.2);
        let m = empirical_measure(&s, &[p, q, p, q, p]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.mass_where(|x| *x == p), 3.0 / 5.0);

        assert!(matches!(
            empirical_measure::<TorusSpace>(&s, &[]),
            Err(Error::EmptyOrbit)
        ));
    }

    #[test]
    fn weights_are_checked_and_merged() {
        let s = TorusSpace;
        let p = TorusPoint::new(0.0, 0.0);
        let q = TorusPoint::new(0.5, 0.0);
        let m = DiscreteMeasure::new(&s, vec![(p, 0.25), (q, 0.5), (p, 0.25)]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.mass_where(|x| *x == p), 0.5);
        assert!(DiscreteMeasure::new(&s, vec![(p, 0.5)]).is_err());
        assert!(DiscreteMeasure::new(&s, vec![(p, 1.5), (q, -0.5)]).is_err());
        // -0.0 and 0.0 are one point
        let z = TorusPoint { x: -0.0, y: 0.0 };
        let m = DiscreteMeasure::new(&s, vec![(p, 0.5), (z, 0.5)]).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn measures_serialize_as_point_weight_pairs() {
        let s = TorusSpace;
        let m = DiscreteMeasure::dirac(&s, TorusPoint::new(0.25, 0.5));
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["atoms"][0][1], 1.0);
        assert_eq!(v["atoms"][0][0]["x"], 0.25);
        let back: DiscreteMeasure<TorusPoint> = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }
}
