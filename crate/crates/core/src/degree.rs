//! Edge-perspective degree distributions.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default largest variable degree.
pub const DEFAULT_MAX_VAR_DEGREE: usize = 30;

/// Default largest check degree.
pub const DEFAULT_MAX_CHECK_DEGREE: usize = 12;

/// Edge-perspective degree distribution: atom `(i, f)` means a fraction `f`
/// of the edges attach to degree-`i` nodes.
///
/// Atoms are kept sorted by degree. Zero-weight atoms are dropped on
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, f64)>", into = "Vec<(usize, f64)>")]
pub struct DegreeDistribution {
    atoms: Vec<(usize, f64)>,
}

impl DegreeDistribution {
    /// Validating constructor. Fractions must be non-negative and sum to one
    /// within [`MASS_TOLERANCE`]; degrees must be distinct and at least 2.
    pub fn new(atoms: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut atoms: Vec<(usize, f64)> = atoms.into_iter().collect();
        atoms.sort_by_key(|a| a.0);
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!("degree {} repeated", w[0].0)));
            }
        }
        let mut total = 0.0;
        for &(d, f) in &atoms {
            if d < 2 {
                return Err(Error::DegreeOutOfRange { degree: d, max: usize::MAX });
            }
            if !(f.is_finite() && f >= 0.0) {
                return Err(Error::InvalidParameter(format!("fraction {f} for degree {d}")));
            }
            total += f;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "fractions sum to {total}, expected 1"
            )));
        }
        atoms.retain(|a| a.1 > 0.0);
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("empty degree distribution".into()));
        }
        Ok(Self { atoms })
    }

    /// Builds a distribution from approximate non-negative weights, as
    /// returned by an LP: entries below `floor` are dropped and the rest
    /// renormalised.
    pub fn from_weights(weights: impl IntoIterator<Item = (usize, f64)>, floor: f64) -> Result<Self> {
        let kept: Vec<(usize, f64)> = weights
            .into_iter()
            .filter(|&(_, w)| w > floor)
            .collect();
        let total: f64 = kept.iter().map(|a| a.1).sum();
        if kept.is_empty() || !(total > 0.0) {
            return Err(Error::InvalidParameter("no positive weights".into()));
        }
        Self::new(kept.into_iter().map(|(d, w)| (d, w / total)))
    }

    /// All edges on degree-`d` nodes.
    pub fn regular(degree: usize) -> Result<Self> {
        Self::new([(degree, 1.0)])
    }

    /// Check-concentrated distribution on two adjacent degrees whose
    /// node-perspective average degree is `average`.
    pub fn concentrated(average: f64) -> Result<Self> {
        if !(average >= 2.0 && average.is_finite()) {
            return Err(Error::InvalidParameter(format!("average degree {average} below 2")));
        }
        let low = average.floor() as usize;
        if (average - low as f64).abs() < 1e-12 {
            return Self::regular(low);
        }
        let (d, d1) = (low as f64, low as f64 + 1.0);
        // w/d + (1 - w)/(d + 1) = 1/average
        let w = ((1.0 / average - 1.0 / d1) * d * d1).clamp(0.0, 1.0);
        Self::new([(low, w), (low + 1, 1.0 - w)])
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    /// Edge fraction on degree `d` (zero when absent).
    pub fn fraction(&self, degree: usize) -> f64 {
        self.atoms
            .binary_search_by_key(&degree, |a| a.0)
            .map(|i| self.atoms[i].1)
            .unwrap_or(0.0)
    }

    pub fn min_degree(&self) -> usize {
        self.atoms[0].0
    }

    pub fn max_degree(&self) -> usize {
        self.atoms[self.atoms.len() - 1].0
    }

    /// `sum_i f_i / i`: nodes per edge.
    pub fn inverse_mean(&self) -> f64 {
        self.atoms.iter().map(|&(d, f)| f / d as f64).sum()
    }

    /// Node-perspective average degree.
    pub fn average_degree(&self) -> f64 {
        1.0 / self.inverse_mean()
    }

    /// Node-perspective fractions `(f_i / i) / sum_j (f_j / j)`.
    pub fn node_fractions(&self) -> Vec<(usize, f64)> {
        let s = self.inverse_mean();
        self.atoms.iter().map(|&(d, f)| (d, f / d as f64 / s)).collect()
    }

    /// Errors unless every degree is at most `max`.
    pub fn ensure_max_degree(&self, max: usize) -> Result<()> {
        match self.atoms.iter().find(|a| a.0 > max) {
            Some(&(d, _)) => Err(Error::DegreeOutOfRange { degree: d, max }),
            None => Ok(()),
        }
    }

    /// Atomwise `mu * a + (1 - mu) * b`.
    pub fn mix(a: &Self, b: &Self, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParameter(format!("mixing weight {mu} outside [0, 1]")));
        }
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(a.atoms.len() + b.atoms.len());
        let (mut i, mut j) = (0, 0);
        while i < a.atoms.len() || j < b.atoms.len() {
            let da = a.atoms.get(i).map_or(usize::MAX, |x| x.0);
            let db = b.atoms.get(j).map_or(usize::MAX, |x| x.0);
            if da == db {
                out.push((da, mu * a.atoms[i].1 + (1.0 - mu) * b.atoms[j].1));
                i += 1;
                j += 1;
            } else if da < db {
                out.push((da, mu * a.atoms[i].1));
                i += 1;
            } else {
                out.push((db, (1.0 - mu) * b.atoms[j].1));
                j += 1;
            }
        }
        let total: f64 = out.iter().map(|x| x.1).sum();
        out.iter_mut().for_each(|x| x.1 /= total);
        Self::new(out)
    }
}

impl TryFrom<Vec<(usize, f64)>> for DegreeDistribution {
    type Error = Error;

    fn try_from(atoms: Vec<(usize, f64)>) -> Result<Self> {
        // Serialized fractions may lose the last ulp; renormalise gently.
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("fractions sum to {total}")));
        }
        Self::new(atoms.into_iter().map(|(d, f)| (d, f / total)))
    }
}

impl From<DegreeDistribution> for Vec<(usize, f64)> {
    fn from(d: DegreeDistribution) -> Self {
        d.atoms
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (d, w)) in self.atoms.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}: {w:.6}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validation() {
        assert!(DegreeDistribution::new([(1, 1.0)]).is_err());
        assert!(DegreeDistribution::new([(2, 0.5), (2, 0.5)]).is_err());
        assert!(DegreeDistribution::new([(2, 0.5), (3, 0.4)]).is_err());
        assert!(DegreeDistribution::new([(2, -0.1), (3, 1.1)]).is_err());
        assert!(DegreeDistribution::new([(3, 0.0), (4, 1.0)]).unwrap().atoms() == [(4, 1.0)]);
    }

    #[test]
    fn node_perspective() {
        let d = DegreeDistribution::new([(2, 0.5), (4, 0.5)]).unwrap();
        assert_abs_diff_eq!(d.inverse_mean(), 0.375, epsilon = 1e-15);
        let nf = d.node_fractions();
        assert_abs_diff_eq!(nf[0].1 / nf[1].1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn concentrated_hits_average() {
        for avg in [2.5, 5.5, 6.0, 7.25, 11.9] {
            let d = DegreeDistribution::concentrated(avg).unwrap();
            assert_abs_diff_eq!(d.average_degree(), avg, epsilon = 1e-12);
            assert!(d.max_degree() - d.min_degree() <= 1);
        }
    }

    #[test]
    fn mix_merges_atoms() {
        let a = DegreeDistribution::regular(2).unwrap();
        let b = DegreeDistribution::regular(6).unwrap();
        let m = DegreeDistribution::mix(&a, &b, 0.25).unwrap();
        assert_eq!(m.atoms(), &[(2, 0.25), (6, 0.75)]);
        assert_eq!(DegreeDistribution::mix(&a, &b, 1.0).unwrap(), a);
        let three = DegreeDistribution::regular(3).unwrap();
        assert_eq!(DegreeDistribution::mix(&three, &three, 0.5).unwrap(), three);
    }

    #[test]
    fn json_round_trip() {
        let d = DegreeDistribution::new([(2, 0.3), (3, 0.2), (8, 0.5)]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "[[2,0.3],[3,0.2],[8,0.5]]");
        assert_eq!(serde_json::from_str::<DegreeDistribution>(&s).unwrap(), d);
    }
}
