//! Exact rational lattice and fan geometry in `N_R`.
//!
//! Vectors, cones and fans carry exact rationals only. Rays are normalized to
//! primitive integer vectors on construction, so a ray has one canonical
//! representative and piecewise-linear functions can be stored by their values
//! on rays.

mod cone;
mod fan;

use std::ops::{Add, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub use cone::{cone_contains, Facet, HRep, RationalCone};
pub use fan::{common_refinement, is_complete, simplicialize, Fan, FanValidation};
pub(crate) use fan::{star_subdivide, FanBuilder};

use crate::error::{Error, Result};
use crate::rational::{self, Rat};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(#[serde(with = "rational::serde_rat_vec")] Vec<Rat>);

impl LatticeVector {
    pub fn new(coords: Vec<Rat>) -> Self {
        Self(coords)
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Self(rational::ints(coords))
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![Rat::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rat] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<Rat> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        rational::is_integer_vector(&self.0)
    }

    pub fn l1_norm(&self) -> Rat {
        self.0.iter().fold(Rat::zero(), |acc, c| acc + c.abs())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rational::to_f64).collect()
    }

    pub fn scaled(&self, factor: &Rat) -> Self {
        Self(self.0.iter().map(|c| c * factor).collect())
    }

    /// The primitive integer vector on the same ray; `None` for the origin.
    pub fn primitive(&self) -> Option<Self> {
        rational::primitive_integer(&self.0)
            .map(|v| Self(v.into_iter().map(Rat::from_integer).collect()))
    }

    pub fn is_primitive(&self) -> bool {
        self.is_integral() && self.primitive().as_ref() == Some(self)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl Add for &LatticeVector {
    type Output = LatticeVector;
    fn add(self, rhs: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticeVector {
    type Output = LatticeVector;
    fn sub(self, rhs: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|a| -a).collect())
    }
}

/// The pairing `M x N -> Q` under the fixed dual bases.
pub fn pair(m: &LatticeVector, a: &LatticeVector) -> Result<Rat> {
    a.check_dim(m.dim())?;
    Ok(crate::linalg::dot(m.coords(), a.coords()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector::from_ints(c)
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(&v(&[1, 0]), &v(&[0, 1])).unwrap(), int(0));
        assert_eq!(pair(&v(&[2, 3]), &v(&[1, 1])).unwrap(), int(5));
        assert_eq!(pair(&v(&[1, -1]), &v(&[1, 1])).unwrap(), int(0));
        assert!(matches!(
            pair(&v(&[1, 0]), &v(&[1, 0, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn primitive_normalization() {
        let w = LatticeVector::new(vec![rat(2, 3), rat(-4, 3)]);
        assert_eq!(w.primitive().unwrap(), v(&[1, -2]));
        assert!(v(&[3, 5]).is_primitive());
        assert!(!v(&[2, 4]).is_primitive());
        assert!(LatticeVector::zero(3).primitive().is_none());
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-20i64..20, 1i64..7).prop_map(|(n, d)| rat(n, d))
    }

    fn rat_vec(n: usize) -> impl Strategy<Value = LatticeVector> {
        proptest::collection::vec(small_rat(), n).prop_map(LatticeVector::new)
    }

    proptest! {
        #[test]
        fn pairing_is_bilinear(m1 in rat_vec(3), m2 in rat_vec(3), a in rat_vec(3), c in small_rat()) {
            let lhs = pair(&(&m1 + &m2.scaled(&c)), &a).unwrap();
            let rhs = pair(&m1, &a).unwrap() + &c * pair(&m2, &a).unwrap();
            prop_assert_eq!(lhs, rhs);
            let lhs = pair(&a, &(&m1 + &m2.scaled(&c))).unwrap();
            let rhs = pair(&a, &m1).unwrap() + &c * pair(&a, &m2).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
