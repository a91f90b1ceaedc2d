//! Torus-invariant boundary divisors on complete toric models.
//!
//! A divisor `D = sum a_rho D_rho` is stored by its coefficients. Its
//! supporting function takes the value `a_rho` at the primitive generator
//! `v_rho`, so it records the vanishing order of `D` along the one-parameter
//! subgroup through `v_rho`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::conical::PLConical;
use crate::error::{Error, Result};
use crate::lattice::{Fan, LatticeVector, RationalCone};
use crate::linalg;
use crate::rational::{self, Rat};

/// A complete fan, read as a toric compactification of the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Fan", into = "Fan")]
pub struct ToricModel {
    fan: Fan,
}

impl TryFrom<Fan> for ToricModel {
    type Error = Error;
    fn try_from(fan: Fan) -> Result<Self> {
        ToricModel::new(fan)
    }
}

impl From<ToricModel> for Fan {
    fn from(m: ToricModel) -> Fan {
        m.fan
    }
}

impl ToricModel {
    pub fn new(fan: Fan) -> Result<Self> {
        if !fan.is_complete() {
            return Err(Error::NotComplete);
        }
        Ok(Self { fan })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn dim(&self) -> usize {
        self.fan.dim()
    }

    pub fn num_rays(&self) -> usize {
        self.fan.rays().len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DivisorJson", into = "DivisorJson")]
pub struct ToricBoundaryDivisor {
    model: ToricModel,
    coeffs: Vec<Rat>,
}

#[derive(Serialize, Deserialize)]
struct DivisorJson {
    model: ToricModel,
    #[serde(with = "rational::serde_rat_vec")]
    coeffs: Vec<Rat>,
}

impl TryFrom<DivisorJson> for ToricBoundaryDivisor {
    type Error = Error;
    fn try_from(j: DivisorJson) -> Result<Self> {
        ToricBoundaryDivisor::new(j.model, j.coeffs)
    }
}

impl From<ToricBoundaryDivisor> for DivisorJson {
    fn from(d: ToricBoundaryDivisor) -> Self {
        DivisorJson {
            model: d.model,
            coeffs: d.coeffs,
        }
    }
}

impl ToricBoundaryDivisor {
    pub fn new(model: ToricModel, coeffs: Vec<Rat>) -> Result<Self> {
        if coeffs.len() != model.num_rays() {
            return Err(Error::DimensionMismatch {
                expected: model.num_rays(),
                found: coeffs.len(),
            });
        }
        Ok(Self { model, coeffs })
    }

    pub fn from_ints(fan: Fan, coeffs: &[i64]) -> Result<Self> {
        Self::new(ToricModel::new(fan)?, rational::ints(coeffs))
    }

    pub fn zero(model: ToricModel) -> Self {
        let n = model.num_rays();
        Self {
            model,
            coeffs: vec![Rat::zero(); n],
        }
    }

    /// The prime boundary divisor of ray `rho`.
    pub fn prime(model: ToricModel, rho: usize) -> Self {
        let mut d = Self::zero(model);
        d.coeffs[rho] = Rat::from_integer(1.into());
        d
    }

    /// The reduced total boundary `sum D_rho`.
    pub fn total_boundary(model: ToricModel) -> Self {
        let n = model.num_rays();
        Self {
            model,
            coeffs: vec![Rat::from_integer(1.into()); n],
        }
    }

    pub fn model(&self) -> &ToricModel {
        &self.model
    }

    pub fn fan(&self) -> &Fan {
        &self.model.fan
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::Invalid("divisors live on different models".into()));
        }
        Ok(Self {
            model: self.model.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self {
            model: self.model.clone(),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.iter().all(|a| !a.is_negative())
    }

    /// The divisor whose supporting function is `f`, on the fan of `f`.
    pub fn from_function(f: &PLConical) -> Result<Self> {
        Self::new(ToricModel::new(f.fan().clone())?, f.ray_values().to_vec())
    }
}

/// `SF_D` as a piecewise-linear function on the fan of `D`.
pub fn supporting_function(d: &ToricBoundaryDivisor) -> Result<PLConical> {
    PLConical::new(d.fan().clone(), d.coeffs.clone())
}

/// Orders of `lambda_a^* D` at `0` and at `infinity`: `(SF_D(a), SF_D(-a))`.
pub fn pullback_one_param(d: &ToricBoundaryDivisor, a: &LatticeVector) -> Result<(Rat, Rat)> {
    let f = supporting_function(d)?;
    Ok((f.eval(a)?, f.eval(&-a)?))
}

/// An arc whose coordinates along the rays `cone` of a fan vanish to the
/// given orders at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialArc {
    pub cone: Vec<usize>,
    pub orders: Vec<u64>,
}

impl MonomialArc {
    pub fn new(cone: Vec<usize>, orders: Vec<u64>) -> Result<Self> {
        if cone.len() != orders.len() {
            return Err(Error::DimensionMismatch {
                expected: cone.len(),
                found: orders.len(),
            });
        }
        Ok(Self { cone, orders })
    }

    /// The cocharacter `sum_j m_j v_j` the arc tropicalizes to.
    pub fn direction(&self, fan: &Fan) -> Result<LatticeVector> {
        let mut w = LatticeVector::zero(fan.dim());
        for (&r, &m) in self.cone.iter().zip(&self.orders) {
            if r >= fan.rays().len() {
                return Err(Error::ArcConeNotInFan(self.cone.clone()));
            }
            w = &w + &fan.ray(r).scaled(&Rat::from_integer(m.into()));
        }
        Ok(w)
    }
}

/// Vanishing order along the arc of the divisor with supporting function `f`.
pub fn arc_order(f: &PLConical, arc: &MonomialArc) -> Result<Rat> {
    let fan = f.fan();
    let w = arc.direction(fan)?;
    let rows: linalg::Matrix = arc.cone.iter().map(|&r| fan.ray(r).coords().to_vec()).collect();
    if arc.cone.len() > fan.dim() || linalg::rank(&rows, fan.dim()) != arc.cone.len() {
        return Err(Error::ArcConeNotInFan(arc.cone.clone()));
    }
    if !fan.is_complete() {
        let inside = (0..fan.cones().len()).any(|i| {
            let c: RationalCone = fan.cone(i);
            arc.cone.iter().all(|&r| c.contains(fan.ray(r)))
        });
        if !inside {
            return Err(Error::ArcConeNotInFan(arc.cone.clone()));
        }
    }
    f.eval(&w)
}

/// Pulls `d` back along the integer linear map `phi: N' -> N` (an `n x n'`
/// matrix) to the complete fan `source` in `N'`.
pub fn pullback_linear(d: &ToricBoundaryDivisor, phi: &[Vec<i64>], source: &Fan) -> Result<ToricBoundaryDivisor> {
    let target = d.fan();
    if phi.len() != target.dim() || phi.iter().any(|row| row.len() != source.dim()) {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: phi.len(),
        });
    }
    let image = |v: &LatticeVector| -> LatticeVector {
        LatticeVector::new(
            phi.iter()
                .map(|row| linalg::dot(&rational::ints(row), v.coords()))
                .collect(),
        )
    };
    let images: Vec<LatticeVector> = source.rays().iter().map(image).collect();
    let target_cones: Vec<RationalCone> = (0..target.cones().len()).map(|i| target.cone(i)).collect();
    for (i, cone) in source.cones().iter().enumerate() {
        let fits = target_cones
            .iter()
            .any(|c| cone.iter().all(|&r| c.contains(&images[r])));
        if !fits {
            return Err(Error::ConeIncompatible { cone: i });
        }
    }
    let f = supporting_function(d)?;
    let coeffs = images.iter().map(|w| f.eval(w)).collect::<Result<Vec<_>>>()?;
    ToricBoundaryDivisor::new(ToricModel::new(source.clone())?, coeffs)
}

/// Whether `f` vanishes along every monomial arc, i.e. on every ray of its fan.
pub fn is_zero_by_arcs(f: &PLConical) -> bool {
    f.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ints};
    use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig, Strategy};

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector::from_ints(c)
    }

    fn p1_zero() -> ToricBoundaryDivisor {
        ToricBoundaryDivisor::from_ints(Fan::projective_line(), &[1, 0]).unwrap()
    }

    #[test]
    fn supporting_function_examples() {
        assert_eq!(supporting_function(&p1_zero()).unwrap().ray_values(), &ints(&[1, 0])[..]);
        let z = ToricBoundaryDivisor::zero(ToricModel::new(Fan::projective_plane()).unwrap());
        assert!(supporting_function(&z).unwrap().is_zero());
        let h = ToricBoundaryDivisor::prime(ToricModel::new(Fan::projective_plane()).unwrap(), 0);
        assert_eq!(supporting_function(&h).unwrap().ray_values(), &ints(&[1, 0, 0])[..]);
    }

    #[test]
    fn model_must_be_complete() {
        assert!(matches!(ToricModel::new(Fan::affine_space(2)), Err(Error::NotComplete)));
    }

    #[test]
    fn one_parameter_pullbacks() {
        assert_eq!(pullback_one_param(&p1_zero(), &v(&[2])).unwrap(), (int(2), int(0)));
        assert_eq!(pullback_one_param(&p1_zero(), &v(&[0])).unwrap(), (int(0), int(0)));
        let both = ToricBoundaryDivisor::from_ints(Fan::projective_line(), &[1, 1]).unwrap();
        assert_eq!(pullback_one_param(&both, &v(&[1])).unwrap(), (int(1), int(1)));
    }

    #[test]
    fn arc_order_in_the_affine_chart_of_the_plane() {
        // Arc (s, u s^2) in the chart of the cone {e1, e2}; local equation x1^2 x2^3.
        let d = ToricBoundaryDivisor::from_ints(Fan::projective_plane(), &[2, 3, 0]).unwrap();
        let f = supporting_function(&d).unwrap();
        let arc = MonomialArc::new(vec![0, 1], vec![1, 2]).unwrap();
        assert_eq!(arc_order(&f, &arc).unwrap(), int(8));
        let zero = PLConical::zero(Fan::projective_plane()).unwrap();
        assert_eq!(arc_order(&zero, &arc).unwrap(), int(0));
        let dependent = MonomialArc::new(vec![0, 1, 2], vec![1, 1, 1]).unwrap();
        assert!(matches!(arc_order(&f, &dependent), Err(Error::ArcConeNotInFan(_))));
    }

    #[test]
    fn arc_order_of_a_euclidean_interpolant() {
        let (f, report) =
            crate::conical::approximate(&crate::conical::ConicalOracle::euclidean(), &Fan::product_of_lines(2), 6)
                .unwrap();
        // The reference rays e1, e2 keep indices 0 and 1 under subdivision.
        let arc = MonomialArc::new(vec![0, 1], vec![1, 1]).unwrap();
        let value = rational::to_f64(&arc_order(&f, &arc).unwrap());
        assert!((value - 2f64.sqrt()).abs() <= 2.0 * report.deviation_estimate + 1e-9);
    }

    #[test]
    fn pullback_along_linear_maps() {
        let d = p1_zero();
        let same = pullback_linear(&d, &[vec![1]], &Fan::projective_line()).unwrap();
        assert_eq!(same, d);
        let doubled = pullback_linear(&d, &[vec![2]], &Fan::projective_line()).unwrap();
        assert_eq!(doubled.coeffs(), &ints(&[2, 0])[..]);
        let h = ToricBoundaryDivisor::from_ints(Fan::projective_plane(), &[1, 2, -1]).unwrap();
        let fine = Fan::projective_plane().barycentric_subdivision().unwrap();
        let pulled = pullback_linear(&h, &[vec![1, 0], vec![0, 1]], &fine).unwrap();
        let (a, b) = (supporting_function(&h).unwrap(), supporting_function(&pulled).unwrap());
        for p in [v(&[3, 1]), v(&[-2, 5]), v(&[-1, -1])] {
            assert_eq!(a.eval(&p).unwrap(), b.eval(&p).unwrap());
        }
        // A shear sends the cone {e1, -e1-e2} of P2 across two cones.
        assert!(matches!(
            pullback_linear(&h, &[vec![1, 0], vec![2, 1]], &Fan::projective_plane()),
            Err(Error::ConeIncompatible { .. })
        ));
    }

    #[test]
    fn zero_by_arcs() {
        assert!(is_zero_by_arcs(&PLConical::zero(Fan::projective_plane()).unwrap()));
        assert!(!is_zero_by_arcs(&supporting_function(&p1_zero()).unwrap()));
        let fine = Fan::projective_plane().barycentric_subdivision().unwrap();
        assert!(is_zero_by_arcs(&PLConical::zero(fine).unwrap()));
    }

    #[test]
    fn json_round_trip() {
        let d = ToricBoundaryDivisor::from_ints(Fan::projective_plane(), &[1, -2, 3]).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        let back: ToricBoundaryDivisor = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    fn coeffs(n: usize) -> impl Strategy<Value = Vec<i64>> {
        proptest::collection::vec(-5i64..=5, n)
    }

    fn fan_map() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1i64..=3, 1i64..=3, proptest::bool::ANY, proptest::bool::ANY, proptest::bool::ANY).prop_map(
            |(p, q, sp, sq, swap)| {
                let (p, q) = (if sp { -p } else { p }, if sq { -q } else { q });
                if swap {
                    vec![vec![0, p], vec![q, 0]]
                } else {
                    vec![vec![p, 0], vec![0, q]]
                }
            },
        )
    }

    fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
        (0..a.len())
            .map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn supporting_function_is_additive(a in coeffs(4), b in coeffs(4), x in -9i64..=9, y in -9i64..=9) {
            let d = ToricBoundaryDivisor::from_ints(Fan::product_of_lines(2), &a).unwrap();
            let e = ToricBoundaryDivisor::from_ints(Fan::product_of_lines(2), &b).unwrap();
            let lhs = supporting_function(&d.add(&e).unwrap()).unwrap();
            let rhs = supporting_function(&d).unwrap().add(&supporting_function(&e).unwrap()).unwrap();
            prop_assert_eq!(lhs.eval(&v(&[x, y])).unwrap(), rhs.eval(&v(&[x, y])).unwrap());
            prop_assert_eq!(supporting_function(&d).unwrap().is_effective(), d.is_effective());
        }

        #[test]
        fn pullback_is_contravariant(a in coeffs(4), f in fan_map(), g in fan_map()) {
            // Signed diagonal scalings and the coordinate swap preserve the fan of P1 x P1.
            let fan = Fan::product_of_lines(2);
            let d = ToricBoundaryDivisor::from_ints(fan.clone(), &a).unwrap();
            let composite = pullback_linear(&d, &mat_mul(&f, &g), &fan).unwrap();
            let stepwise = pullback_linear(&pullback_linear(&d, &f, &fan).unwrap(), &g, &fan).unwrap();
            prop_assert_eq!(composite, stepwise);
        }
    }
}
