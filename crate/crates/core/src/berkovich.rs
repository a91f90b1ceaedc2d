//! Monomial points of the analytified torus, handled additively.
//!
//! A point `(tau, a)` evaluates a Laurent polynomial `sum c_m chi^m` to
//! `min_m (tau * v(c_m) + <m, a>)`, the negative log of the monomial seminorm.
//! Everything stays in the value group, so no exponentials are ever formed.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::divisor::{supporting_function, ToricBoundaryDivisor};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeVector;
use crate::linalg;
use crate::rational::{self, Rat};

/// How coefficients are valued.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoefficientSpec {
    /// Every nonzero coefficient has valuation 0.
    #[default]
    #[serde(rename = "trivial")]
    Trivial,
    /// Coefficients are rational functions of `t`, valued by their order at `t = 0`.
    #[serde(rename = "t-adic")]
    TAdic,
}

/// A rational function `num(t) / den(t)` with rational coefficients, listed
/// from the constant term up.
#[derive(Clone)]
pub struct TFunction {
    num: Vec<Rat>,
    den: Vec<Rat>,
}

fn trim(mut p: Vec<Rat>) -> Vec<Rat> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    trim(out)
}

fn order(p: &[Rat]) -> Option<usize> {
    p.iter().position(|c| !c.is_zero())
}

impl TFunction {
    pub fn new(num: Vec<Rat>, den: Vec<Rat>) -> Result<Self> {
        let (num, den) = (trim(num), trim(den));
        if den.is_empty() {
            return Err(Error::ZeroDenominator);
        }
        // Cancel the common power of t so the stored form stays small.
        let shift = order(&num).unwrap_or(0).min(order(&den).unwrap_or(0));
        Ok(Self {
            num: num.into_iter().skip(shift).collect(),
            den: den.into_iter().skip(shift).collect(),
        })
    }

    pub fn constant(c: Rat) -> Self {
        Self {
            num: trim(vec![c]),
            den: vec![Rat::one()],
        }
    }

    /// `c * t^k`.
    pub fn monomial(c: Rat, k: usize) -> Self {
        let mut num = vec![Rat::zero(); k];
        num.push(c);
        Self {
            num: trim(num),
            den: vec![Rat::one()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(poly_mul(&self.num, &other.num), poly_mul(&self.den, &other.den)).expect("nonzero denominators")
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = poly_add(&poly_mul(&self.num, &other.den), &poly_mul(&other.num, &self.den));
        Self::new(num, poly_mul(&self.den, &other.den)).expect("nonzero denominators")
    }

    /// Valuation, `None` for zero.
    pub fn valuation(&self, spec: CoefficientSpec) -> Option<Rat> {
        let n = order(&self.num)?;
        Some(match spec {
            CoefficientSpec::Trivial => Rat::zero(),
            CoefficientSpec::TAdic => {
                let d = order(&self.den).expect("nonzero denominator");
                Rat::from_integer((n as i64 - d as i64).into())
            }
        })
    }

    fn is_constant(&self) -> bool {
        self.num.len() <= 1 && self.den.len() == 1
    }
}

impl PartialEq for TFunction {
    fn eq(&self, other: &Self) -> bool {
        poly_mul(&self.num, &other.den) == poly_mul(&other.num, &self.den)
    }
}

impl Eq for TFunction {}

impl fmt::Debug for TFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |p: &[Rat]| p.iter().map(rational::format_rat).collect::<Vec<_>>().join(",");
        write!(f, "[{}]/[{}]", show(&self.num), show(&self.den))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TFunctionJson {
    Constant(String),
    Fraction {
        num: Vec<String>,
        #[serde(default)]
        den: Option<Vec<String>>,
    },
}

impl Serialize for TFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let fmt = |p: &[Rat]| p.iter().map(rational::format_rat).collect::<Vec<_>>();
        if self.is_constant() {
            let c = self.num.first().cloned().unwrap_or_else(Rat::zero) / &self.den[0];
            return TFunctionJson::Constant(rational::format_rat(&c)).serialize(s);
        }
        TFunctionJson::Fraction {
            num: fmt(&self.num),
            den: Some(fmt(&self.den)),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let parse = |p: &[String]| -> std::result::Result<Vec<Rat>, D::Error> {
            p.iter().map(|t| rational::parse_rat(t).map_err(D::Error::custom)).collect()
        };
        match TFunctionJson::deserialize(d)? {
            TFunctionJson::Constant(c) => Ok(TFunction::constant(rational::parse_rat(&c).map_err(D::Error::custom)?)),
            TFunctionJson::Fraction { num, den } => {
                let den = match den {
                    Some(den) => parse(&den)?,
                    None => vec![Rat::one()],
                };
                TFunction::new(parse(&num)?, den).map_err(D::Error::custom)
            }
        }
    }
}

/// A Laurent polynomial `sum c_m chi^m` with no zero coefficients stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentPoly {
    dim: usize,
    terms: BTreeMap<Vec<i64>, TFunction>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    m: Vec<i64>,
    coeff: TFunction,
}

#[derive(Serialize, Deserialize)]
struct LaurentJson {
    terms: Vec<TermJson>,
}

impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LaurentJson {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermJson {
                    m: m.clone(),
                    coeff: c.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = LaurentJson::deserialize(d)?;
        let dim = j.terms.first().map_or(0, |t| t.m.len());
        LaurentPoly::new(dim, j.terms.into_iter().map(|t| (t.m, t.coeff))).map_err(D::Error::custom)
    }
}

impl LaurentPoly {
    /// Collects terms, summing repeated exponents and dropping zeros.
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (Vec<i64>, TFunction)>) -> Result<Self> {
        let mut map: BTreeMap<Vec<i64>, TFunction> = BTreeMap::new();
        for (m, c) in terms {
            if m.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.len(),
                });
            }
            let next = match map.remove(&m) {
                Some(old) => old.add(&c),
                None => c,
            };
            if !next.is_zero() {
                map.insert(m, next);
            }
        }
        Ok(Self { dim, terms: map })
    }

    /// Rational constant coefficients.
    pub fn from_rational_terms(dim: usize, terms: &[(Vec<i64>, Rat)]) -> Result<Self> {
        Self::new(dim, terms.iter().map(|(m, c)| (m.clone(), TFunction::constant(c.clone()))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &TFunction)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.dim,
            self.terms.iter().chain(&other.terms).map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut products = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m: Vec<i64> = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                products.push((m, c1.mul(c2)));
            }
        }
        Self::new(self.dim, products)
    }
}

/// The monomial point `(tau, a)`: hybrid exponent `tau` in `[0, 1]` and
/// cocharacter `a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PointJson", into = "PointJson")]
pub struct MonomialPoint {
    tau: Rat,
    a: LatticeVector,
    spec: CoefficientSpec,
}

#[derive(Serialize, Deserialize)]
struct PointJson {
    #[serde(with = "rational::serde_rat")]
    tau: Rat,
    a: LatticeVector,
    #[serde(default)]
    spec: CoefficientSpec,
}

impl TryFrom<PointJson> for MonomialPoint {
    type Error = Error;
    fn try_from(j: PointJson) -> Result<Self> {
        MonomialPoint::new(j.tau, j.a, j.spec)
    }
}

impl From<MonomialPoint> for PointJson {
    fn from(p: MonomialPoint) -> Self {
        PointJson {
            tau: p.tau,
            a: p.a,
            spec: p.spec,
        }
    }
}

impl MonomialPoint {
    pub fn new(tau: Rat, a: LatticeVector, spec: CoefficientSpec) -> Result<Self> {
        if tau.is_negative() || tau > Rat::one() {
            return Err(Error::Invalid(format!(
                "tau = {} lies outside [0, 1]",
                rational::format_rat(&tau)
            )));
        }
        Ok(Self { tau, a, spec })
    }

    pub fn tau(&self) -> &Rat {
        &self.tau
    }

    pub fn a(&self) -> &LatticeVector {
        &self.a
    }

    pub fn spec(&self) -> CoefficientSpec {
        self.spec
    }

    /// The point `s * (tau, a)`, the seminorm raised to the power `s`.
    /// `s * tau` must stay in `[0, 1]`.
    pub fn scaled(&self, s: &Rat) -> Result<Self> {
        Self::new(&self.tau * s, self.a.scaled(s), self.spec)
    }
}

/// `-log |f|_p`, or `None` (infinity) for `f = 0`. With `tau = 0` the
/// coefficients are trivially valued whatever the spec.
pub fn valuation_eval(p: &MonomialPoint, f: &LaurentPoly) -> Result<Option<Rat>> {
    p.a.check_dim(f.dim)?;
    let mut best: Option<Rat> = None;
    for (m, c) in &f.terms {
        let v = c.valuation(p.spec).expect("stored coefficients are nonzero");
        let value = &p.tau * v + linalg::dot(&rational::ints(m), p.a.coords());
        if best.as_ref().is_none_or(|b| &value < b) {
            best = Some(value);
        }
    }
    Ok(best)
}

/// The cocharacter `m -> -log |chi^m|_p`.
pub fn trop(p: &MonomialPoint) -> LatticeVector {
    p.a.clone()
}

/// The monomial point over `a` with hybrid exponent `tau`.
pub fn emb(a: &LatticeVector, tau: &Rat, spec: CoefficientSpec) -> Result<MonomialPoint> {
    MonomialPoint::new(tau.clone(), a.clone(), spec)
}

/// `emb . trop`, keeping the fiber of the hybrid structure map.
pub fn retraction(p: &MonomialPoint) -> MonomialPoint {
    emb(&trop(p), &p.tau, p.spec).expect("tau already validated")
}

/// Image of `p` in the hybrid interval `[0, 1]`.
pub fn hybrid_structure_map(p: &MonomialPoint) -> Rat {
    p.tau.clone()
}

/// The positive `s` with `x = s * y`, if any.
pub fn norm_equivalent(x: &MonomialPoint, y: &MonomialPoint) -> Option<Rat> {
    if x.spec != y.spec || x.a.dim() != y.a.dim() {
        return None;
    }
    let xs: Vec<&Rat> = std::iter::once(&x.tau).chain(x.a.coords()).collect();
    let ys: Vec<&Rat> = std::iter::once(&y.tau).chain(y.a.coords()).collect();
    let s = match ys.iter().position(|c| !c.is_zero()) {
        Some(k) => xs[k] / ys[k],
        None => {
            return xs.iter().all(|c| c.is_zero()).then(Rat::one);
        }
    };
    if !s.is_positive() {
        return None;
    }
    xs.iter().zip(&ys).all(|(a, b)| *a == &(*b * &s)).then_some(s)
}

/// Green function `min_i <m_i, a>` of the monomial ideal generated by `gens`.
pub fn model_green(gens: &[Vec<i64>], p: &MonomialPoint) -> Result<Rat> {
    if gens.is_empty() {
        return Err(Error::Invalid("the zero ideal has no model function".into()));
    }
    let mut best: Option<Rat> = None;
    for m in gens {
        if m.len() != p.a.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.a.dim(),
                found: m.len(),
            });
        }
        let value = linalg::dot(&rational::ints(m), p.a.coords());
        if value.is_negative() {
            return Err(Error::OutsideReduction);
        }
        if best.as_ref().is_none_or(|b| &value < b) {
            best = Some(value);
        }
    }
    Ok(best.expect("nonempty generators"))
}

/// Generators of the product ideal.
pub fn ideal_product(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x.iter().zip(y).map(|(p, q)| p + q).collect()))
        .collect()
}

/// Generators of the sum ideal.
pub fn ideal_sum(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    a.iter().chain(b).cloned().collect()
}

/// Whether `p` reduces into the open torus-stable part cut out by `Z`, i.e.
/// `SF_Z(a) = 0`. `Z` must be effective.
pub fn interior_test(p: &MonomialPoint, z: &ToricBoundaryDivisor) -> Result<bool> {
    if let Some(ray) = z.coeffs().iter().position(Signed::is_negative) {
        return Err(Error::NonPositiveBoundary { ray });
    }
    Ok(supporting_function(z)?.eval(&p.a)?.is_zero())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub t: f64,
    pub samples: usize,
    pub max_violation: f64,
}

/// For `||z|| = |z|^t`, measures how far `||x + y||^(1/t)` exceeds
/// `||x||^(1/t) + ||y||^(1/t)` on seeded random complex pairs.
pub fn hybrid_triangle_check(t: f64, samples: usize, seed: u64) -> Result<TriangleReport> {
    hybrid_triangle_check_with(Exec::default(), t, samples, seed)
}

pub fn hybrid_triangle_check_with(exec: Exec, t: f64, samples: usize, seed: u64) -> Result<TriangleReport> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Invalid(format!("t = {t} must lie in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Complex64, Complex64)> = (0..samples)
        .map(|_| {
            let mut z = || {
                let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
            };
            (z(), z())
        })
        .collect();
    let norm = |z: Complex64| z.norm().powf(t);
    let violations = exec.map(&pairs, |&(x, y)| {
        let lhs = norm(x + y).powf(1.0 / t);
        let rhs = norm(x).powf(1.0 / t) + norm(y).powf(1.0 / t);
        ((lhs - rhs) / rhs.max(f64::MIN_POSITIVE)).max(0.0)
    });
    let max_violation = violations.into_iter().fold(0.0, f64::max);
    Ok(TriangleReport {
        t,
        samples,
        max_violation,
    })
}
