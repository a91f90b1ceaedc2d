//! Asymptotic slopes of heights in degenerating families.
//!
//! Slope functions are degree-one homogeneous rational functions evaluated
//! exactly. Heights and moduli are doubles, and every pass threshold is a
//! named constant below.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conical::{ConicalOracle, PLConical};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rational::{self, Rat};

/// Directional limits closer than this count as continuous.
pub const CONTINUITY_TOL: f64 = 1e-6;
/// Distance to the face at which directional limits are read off.
pub const APPROACH_EPS: f64 = 1e-9;
/// Minimum number of samples for a slope fit.
pub const MIN_SLOPE_SAMPLES: usize = 8;
/// Minimum ratio `max(-log|s|) / min(-log|s|)` for a slope fit.
pub const MIN_DYNAMIC_RANGE: f64 = 1e3;
/// Largest final residual accepted by [`green_residual`].
pub const RESIDUAL_TOL: f64 = 0.01;
/// Number of positive points checked for a vanishing denominator.
const DENOMINATOR_SAMPLES: usize = 256;

/// A polynomial with rational coefficients in `nvars` variables.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rat>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exps: Vec<u32>,
    #[serde(with = "rational::serde_rat")]
    coeff: Rat,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(e, c)| TermJson {
                exps: e.clone(),
                coeff: c.clone(),
            })
            .collect();
        terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<TermJson>::deserialize(d)?;
        let nvars = terms.first().map_or(0, |t| t.exps.len());
        Polynomial::new(nvars, terms.into_iter().map(|t| (t.exps, t.coeff)))
            .map_err(serde::de::Error::custom)
    }
}

impl Polynomial {
    /// Collects terms, summing repeated exponents and dropping zeros.
    pub fn new(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rat)>) -> Result<Self> {
        let mut map: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    found: e.len(),
                });
            }
            *map.entry(e).or_insert_with(Rat::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self { nvars, terms: map })
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_ints(nvars: usize, terms: &[(&[u32], i64)]) -> Result<Self> {
        Self::new(nvars, terms.iter().map(|(e, c)| (e.to_vec(), rational::int(*c))))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree when homogeneous; `None` for the zero polynomial or a
    /// mixed-degree one.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degrees = self.terms.keys().map(|e| e.iter().sum::<u32>());
        let d = degrees.next()?;
        degrees.all(|e| e == d).then_some(d)
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        self.terms.iter().fold(Rat::zero(), |acc, (e, c)| {
            let mono = e
                .iter()
                .zip(x)
                .fold(Rat::one(), |m, (&k, xi)| m * num_traits::pow(xi.clone(), k as usize));
            acc + c * mono
        })
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rational::to_f64(c) * e.iter().zip(x).map(|(&k, xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }
}

/// `num / den` with `deg num = deg den + 1`, so degree-one homogeneous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalJson", into = "RationalJson")]
pub struct HomogeneousRational {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct RationalJson {
    num: Polynomial,
    den: Polynomial,
}

impl TryFrom<RationalJson> for HomogeneousRational {
    type Error = Error;
    fn try_from(j: RationalJson) -> Result<Self> {
        HomogeneousRational::new(j.num, j.den)
    }
}

impl From<HomogeneousRational> for RationalJson {
    fn from(h: HomogeneousRational) -> Self {
        RationalJson { num: h.num, den: h.den }
    }
}

impl HomogeneousRational {
    pub fn new(mut num: Polynomial, den: Polynomial) -> Result<Self> {
        let r = den.nvars;
        if num.is_zero() {
            num.nvars = r;
        }
        if num.nvars != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: num.nvars,
            });
        }
        let dd = den
            .homogeneous_degree()
            .ok_or_else(|| Error::Invalid("denominator must be a nonzero homogeneous polynomial".into()))?;
        if !num.is_zero() {
            let nd = num
                .homogeneous_degree()
                .ok_or_else(|| Error::Invalid("numerator must be homogeneous".into()))?;
            if nd != dd + 1 {
                return Err(Error::Invalid(format!(
                    "numerator degree {nd} must exceed denominator degree {dd} by one"
                )));
            }
        }
        let mu = Self { num, den };
        mu.check_denominator()?;
        Ok(mu)
    }

    /// A linear form `sum c_i x_i`.
    pub fn linear(coeffs: &[Rat]) -> Result<Self> {
        let r = coeffs.len();
        let num = Polynomial::new(
            r,
            coeffs.iter().enumerate().map(|(i, c)| {
                let mut e = vec![0; r];
                e[i] = 1;
                (e, c.clone())
            }),
        )?;
        Self::new(num, Polynomial::new(r, [(vec![0; r], Rat::one())])?)
    }

    pub fn nvars(&self) -> usize {
        self.den.nvars
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    /// Seeded exact check that the denominator keeps one sign at positive
    /// points. The orthant is connected, so a sign change means a zero.
    fn check_denominator(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sign = None;
        for _ in 0..DENOMINATOR_SAMPLES {
            let x: Vec<Rat> = (0..self.nvars()).map(|_| random_positive(&mut rng)).collect();
            let d = self.den.eval(&x);
            let s = d.signum();
            if d.is_zero() || sign.is_some_and(|t: Rat| t != s) {
                return Err(Error::Invalid(format!(
                    "denominator vanishes in the positive orthant, near {}",
                    x.iter().map(rational::format_rat).collect::<Vec<_>>().join(", ")
                )));
            }
            sign = Some(s);
        }
        Ok(())
    }

    fn eval_any(&self, m: &[Rat]) -> Result<Rat> {
        if m.len() != self.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.nvars(),
                found: m.len(),
            });
        }
        let d = self.den.eval(m);
        if d.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.num.eval(m) / d)
    }

    pub fn eval_f64(&self, m: &[f64]) -> f64 {
        self.num.eval_f64(m) / self.den.eval_f64(m)
    }
}

fn random_positive(rng: &mut ChaCha8Rng) -> Rat {
    Rat::new(BigInt::from(rng.gen_range(1..=997)), BigInt::from(rng.gen_range(1..=89)))
}

/// Exact value of `mu` at a strictly positive point.
pub fn eval_mu(mu: &HomogeneousRational, m: &[Rat]) -> Result<Rat> {
    if m.iter().any(|x| !x.is_positive()) {
        return Err(Error::Invalid("evaluation point must be strictly positive".into()));
    }
    mu.eval_any(m)
}

/// The slope `mu(m)` predicted for an arc with vanishing orders `m`.
pub fn expected_slope(mu: &HomogeneousRational, orders: &[u64]) -> Result<Rat> {
    if orders.contains(&0) {
        return Err(Error::Invalid("arc orders must be strictly positive".into()));
    }
    let m: Vec<Rat> = orders.iter().map(|&k| Rat::from_integer(BigInt::from(k))).collect();
    eval_mu(mu, &m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub face: Vec<usize>,
    pub samples: usize,
    pub max_discrepancy: f64,
    pub pass: bool,
}

/// Approaches points of the face `{x_i = 0, i in face}` along three random
/// directions each and compares the values reached.
pub fn check_boundary_extension(mu: &HomogeneousRational, face: &[usize], samples: usize, seed: u64) -> Result<BoundaryReport> {
    let r = mu.nvars();
    if let Some(&i) = face.iter().find(|&&i| i >= r) {
        return Err(Error::Invalid(format!("face coordinate {i} out of range for {r} variables")));
    }
    let eps = rational::from_f64_decimal(APPROACH_EPS, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let base: Vec<Rat> = (0..r)
            .map(|i| if face.contains(&i) { Rat::zero() } else { random_positive(&mut rng) })
            .collect();
        let mut values = Vec::with_capacity(3);
        for _ in 0..3 {
            let point: Vec<Rat> = base
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    if face.contains(&i) {
                        &eps * Rat::new(BigInt::from(rng.gen_range(1..=100)), BigInt::from(100))
                    } else {
                        b.clone()
                    }
                })
                .collect();
            values.push(rational::to_f64(&mu.eval_any(&point)?));
        }
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let scale = 1.0f64.max(hi.abs());
        worst = worst.max((hi - lo) / scale);
    }
    Ok(BoundaryReport {
        face: face.to_vec(),
        samples,
        max_discrepancy: worst,
        pass: worst <= CONTINUITY_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of the fit.
    pub o1_bound: f64,
    pub samples: usize,
}

/// Least squares fit `h = slope * (-log|s|) + intercept` over `(|s|, h)` pairs.
pub fn fit_slope(samples: &[(f64, f64)]) -> Result<SlopeFit> {
    if samples.len() < MIN_SLOPE_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{} samples, need at least {MIN_SLOPE_SAMPLES}",
            samples.len()
        )));
    }
    if let Some((s, _)) = samples.iter().find(|(s, _)| !(*s > 0.0 && *s < 1.0)) {
        return Err(Error::Invalid(format!("modulus {s} is not in (0, 1)")));
    }
    let xs: Vec<f64> = samples.iter().map(|(s, _)| -s.ln()).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    if hi / lo < MIN_DYNAMIC_RANGE {
        return Err(Error::InsufficientSamples(format!(
            "-log|s| spans [{lo:.3e}, {hi:.3e}], need {MIN_DYNAMIC_RANGE:e} dynamic range"
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|(_, h)| h).sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(samples).map(|(x, (_, h))| (x - mx) * (h - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let o1_bound = xs
        .iter()
        .zip(samples)
        .map(|(x, (_, h))| (h - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(SlopeFit {
        slope,
        intercept,
        o1_bound,
        samples: samples.len(),
    })
}

/// A conical function on the positive orthant of `R^r`, the cone over the
/// simplex of the dual complex at a point where `r` boundary components meet.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SimplexJson", into = "SimplexJson")]
pub struct SimplexFunction {
    r: usize,
    kind: SimplexKind,
}

#[derive(Clone, Debug)]
enum SimplexKind {
    /// Affine on the simplex, determined by the vertex values.
    Linear(Vec<f64>),
    Piecewise(PLConical),
    Oracle(ConicalOracle),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SimplexJson {
    Linear { vertex_values: Vec<f64> },
    Piecewise { pl: PLConical },
}

impl TryFrom<SimplexJson> for SimplexFunction {
    type Error = Error;
    fn try_from(j: SimplexJson) -> Result<Self> {
        Ok(match j {
            SimplexJson::Linear { vertex_values } => SimplexFunction::linear(vertex_values),
            SimplexJson::Piecewise { pl } => SimplexFunction::piecewise(pl)?,
        })
    }
}

impl From<SimplexFunction> for SimplexJson {
    fn from(f: SimplexFunction) -> Self {
        match f.kind {
            SimplexKind::Linear(vertex_values) => SimplexJson::Linear { vertex_values },
            SimplexKind::Piecewise(pl) => SimplexJson::Piecewise { pl },
            // Oracles have no text form; freeze their vertex values.
            SimplexKind::Oracle(o) => SimplexJson::Linear {
                vertex_values: (0..f.r).map(|i| o.eval(&unit(f.r, i))).collect(),
            },
        }
    }
}

fn unit(r: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; r];
    e[i] = 1.0;
    e
}

impl SimplexFunction {
    pub fn linear(vertex_values: Vec<f64>) -> Self {
        Self {
            r: vertex_values.len(),
            kind: SimplexKind::Linear(vertex_values),
        }
    }

    /// A piecewise-linear function whose fan covers the positive orthant.
    pub fn piecewise(pl: PLConical) -> Result<Self> {
        let r = pl.dim();
        let corner = crate::lattice::LatticeVector::new(vec![Rat::one(); r]);
        if !pl.fan().in_support(&corner) || (0..r).any(|i| {
            let mut e = vec![Rat::zero(); r];
            e[i] = Rat::one();
            !pl.fan().in_support(&crate::lattice::LatticeVector::new(e))
        }) {
            return Err(Error::OutsideSupport);
        }
        Ok(Self {
            r,
            kind: SimplexKind::Piecewise(pl),
        })
    }

    pub fn oracle(r: usize, o: ConicalOracle) -> Self {
        Self {
            r,
            kind: SimplexKind::Oracle(o),
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SimplexKind::Linear(v) => v.iter().zip(x).map(|(a, b)| a * b).sum(),
            SimplexKind::Piecewise(pl) => pl.eval_f64(x).unwrap_or(f64::NAN),
            SimplexKind::Oracle(o) => o.eval(x),
        }
    }

    /// Largest jump seen when stepping from random points on the boundary
    /// faces of the simplex a relative distance `1e-12` into its interior.
    pub fn continuity_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let mut p: Vec<f64> = (0..self.r).map(|_| rng.gen_range(0.0..1.0)).collect();
            p[rng.gen_range(0..self.r)] = 0.0;
            let q: Vec<f64> = p.iter().map(|v| v + 1e-12).collect();
            worst = worst.max((self.eval(&p) - self.eval(&q)).abs() / 1.0f64.max(self.eval(&p).abs()));
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `(R, sup |g - f| / sum(-log|z_i|))` per radius.
    pub residuals: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Checks `g(z) = f(-log|z|) + o(sum -log|z_i|)` on samples: for each
/// threshold `R` (increasing, so the radii `e^-R` shrink) the relative
/// residual is taken over samples with `min(-log|z_i|) >= R`.
pub fn green_residual(f: &SimplexFunction, samples: &[(Vec<f64>, f64)], schedule: &[f64]) -> Result<ResidualReport> {
    green_residual_with(Exec::default(), f, samples, schedule)
}

pub fn green_residual_with(
    exec: Exec,
    f: &SimplexFunction,
    samples: &[(Vec<f64>, f64)],
    schedule: &[f64],
) -> Result<ResidualReport> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("radius thresholds must be nonempty and strictly increasing".into()));
    }
    for (z, _) in samples {
        if z.len() != f.r {
            return Err(Error::DimensionMismatch {
                expected: f.r,
                found: z.len(),
            });
        }
        if let Some(m) = z.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
            return Err(Error::Invalid(format!("modulus {m} is not in (0, 1)")));
        }
    }
    let scored: Vec<(f64, f64)> = exec.map(samples, |(z, g)| {
        let x: Vec<f64> = z.iter().map(|m| -m.ln()).collect();
        let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let total: f64 = x.iter().sum();
        (min, (g - f.eval(&x)).abs() / total)
    });
    let mut residuals = Vec::with_capacity(schedule.len());
    for &r in schedule {
        let bucket = scored.iter().filter(|(min, _)| *min >= r).map(|(_, v)| *v);
        let sup = bucket.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        residuals.push((r, sup.ok_or(Error::EmptyBucket(r))?));
    }
    let decreasing = residuals.windows(2).all(|w| w[1].1 <= w[0].1);
    let last = residuals.last().map_or(f64::INFINITY, |x| x.1);
    Ok(ResidualReport {
        pass: decreasing && last <= RESIDUAL_TOL,
        residuals,
    })
}
