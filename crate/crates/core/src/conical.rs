//! Piecewise-linear conical functions on `N_R` and their use as uniform
//! approximants of continuous conical functions.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::{common_refinement, simplicialize, star_subdivide, Fan, FanBuilder, LatticeVector};
use crate::linalg::{self, Matrix};
use crate::rational::{self, Rat};

/// Seed of the homogeneity spot check run before an oracle is sampled.
const HOMOGENEITY_SEED: u64 = 0x00c0_41ca;
const HOMOGENEITY_TRIALS: usize = 64;
const HOMOGENEITY_TOL: f64 = 1e-12;

/// Target number of cross-section samples when measuring deviation.
pub const DEVIATION_SAMPLES: usize = 10_000;

/// A conical function that is linear on every cone of a full-dimensional
/// simplicial fan, stored by its values on the rays.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "PLConicalJson", into = "PLConicalJson")]
pub struct PLConical {
    fan: Fan,
    ray_values: Vec<Rat>,
    charts: OnceLock<Vec<Chart>>,
}

/// Per-cone data: the dual basis of the cone's rays and the linear form the
/// function restricts to.
#[derive(Clone, Debug)]
struct Chart {
    dual: Matrix,
    linear: Vec<Rat>,
    dual_f64: Vec<Vec<f64>>,
    linear_f64: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PLConicalJson {
    fan: Fan,
    #[serde(with = "rational::serde_rat_vec")]
    ray_values: Vec<Rat>,
}

impl TryFrom<PLConicalJson> for PLConical {
    type Error = Error;
    fn try_from(j: PLConicalJson) -> Result<Self> {
        PLConical::new(j.fan, j.ray_values)
    }
}

impl From<PLConical> for PLConicalJson {
    fn from(f: PLConical) -> Self {
        PLConicalJson {
            fan: f.fan,
            ray_values: f.ray_values,
        }
    }
}

impl fmt::Debug for PLConical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PLConical")
            .field("fan", &self.fan)
            .field("ray_values", &self.ray_values)
            .finish()
    }
}

impl PartialEq for PLConical {
    fn eq(&self, other: &Self) -> bool {
        self.fan == other.fan && self.ray_values == other.ray_values
    }
}

impl PLConical {
    pub fn new(fan: Fan, ray_values: Vec<Rat>) -> Result<Self> {
        if ray_values.len() != fan.rays().len() {
            return Err(Error::DimensionMismatch {
                expected: fan.rays().len(),
                found: ray_values.len(),
            });
        }
        require_full_simplicial(&fan)?;
        Ok(Self {
            fan,
            ray_values,
            charts: OnceLock::new(),
        })
    }

    pub fn zero(fan: Fan) -> Result<Self> {
        let n = fan.rays().len();
        Self::new(fan, vec![Rat::zero(); n])
    }

    /// The restriction of the linear form `m` to a fan.
    pub fn linear(fan: Fan, m: &[Rat]) -> Result<Self> {
        let values = fan.rays().iter().map(|r| linalg::dot(m, r.coords())).collect();
        Self::new(fan, values)
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn ray_values(&self) -> &[Rat] {
        &self.ray_values
    }

    pub fn dim(&self) -> usize {
        self.fan.dim()
    }

    fn charts(&self) -> &[Chart] {
        self.charts.get_or_init(|| {
            let fan = &self.fan;
            Exec::default().map_range(fan.cones().len(), |i| {
                let cone = &fan.cones()[i];
                let rows: Matrix = cone.iter().map(|&r| fan.ray(r).coords().to_vec()).collect();
                let dual = linalg::inverse(&linalg::transpose(&rows)).expect("simplicial full-dimensional cone");
                let mut linear = vec![Rat::zero(); fan.dim()];
                for (k, &r) in cone.iter().enumerate() {
                    for (l, d) in linear.iter_mut().zip(&dual[k]) {
                        *l += &self.ray_values[r] * d;
                    }
                }
                Chart {
                    dual_f64: dual.iter().map(|row| row.iter().map(rational::to_f64).collect()).collect(),
                    linear_f64: linear.iter().map(rational::to_f64).collect(),
                    dual,
                    linear,
                }
            })
        })
    }

    /// Linear form that `self` restricts to on cone `i`.
    pub fn linear_form(&self, cone: usize) -> &[Rat] {
        &self.charts()[cone].linear
    }

    /// Index of a maximal cone containing `a`, decided exactly after an f64 prefilter.
    pub fn locate(&self, a: &LatticeVector) -> Option<usize> {
        if a.dim() != self.dim() {
            return None;
        }
        let charts = self.charts();
        let af = a.to_f64();
        let scale = af.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let exact_inside = |c: &Chart| c.dual.iter().all(|row| !linalg::dot(row, a.coords()).is_negative());
        let likely = |c: &Chart| {
            c.dual_f64.iter().all(|row| {
                let v: f64 = row.iter().zip(&af).map(|(x, y)| x * y).sum();
                let norm: f64 = row.iter().map(|x| x.abs()).sum();
                v >= -1e-9 * norm * scale
            })
        };
        charts
            .iter()
            .position(|c| likely(c) && exact_inside(c))
            .or_else(|| charts.iter().position(exact_inside))
    }

    /// Exact value at `a`.
    pub fn eval(&self, a: &LatticeVector) -> Result<Rat> {
        a.check_dim(self.dim())?;
        let cone = self.locate(a).ok_or(Error::OutsideSupport)?;
        Ok(linalg::dot(&self.charts()[cone].linear, a.coords()))
    }

    /// Floating-point value at `x`, `None` outside the support.
    pub fn eval_f64(&self, x: &[f64]) -> Option<f64> {
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut best: Option<(f64, &Chart)> = None;
        for c in self.charts() {
            let worst = c
                .dual_f64
                .iter()
                .map(|row| {
                    let norm: f64 = row.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
                    row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / norm
                })
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(w, _)| worst > w) {
                best = Some((worst, c));
            }
        }
        let (worst, chart) = best?;
        (worst >= -1e-9 * scale).then(|| chart.linear_f64.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    /// Values at the rays of `fine`, which must have support inside the support of `self`.
    pub fn values_on(&self, fine: &Fan) -> Result<Vec<Rat>> {
        if fine == &self.fan {
            return Ok(self.ray_values.clone());
        }
        if let Some(map) = fine.refinement_map(&self.fan) {
            let charts = self.charts();
            let mut owner: Vec<Option<usize>> = vec![None; fine.rays().len()];
            for (i, cone) in fine.cones().iter().enumerate() {
                for &r in cone {
                    owner[r].get_or_insert(map[i]);
                }
            }
            return fine
                .rays()
                .iter()
                .zip(owner)
                .map(|(ray, o)| match o {
                    Some(c) => Ok(linalg::dot(&charts[c].linear, ray.coords())),
                    None => self.eval(ray),
                })
                .collect();
        }
        Exec::default().try_map(fine.rays(), |r| self.eval(r))
    }

    /// The same function presented on a refinement.
    pub fn refine_to(&self, fine: &Fan) -> Result<PLConical> {
        PLConical::new(fine.clone(), self.values_on(fine)?)
    }

    pub fn scale(&self, c: &Rat) -> PLConical {
        PLConical {
            fan: self.fan.clone(),
            ray_values: self.ray_values.iter().map(|v| v * c).collect(),
            charts: OnceLock::new(),
        }
    }

    pub fn neg(&self) -> PLConical {
        self.scale(&-Rat::from_integer(1.into()))
    }

    pub fn add(&self, other: &PLConical) -> Result<PLConical> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PLConical) -> Result<PLConical> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &PLConical, op: impl Fn(&Rat, &Rat) -> Rat) -> Result<PLConical> {
        let fan = if self.fan == other.fan {
            self.fan.clone()
        } else {
            simplicialize(&common_refinement(&self.fan, &other.fan)?)?
        };
        let a = self.values_on(&fan)?;
        let b = other.values_on(&fan)?;
        let values = a.iter().zip(&b).map(|(x, y)| op(x, y)).collect();
        PLConical::new(fan, values)
    }

    /// Pointwise minimum. Cones on which `self - other` changes sign are cut
    /// along its zero locus so the result is linear on every cone.
    pub fn min(&self, other: &PLConical) -> Result<PLConical> {
        let base = if self.fan == other.fan {
            self.fan.clone()
        } else {
            simplicialize(&common_refinement(&self.fan, &other.fan)?)?
        };
        let f = self.values_on(&base)?;
        let g = other.values_on(&base)?;
        let d: Vec<Rat> = f.iter().zip(&g).map(|(x, y)| x - y).collect();
        let mut builder = FanBuilder::new(base.dim(), base.rays().to_vec());
        let mut cones = Vec::new();
        for cone in base.cones() {
            let pos: Vec<usize> = cone.iter().copied().filter(|&r| d[r].is_positive()).collect();
            let neg: Vec<usize> = cone.iter().copied().filter(|&r| d[r].is_negative()).collect();
            if pos.is_empty() || neg.is_empty() {
                cones.push(cone.clone());
                continue;
            }
            let zero: Vec<usize> = cone.iter().copied().filter(|&r| d[r].is_zero()).collect();
            let mut kernel = Vec::new();
            for &p in &pos {
                for &q in &neg {
                    let ray = &base.ray(q).scaled(&d[p]) - &base.ray(p).scaled(&d[q]);
                    kernel.push(builder.ray_index(ray.primitive().expect("independent rays")));
                }
            }
            for side in [&pos, &neg] {
                let mut piece: Vec<usize> = side.iter().chain(&zero).chain(&kernel).copied().collect();
                piece.sort_unstable();
                piece.dedup();
                cones.extend(star_subdivide(&mut builder, piece));
            }
        }
        let fan = builder.finish(cones, base.complete_flag())?;
        let values = Exec::default().try_map(fan.rays(), |r| {
            let a = self.eval(r)?;
            let b = other.eval(r)?;
            Ok::<_, Error>(if a <= b { a } else { b })
        })?;
        PLConical::new(fan, values)
    }

    /// Nonnegative on the whole support.
    pub fn is_effective(&self) -> bool {
        self.ray_values.iter().all(|v| !v.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.ray_values.iter().all(Zero::is_zero)
    }
}

fn require_full_simplicial(fan: &Fan) -> Result<()> {
    let geometry = fan.geometry();
    match fan
        .cones()
        .iter()
        .zip(geometry)
        .position(|(c, g)| c.len() != fan.dim() || g.rank != fan.dim())
    {
        Some(cone) => Err(Error::NotSimplicial { cone }),
        None => Ok(()),
    }
}

/// `sup |f| / g` over the common support, with the ray attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct SupRatio {
    /// `None` means infinity: some ray has `g = 0` and `f != 0`.
    pub value: Option<Rat>,
    pub witness: Option<LatticeVector>,
}

pub fn sup_ratio(f: &PLConical, g: &PLConical) -> Result<SupRatio> {
    sup_ratio_with(Exec::default(), f, g)
}

/// Both functions are linear on every cone of the common refinement, so the
/// linear-fractional ratio peaks at one of its rays.
pub fn sup_ratio_with(exec: Exec, f: &PLConical, g: &PLConical) -> Result<SupRatio> {
    let fan = if f.fan == g.fan {
        f.fan.clone()
    } else if g.fan.refines(&f.fan) {
        g.fan.clone()
    } else if f.fan.refines(&g.fan) {
        f.fan.clone()
    } else {
        common_refinement(&f.fan, &g.fan)?
    };
    let fv = f.values_on(&fan)?;
    let gv = g.values_on(&fan)?;
    let ratios: Vec<Result<Option<Option<Rat>>>> = exec.map_range(fan.rays().len(), |i| {
        let (a, b) = (&fv[i], &gv[i]);
        if b.is_negative() {
            return Err(Error::Invalid(format!(
                "reference function is negative at ray {}",
                i
            )));
        }
        Ok(match (a.is_zero(), b.is_zero()) {
            (true, true) => None,
            (false, true) => Some(None),
            _ => Some(Some(a.abs() / b)),
        })
    });
    let mut best = SupRatio {
        value: Some(Rat::zero()),
        witness: None,
    };
    for (i, r) in ratios.into_iter().enumerate() {
        match r? {
            None => {}
            Some(None) => {
                return Ok(SupRatio {
                    value: None,
                    witness: Some(fan.ray(i).clone()),
                })
            }
            Some(Some(q)) => {
                if best.witness.is_none() || best.value.as_ref().is_some_and(|b| &q > b) {
                    best = SupRatio {
                        value: Some(q),
                        witness: Some(fan.ray(i).clone()),
                    };
                }
            }
        }
    }
    Ok(best)
}

/// A continuous function `N_R -> R`, positively homogeneous of degree one,
/// given as an `f64` callback.
#[derive(Clone)]
pub struct ConicalOracle {
    name: String,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for ConicalOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConicalOracle({})", self.name)
    }
}

impl ConicalOracle {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn euclidean() -> Self {
        Self::new("euclidean", |x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn lp(p: f64) -> Self {
        Self::new(format!("l{p}"), move |x| {
            let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
        })
    }

    /// `max(a_1, ..., a_n, 0)`.
    pub fn max_zero() -> Self {
        Self::new("max0", |x| x.iter().fold(0.0f64, |m, v| m.max(*v)))
    }

    /// `sqrt(x^T Q x)` for a positive definite `Q`.
    pub fn quadratic(q: Vec<Vec<f64>>) -> Self {
        Self::new("quadratic", move |x| {
            let s: f64 = q
                .iter()
                .zip(x)
                .map(|(row, xi)| xi * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .sum();
            s.max(0.0).sqrt()
        })
    }

    pub fn from_pl(f: PLConical) -> Self {
        Self::new("pl", move |x| f.eval_f64(x).unwrap_or(f64::NAN))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Spot check of `o(lambda x) = lambda o(x)` at seeded random points.
    pub fn check_homogeneity(&self, dim: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(HOMOGENEITY_SEED);
        for _ in 0..HOMOGENEITY_TRIALS {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lambda: f64 = rng.gen_range(0.125..8.0);
            let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
            let lhs = self.eval(&scaled);
            let rhs = lambda * self.eval(&x);
            let diff = (lhs - rhs).abs();
            let defect = if diff == 0.0 {
                0.0
            } else {
                diff / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
            };
            if !(defect <= HOMOGENEITY_TOL) {
                return Err(Error::OracleNotHomogeneous {
                    name: self.name.clone(),
                    scale: lambda,
                    defect,
                });
            }
        }
        Ok(())
    }
}

/// Measured quality of an interpolant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub depth: usize,
    pub deviation_estimate: f64,
    pub samples: usize,
}

/// Interpolates `o` on the `depth`-fold barycentric subdivision of `reference`.
pub fn approximate(o: &ConicalOracle, reference: &Fan, depth: usize) -> Result<(PLConical, ApproxReport)> {
    approximate_with(Exec::default(), o, reference, depth)
}

pub fn approximate_with(
    exec: Exec,
    o: &ConicalOracle,
    reference: &Fan,
    depth: usize,
) -> Result<(PLConical, ApproxReport)> {
    check_reference(reference)?;
    o.check_homogeneity(reference.dim())?;
    let mut fan = reference.clone();
    for _ in 0..depth {
        fan = fan.barycentric_subdivision()?;
    }
    interpolate(exec, o, fan, depth)
}

pub(crate) fn check_reference(reference: &Fan) -> Result<()> {
    require_full_simplicial(reference)?;
    if !reference.is_complete() {
        return Err(Error::NotComplete);
    }
    Ok(())
}

/// Samples `o` at the rays of `fan`, rounding to denominator `2^(32 + depth)`.
pub(crate) fn interpolate(exec: Exec, o: &ConicalOracle, fan: Fan, depth: usize) -> Result<(PLConical, ApproxReport)> {
    let bits = 32 + depth as u32;
    let raw: Vec<f64> = exec.map(fan.rays(), |r| o.eval(&r.to_f64()));
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!(
            "oracle `{}` returned a non-finite value at ray {i}",
            o.name()
        )));
    }
    let values = raw.iter().map(|&v| rational::round_dyadic(v, bits)).collect();
    let f = PLConical::new(fan, values)?;
    let (deviation_estimate, samples) = sampled_deviation(exec, &f, o, DEVIATION_SAMPLES);
    Ok((
        f,
        ApproxReport {
            depth,
            deviation_estimate,
            samples,
        },
    ))
}

/// Sup of `|f - o|` over a grid on the L1 unit sphere, cone by cone. Returns
/// the estimate and the number of sample points.
pub fn sampled_deviation(exec: Exec, f: &PLConical, o: &ConicalOracle, target: usize) -> (f64, usize) {
    sampled_sup(exec, f.fan(), target, |cone, x, weights| {
        let pl: f64 = cone.iter().zip(weights).map(|(&r, w)| w * rational::to_f64(&f.ray_values[r])).sum();
        (pl - o.eval(x)).abs()
    })
}

/// Sup of `|fine - coarse|` on the L1 unit sphere, sampled on the cones of
/// `fine`. Cheapest when `coarse` has few cones.
pub fn sampled_difference(exec: Exec, fine: &PLConical, coarse: &PLConical, target: usize) -> f64 {
    sampled_sup(exec, fine.fan(), target, |cone, x, weights| {
        let a: f64 = cone.iter().zip(weights).map(|(&r, w)| w * rational::to_f64(&fine.ray_values[r])).sum();
        coarse.eval_f64(x).map_or(f64::INFINITY, |b| (a - b).abs())
    })
    .0
}

/// Runs `probe(cone, point, weights)` on grid points of every cone's L1
/// cross-section; `point = sum_j weights[j] * ray_j` has unit L1 norm.
fn sampled_sup<F>(exec: Exec, fan: &Fan, target: usize, probe: F) -> (f64, usize)
where
    F: Fn(&[usize], &[f64], &[f64]) -> f64 + Sync + Send,
{
    let n = fan.dim();
    let cones = fan.cones();
    if cones.is_empty() {
        return (0.0, 0);
    }
    let per_cone = target.div_ceil(cones.len()).max(1);
    let mut k = 1;
    while grid_size(n, k) < per_cone {
        k += 1;
    }
    let grid = simplex_grid(n, k);
    let rays_f64: Vec<Vec<f64>> = fan.rays().iter().map(|r| r.to_f64()).collect();
    let sup = exec.max_f64(cones.len(), |i| {
        let cone = &cones[i];
        let norms: Vec<f64> = cone.iter().map(|&r| rays_f64[r].iter().map(|v| v.abs()).sum()).collect();
        let mut worst = 0.0f64;
        let mut x = vec![0.0; n];
        let mut weights = vec![0.0; cone.len()];
        for w in &grid {
            x.iter_mut().for_each(|v| *v = 0.0);
            for (j, &r) in cone.iter().enumerate() {
                weights[j] = w[j] / norms[j];
                for (xv, rv) in x.iter_mut().zip(&rays_f64[r]) {
                    *xv += weights[j] * rv;
                }
            }
            let s: f64 = x.iter().map(|v| v.abs()).sum();
            x.iter_mut().for_each(|v| *v /= s);
            weights.iter_mut().for_each(|v| *v /= s);
            worst = worst.max(probe(cone, &x, &weights));
        }
        worst
    });
    (sup, cones.len() * grid.len())
}

fn grid_size(n: usize, k: usize) -> usize {
    // compositions of k into n parts, plus the barycenter
    let mut c: usize = 1;
    for i in 1..n {
        c = c * (k + i) / i;
    }
    c + 1
}

/// Barycentric weights `c / k` over all compositions of `k` into `n` parts,
/// followed by the barycenter.
fn simplex_grid(n: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / k as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(n, left - c, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, k, k, &mut Vec::new(), &mut out);
    out.push(vec![1.0 / n as f64; n]);
    out
}
