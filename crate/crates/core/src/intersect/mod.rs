//! Intersection numbers of nef toric divisors through polytopes and mixed
//! volumes, extended to one adelic argument and to boundary functions.

mod hull;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::adelic::{AdelicToricDivisor, BoundaryDatum};
use crate::conical::{self, PLConical};
use crate::divisor::{supporting_function, ToricBoundaryDivisor};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeVector;
use crate::linalg;
use crate::rational::{self, Rat};

/// The convex hull of finitely many points of `M_R`, stored by its vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeJson", into = "PolytopeJson")]
pub struct RationalPolytope {
    dim: usize,
    vertices: Vec<LatticeVector>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    vertices: Vec<LatticeVector>,
}

impl TryFrom<PolytopeJson> for RationalPolytope {
    type Error = Error;
    fn try_from(j: PolytopeJson) -> Result<Self> {
        let dim = match (j.dim, j.vertices.first()) {
            (Some(d), _) => d,
            (None, Some(v)) => v.dim(),
            (None, None) => return Err(Error::Invalid("an empty polytope needs an explicit `dim`".into())),
        };
        RationalPolytope::hull_of(dim, j.vertices)
    }
}

impl From<RationalPolytope> for PolytopeJson {
    fn from(p: RationalPolytope) -> Self {
        PolytopeJson {
            dim: p.vertices.is_empty().then_some(p.dim),
            vertices: p.vertices,
        }
    }
}

impl RationalPolytope {
    /// Convex hull of `points`, with redundant points removed.
    pub fn hull_of(dim: usize, points: Vec<LatticeVector>) -> Result<Self> {
        for p in &points {
            p.check_dim(dim)?;
        }
        let coords: Vec<Vec<Rat>> = points.into_iter().map(LatticeVector::into_coords).collect();
        let h = hull::hull(dim, &coords)?;
        Ok(Self::from_sorted(dim, h.vertices))
    }

    fn from_sorted(dim: usize, vertices: Vec<Vec<Rat>>) -> Self {
        Self {
            dim,
            vertices: vertices.into_iter().map(LatticeVector::new).collect(),
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, vertices: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[LatticeVector] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Exact Lebesgue volume; zero for flat or empty polytopes.
    pub fn volume(&self) -> Result<Rat> {
        Ok(hull::hull(self.dim, &self.coords())?.volume)
    }

    fn coords(&self) -> Vec<Vec<Rat>> {
        self.vertices.iter().map(|v| v.coords().to_vec()).collect()
    }

    /// Minkowski sum, reduced to its vertices.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.is_empty() || other.is_empty() {
            return Ok(Self::empty(self.dim));
        }
        let sums: Vec<Vec<Rat>> = self
            .vertices
            .iter()
            .flat_map(|a| other.vertices.iter().map(move |b| (a + b).into_coords()))
            .collect();
        Ok(Self::from_sorted(self.dim, hull::hull(self.dim, &sums)?.vertices))
    }

    /// `max_{m in P} -<m, a>`, the supporting function the polytope defines.
    pub fn envelope(&self, a: &LatticeVector) -> Option<Rat> {
        self.vertices
            .iter()
            .map(|m| -linalg::dot(m.coords(), a.coords()))
            .max()
    }
}

/// `P_D = { m : <m, v_rho> >= -a_rho for every ray }`.
pub fn polytope_of(d: &ToricBoundaryDivisor) -> Result<RationalPolytope> {
    if let Ok(sf) = supporting_function(d) {
        if let Ok(p) = nef_polytope(&sf) {
            return Ok(p);
        }
    }
    polytope_by_enumeration(d)
}

/// Brute-force vertex enumeration: every feasible point cut out by `dim`
/// independent tight inequalities is a vertex, and every vertex is one.
fn polytope_by_enumeration(d: &ToricBoundaryDivisor) -> Result<RationalPolytope> {
    let fan = d.fan();
    let n = fan.dim();
    let rays = fan.rays();
    let neg: Vec<Rat> = d.coeffs().iter().map(|a| -a).collect();
    let candidates = Exec::default().map(&linalg::combinations(rays.len(), n), |subset| {
        let rows: Vec<Vec<Rat>> = subset.iter().map(|&r| rays[r].coords().to_vec()).collect();
        let rhs: Vec<Rat> = subset.iter().map(|&r| neg[r].clone()).collect();
        let m = linalg::solve(&rows, &rhs)?;
        rays.iter()
            .zip(&neg)
            .all(|(v, b)| &linalg::dot(&m, v.coords()) >= b)
            .then_some(m)
    });
    let mut vertices: Vec<Vec<Rat>> = candidates.into_iter().flatten().collect();
    vertices.sort();
    vertices.dedup();
    Ok(RationalPolytope::from_sorted(n, vertices))
}

/// One wall-crossing test: the linear piece of `cone` against the far ray of
/// its neighbour.
struct WallTest {
    cone: usize,
    ray: usize,
}

fn wall_tests(f: &PLConical) -> Result<Vec<WallTest>> {
    let fan = f.fan();
    if !fan.is_complete() {
        return Err(Error::NotComplete);
    }
    let mut walls: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
    for (ci, cone) in fan.cones().iter().enumerate() {
        for k in 0..cone.len() {
            let mut facet = cone.clone();
            let opposite = facet.remove(k);
            walls.entry(facet).or_default().push((ci, opposite));
        }
    }
    let mut tests = Vec::new();
    for sides in walls.values() {
        if let [(s, a), (t, b)] = sides[..] {
            tests.push(WallTest { cone: s, ray: b });
            tests.push(WallTest { cone: t, ray: a });
        }
    }
    tests.sort_by_key(|w| (w.cone, w.ray));
    Ok(tests)
}

/// `f(v) - <L_cone, v>`, nonnegative for every wall iff `f` is convex.
fn wall_slack(f: &PLConical, w: &WallTest) -> Rat {
    let v = f.fan().ray(w.ray);
    &f.ray_values()[w.ray] - linalg::dot(f.linear_form(w.cone), v.coords())
}

/// Cone and ray witnessing a failure of convexity, if any.
pub fn nef_violation(f: &PLConical) -> Result<Option<(usize, usize)>> {
    Ok(wall_tests(f)?
        .into_iter()
        .find(|w| wall_slack(f, w).is_negative())
        .map(|w| (w.cone, w.ray)))
}

/// For a convex supporting function the polytope is the set of negated
/// linear pieces.
pub fn nef_polytope(f: &PLConical) -> Result<RationalPolytope> {
    if let Some((cone, ray)) = nef_violation(f)? {
        return Err(Error::NotNef { cone, ray });
    }
    Ok(pieces_polytope(f))
}

fn pieces_polytope(f: &PLConical) -> RationalPolytope {
    let mut vertices: Vec<Vec<Rat>> = (0..f.fan().cones().len())
        .map(|c| f.linear_form(c).iter().map(|x| -x).collect())
        .collect();
    vertices.sort();
    vertices.dedup();
    RationalPolytope::from_sorted(f.dim(), vertices)
}

/// A boundary divisor whose supporting function is convex, so that its
/// polytope reproduces it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ToricBoundaryDivisor", into = "ToricBoundaryDivisor")]
pub struct NefToricDivisor {
    base: ToricBoundaryDivisor,
    polytope: RationalPolytope,
}

impl TryFrom<ToricBoundaryDivisor> for NefToricDivisor {
    type Error = Error;
    fn try_from(d: ToricBoundaryDivisor) -> Result<Self> {
        NefToricDivisor::new(d)
    }
}

impl From<NefToricDivisor> for ToricBoundaryDivisor {
    fn from(d: NefToricDivisor) -> Self {
        d.base
    }
}

impl NefToricDivisor {
    pub fn new(base: ToricBoundaryDivisor) -> Result<Self> {
        let polytope = nef_polytope(&supporting_function(&base)?)?;
        Ok(Self { base, polytope })
    }

    pub fn base(&self) -> &ToricBoundaryDivisor {
        &self.base
    }

    pub fn polytope(&self) -> &RationalPolytope {
        &self.polytope
    }
}

/// `n! MV(P_1, ..., P_n)` by inclusion-exclusion over Minkowski sums of subsets.
pub fn mixed_volume_scaled(exec: Exec, ps: &[&RationalPolytope]) -> Result<Rat> {
    let n = ps.len();
    if n == 0 {
        return Ok(Rat::one());
    }
    if let Some(p) = ps.iter().find(|p| p.dim != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.dim });
    }
    if ps.iter().any(|p| p.is_empty()) {
        return Ok(Rat::zero());
    }
    let terms = exec.map_range((1usize << n) - 1, |mask| -> Result<Rat> {
        let subset = mask + 1;
        let mut members = (0..n).filter(|i| subset >> i & 1 == 1);
        let mut sum = ps[members.next().unwrap()].clone();
        let mut size = 1;
        for i in members {
            sum = sum.minkowski_sum(ps[i])?;
            size += 1;
        }
        let v = sum.volume()?;
        Ok(if (n - size) % 2 == 0 { v } else { -v })
    });
    terms.into_iter().sum()
}

/// Mixed volume, normalized so that `MV(P, ..., P) = vol(P)`.
pub fn mixed_volume(ps: &[RationalPolytope]) -> Result<Rat> {
    mixed_volume_with(Exec::default(), ps)
}

pub fn mixed_volume_with(exec: Exec, ps: &[RationalPolytope]) -> Result<Rat> {
    let refs: Vec<&RationalPolytope> = ps.iter().collect();
    let factorial: u64 = (1..=ps.len() as u64).product();
    Ok(mixed_volume_scaled(exec, &refs)? / Rat::from_integer(BigInt::from(factorial)))
}

/// `(D_1 ... D_n)` for nef divisors on one complete fan.
pub fn intersection_number(ds: &[NefToricDivisor]) -> Result<Rat> {
    intersection_number_with(Exec::default(), ds)
}

pub fn intersection_number_with(exec: Exec, ds: &[NefToricDivisor]) -> Result<Rat> {
    let Some(first) = ds.first() else {
        return Err(Error::Invalid("no divisors given".into()));
    };
    let n = first.base.fan().dim();
    if ds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ds.len() });
    }
    if ds.iter().any(|d| d.base.fan() != first.base.fan()) {
        return Err(Error::FanMismatch);
    }
    let ps: Vec<&RationalPolytope> = ds.iter().map(|d| &d.polytope).collect();
    mixed_volume_scaled(exec, &ps)
}

/// `(E . L_1 ... L_{n-1})` for any model function `f`: the sum over facet
/// directions `u` of `SF_E(u)` times the lattice mixed volume of the faces of
/// the `L_i` on which `u` is minimal. Linear in `f`, so no nefness is needed.
pub fn model_pairing(f: &PLConical, ls: &[NefToricDivisor]) -> Result<Rat> {
    model_pairing_with(Exec::default(), f, ls)
}

pub fn model_pairing_with(exec: Exec, f: &PLConical, ls: &[NefToricDivisor]) -> Result<Rat> {
    let n = f.dim();
    if ls.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            found: ls.len(),
        });
    }
    if let Some(l) = ls.iter().find(|l| l.polytope.dim != n) {
        return Err(Error::DimensionMismatch { expected: n, found: l.polytope.dim });
    }
    let terms = exec.try_map(&facet_directions(f, ls)?, |u| -> Result<Rat> {
        let weight = facet_weight(u, ls)?;
        if weight.is_zero() {
            return Ok(weight);
        }
        Ok(f.eval(u)? * weight)
    })?;
    Ok(terms.into_iter().sum())
}

/// Primitive rays of the common refinement of the fans of the `L_i`, which
/// contain every facet normal of their Minkowski sum.
fn facet_directions(f: &PLConical, ls: &[NefToricDivisor]) -> Result<Vec<LatticeVector>> {
    let mut fan = match ls.first() {
        Some(l) => l.base.fan().clone(),
        None => f.fan().clone(),
    };
    for l in ls.iter().skip(1) {
        if l.base.fan() != &fan {
            fan = crate::lattice::common_refinement(&fan, l.base.fan())?;
        }
    }
    let mut dirs: Vec<LatticeVector> = fan.rays().iter().filter_map(LatticeVector::primitive).collect();
    dirs.sort();
    dirs.dedup();
    Ok(dirs)
}

/// Lattice mixed volume in `u^perp` of the faces of the `L_i` minimizing `u`.
/// Dropping a coordinate `k` with `u_k != 0` scales lattice volume by `|u_k|`.
fn facet_weight(u: &LatticeVector, ls: &[NefToricDivisor]) -> Result<Rat> {
    let k = u.coords().iter().position(|c| !c.is_zero()).expect("nonzero direction");
    let faces: Vec<RationalPolytope> = ls
        .iter()
        .map(|l| {
            let values: Vec<Rat> = l.polytope.vertices.iter().map(|m| linalg::dot(m.coords(), u.coords())).collect();
            let min = values.iter().min().expect("nef polytopes are nonempty").clone();
            let face: Vec<LatticeVector> = l
                .polytope
                .vertices
                .iter()
                .zip(&values)
                .filter(|(_, v)| **v == min)
                .map(|(m, _)| {
                    let mut c = m.coords().to_vec();
                    c.remove(k);
                    LatticeVector::new(c)
                })
                .collect();
            RationalPolytope::hull_of(u.dim() - 1, face)
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&RationalPolytope> = faces.iter().collect();
    Ok(mixed_volume_scaled(Exec::Sequential, &refs)? / u.coords()[k].abs())
}

/// Value of one term of an adelic pairing with its certified distance to the limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairReport {
    pub value: String,
    pub value_f64: f64,
    pub certified_error: String,
    pub depth_used: usize,
}

/// Per-term values of `(E_i . L_1 ... L_{n-1})` and their error bounds
/// `eps_i (Z . L_1 ... L_{n-1})`, with `eps_i` converted to `Z`.
pub fn pair_terms(a: &AdelicToricDivisor, ls: &[NefToricDivisor], z: &BoundaryDatum) -> Result<Vec<(Rat, Rat)>> {
    pair_terms_with(Exec::default(), a, ls, z, 0..a.len())
}

fn pair_terms_with(
    exec: Exec,
    a: &AdelicToricDivisor,
    ls: &[NefToricDivisor],
    z: &BoundaryDatum,
    range: std::ops::Range<usize>,
) -> Result<Vec<(Rat, Rat)>> {
    let zl = model_pairing_with(exec, z.sf(), ls)?;
    let factor = norm_conversion(a.boundary(), z)?;
    range
        .map(|i| {
            let value = model_pairing_with(exec, &a.terms()[i], ls)?;
            Ok((value, &a.epsilons()[i] * &factor * &zl))
        })
        .collect()
}

/// The constant `k` with `||.||_Z <= k ||.||_W`.
fn norm_conversion(w: &BoundaryDatum, z: &BoundaryDatum) -> Result<Rat> {
    if w == z {
        return Ok(Rat::one());
    }
    conical::sup_ratio(w.sf(), z.sf())?
        .value
        .ok_or_else(|| Error::Invalid("boundary divisors have different supports".into()))
}

/// Pairs the deepest materialized term with nef `L_1 .. L_{n-1}`. The
/// sequence is trusted to be Cauchy; run the Cauchy check first for
/// sequences of unknown origin.
pub fn pair_adelic(a: &AdelicToricDivisor, ls: &[NefToricDivisor], z: &BoundaryDatum, tol: &Rat) -> Result<PairReport> {
    pair_adelic_with(Exec::default(), a, ls, z, tol)
}

pub fn pair_adelic_with(
    exec: Exec,
    a: &AdelicToricDivisor,
    ls: &[NefToricDivisor],
    z: &BoundaryDatum,
    tol: &Rat,
) -> Result<PairReport> {
    let last = a.len() - 1;
    let (value, bound) = pair_terms_with(exec, a, ls, z, last..last + 1)?.remove(0);
    if &bound > tol {
        return Err(Error::ToleranceUnreachable {
            required: rational::format_rat(tol),
            achieved: rational::format_rat(&bound),
        });
    }
    Ok(PairReport {
        value_f64: rational::to_f64(&value),
        value: rational::format_rat(&value),
        certified_error: rational::format_rat(&bound),
        depth_used: last,
    })
}

/// The Monge-Ampere pairing of a boundary function `h = g_E / g_Z`, given by
/// its values on the rays of a fan refining the fan of `Z`. The model divisor
/// `E` takes the value `h(v) SF_Z(v)` on each ray `v`.
pub fn ma_integral(h: &PLConical, ls: &[NefToricDivisor], z: &BoundaryDatum) -> Result<Rat> {
    if !h.fan().refines(z.divisor().fan()) {
        return Err(Error::NotPiecewiseLinear);
    }
    let zv = z.sf().values_on(h.fan())?;
    let values = h.ray_values().iter().zip(&zv).map(|(a, b)| a * b).collect();
    let e = PLConical::new(h.fan().clone(), values)?;
    model_pairing(&e, ls)
}
