use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::cone::{extreme_rays, intersect_hreps, HRep, RationalCone};
use super::LatticeVector;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{self, Matrix};
use crate::rational::{self, Rat};

/// A finite collection of strictly convex rational cones meeting in common faces.
///
/// Maximal cones are stored as sorted sets of ray indices. Derived geometry
/// (inequality descriptions, angular bounding caps) is computed once on demand.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "FanJson", into = "FanJson")]
pub struct Fan {
    dim: usize,
    rays: Vec<LatticeVector>,
    cones: Vec<Vec<usize>>,
    complete: bool,
    geometry: OnceLock<Vec<ConeGeometry>>,
}

#[derive(Clone, Debug)]
pub(crate) struct ConeGeometry {
    pub(crate) hrep: HRep,
    pub(crate) rank: usize,
    center: Vec<f64>,
    radius: f64,
}

impl PartialEq for Fan {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.rays == other.rays && self.cones == other.cones
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FanJson {
    dim: usize,
    #[serde(with = "rational::serde_rat_matrix")]
    rays: Vec<Vec<Rat>>,
    cones: Vec<Vec<usize>>,
    #[serde(default)]
    complete: bool,
}

impl TryFrom<FanJson> for Fan {
    type Error = Error;
    fn try_from(j: FanJson) -> Result<Fan> {
        Fan::new(
            j.dim,
            j.rays.into_iter().map(LatticeVector::new).collect(),
            j.cones,
            j.complete,
        )
    }
}

impl From<Fan> for FanJson {
    fn from(f: Fan) -> FanJson {
        FanJson {
            dim: f.dim,
            rays: f.rays.into_iter().map(LatticeVector::into_coords).collect(),
            cones: f.cones,
            complete: f.complete,
        }
    }
}

/// Result of [`Fan::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct FanValidation {
    pub valid: bool,
    pub complete: bool,
    pub simplicial: bool,
    pub issues: Vec<String>,
}

impl Fan {
    /// Checks ray and index invariants. Pairwise face-intersection is only
    /// checked by [`Fan::validate`].
    pub fn new(dim: usize, rays: Vec<LatticeVector>, cones: Vec<Vec<usize>>, complete: bool) -> Result<Self> {
        for (index, ray) in rays.iter().enumerate() {
            ray.check_dim(dim)?;
            if ray.is_zero() || !ray.is_primitive() {
                return Err(Error::NonPrimitiveRay { index });
            }
        }
        let mut sorted = rays.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidFan("duplicate rays".into()));
        }
        let mut normalized = Vec::with_capacity(cones.len());
        for cone in cones {
            let mut c = cone;
            c.sort_unstable();
            c.dedup();
            if c.is_empty() {
                return Err(Error::InvalidFan("empty cone".into()));
            }
            if let Some(&bad) = c.iter().find(|&&i| i >= rays.len()) {
                return Err(Error::InvalidFan(format!("ray index {bad} out of range")));
            }
            normalized.push(c);
        }
        Ok(Self {
            dim,
            rays,
            cones: normalized,
            complete,
            geometry: OnceLock::new(),
        })
    }

    pub fn from_ints(dim: usize, rays: &[&[i64]], cones: &[&[usize]], complete: bool) -> Result<Self> {
        Self::new(
            dim,
            rays.iter().map(|r| LatticeVector::from_ints(r)).collect(),
            cones.iter().map(|c| c.to_vec()).collect(),
            complete,
        )
    }

    pub fn projective_line() -> Self {
        Self::from_ints(1, &[&[1], &[-1]], &[&[0], &[1]], true).expect("static fan")
    }

    /// Rays `e_1, ..., e_n, -(e_1 + ... + e_n)`.
    pub fn projective_space(n: usize) -> Self {
        let mut rays: Vec<LatticeVector> = (0..n)
            .map(|i| {
                let mut c = vec![0i64; n];
                c[i] = 1;
                LatticeVector::from_ints(&c)
            })
            .collect();
        rays.push(LatticeVector::from_ints(&vec![-1i64; n]));
        let cones = (0..=n)
            .map(|skip| (0..=n).filter(|&i| i != skip).collect())
            .collect();
        Self::new(n, rays, cones, true).expect("static fan")
    }

    pub fn projective_plane() -> Self {
        Self::projective_space(2)
    }

    /// Rays `e_1, ..., e_n, -e_1, ..., -e_n` (fan of `(P^1)^n`).
    pub fn product_of_lines(n: usize) -> Self {
        let mut rays = Vec::with_capacity(2 * n);
        for sign in [1i64, -1] {
            for i in 0..n {
                let mut c = vec![0i64; n];
                c[i] = sign;
                rays.push(LatticeVector::from_ints(&c));
            }
        }
        let cones = (0..(1usize << n))
            .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { i + n } else { i }).collect())
            .collect();
        Self::new(n, rays, cones, true).expect("static fan")
    }

    /// The single positive orthant cone.
    pub fn affine_space(n: usize) -> Self {
        let rays = (0..n)
            .map(|i| {
                let mut c = vec![0i64; n];
                c[i] = 1;
                LatticeVector::from_ints(&c)
            })
            .collect();
        Self::new(n, rays, vec![(0..n).collect()], false).expect("static fan")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn ray(&self, i: usize) -> &LatticeVector {
        &self.rays[i]
    }

    pub fn cones(&self) -> &[Vec<usize>] {
        &self.cones
    }

    pub fn complete_flag(&self) -> bool {
        self.complete
    }

    pub fn cone(&self, i: usize) -> RationalCone {
        RationalCone::from_primitive(
            self.dim,
            self.cones[i].iter().map(|&r| self.rays[r].clone()).collect(),
        )
    }

    pub(crate) fn geometry(&self) -> &[ConeGeometry] {
        self.geometry.get_or_init(|| {
            Exec::default().map_range(self.cones.len(), |i| {
                let cone = self.cone(i);
                let hrep = cone.h_rep();
                let rank = self.dim - hrep.equalities.len();
                let (center, radius) = angular_cap(cone.rays());
                ConeGeometry {
                    hrep,
                    rank,
                    center,
                    radius,
                }
            })
        })
    }

    /// Dimension of the largest cone.
    pub fn pure_dim(&self) -> usize {
        self.geometry().iter().map(|g| g.rank).max().unwrap_or(0)
    }

    pub fn is_simplicial(&self) -> bool {
        self.cones
            .iter()
            .zip(self.geometry())
            .all(|(c, g)| c.len() == g.rank)
    }

    /// Every maximal cone is simplicial and full-dimensional.
    pub fn is_full_simplicial(&self) -> bool {
        self.cones
            .iter()
            .zip(self.geometry())
            .all(|(c, g)| c.len() == self.dim && g.rank == self.dim)
    }

    /// Exact completeness certificate: every maximal cone is full-dimensional
    /// and each of its facets is shared with exactly one other cone lying on
    /// the opposite side.
    pub fn is_complete(&self) -> bool {
        if self.dim == 0 {
            return true;
        }
        if self.cones.is_empty() {
            return false;
        }
        let geometry = self.geometry();
        if geometry.iter().any(|g| g.rank != self.dim) {
            return false;
        }
        let mut incidences: HashMap<Vec<usize>, Vec<&Vec<Rat>>> = HashMap::new();
        for (cone, g) in self.cones.iter().zip(geometry) {
            for facet in &g.hrep.facets {
                let key: Vec<usize> = facet.rays.iter().map(|&i| cone[i]).collect();
                incidences.entry(key).or_default().push(&facet.normal);
            }
        }
        incidences.values().all(|normals| {
            normals.len() == 2 && normals[0].iter().zip(normals[1]).all(|(a, b)| *a == -b)
        })
    }

    /// Index of some maximal cone containing `a`.
    pub fn locate(&self, a: &LatticeVector) -> Option<usize> {
        if a.dim() != self.dim {
            return None;
        }
        let af = a.to_f64();
        let norm = af.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.geometry().iter().position(|g| {
            (norm == 0.0 || g.cap_may_contain(&af, norm)) && g.hrep.contains(a.coords())
        })
    }

    pub fn in_support(&self, a: &LatticeVector) -> bool {
        self.locate(a).is_some()
    }

    /// For each cone of `self`, a cone of `coarser` containing it, when `self`
    /// refines `coarser` cone by cone.
    pub fn refinement_map(&self, coarser: &Fan) -> Option<Vec<usize>> {
        if self.dim != coarser.dim {
            return None;
        }
        if self == coarser {
            return Some((0..self.cones.len()).collect());
        }
        let fine = self.geometry();
        let coarse = coarser.geometry();
        let found: Vec<Option<usize>> = Exec::default().map_range(self.cones.len(), |i| {
            let rays: Vec<&LatticeVector> = self.cones[i].iter().map(|&r| &self.rays[r]).collect();
            coarse.iter().position(|g| {
                caps_overlap(&fine[i], g) && rays.iter().all(|r| g.hrep.contains(r.coords()))
            })
        });
        found.into_iter().collect()
    }

    pub fn refines(&self, coarser: &Fan) -> bool {
        self.refinement_map(coarser).is_some()
    }

    /// Exact structural validation.
    pub fn validate(&self) -> FanValidation {
        let mut issues = Vec::new();
        let geometry = self.geometry();
        for (i, cone) in self.cones.iter().enumerate() {
            let c = self.cone(i);
            if !c.is_pointed() {
                issues.push(format!("cone {i} is not strictly convex"));
                continue;
            }
            for (k, &r) in cone.iter().enumerate() {
                let others: Vec<LatticeVector> = cone
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &s)| self.rays[s].clone())
                    .collect();
                if !others.is_empty()
                    && RationalCone::from_primitive(self.dim, others).contains(&self.rays[r])
                {
                    issues.push(format!("ray {r} is not extreme in cone {i}"));
                }
            }
        }
        if issues.is_empty() {
            let pairs: Vec<(usize, usize)> = (0..self.cones.len())
                .flat_map(|i| (i + 1..self.cones.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| caps_overlap(&geometry[i], &geometry[j]))
                .collect();
            let bad: Vec<Option<String>> = Exec::default().map(&pairs, |&(i, j)| {
                if self.meets_in_common_face(i, j) {
                    None
                } else {
                    Some(format!("cones {i} and {j} do not meet in a common face"))
                }
            });
            issues.extend(bad.into_iter().flatten());
        }
        let complete = issues.is_empty() && self.is_complete();
        if self.complete && !complete && issues.is_empty() {
            issues.push("fan is flagged complete but its support is not all of N_R".into());
        }
        FanValidation {
            valid: issues.is_empty(),
            complete,
            simplicial: self.is_simplicial(),
            issues,
        }
    }

    fn meets_in_common_face(&self, i: usize, j: usize) -> bool {
        let geometry = self.geometry();
        let inter = intersect_hreps(self.dim, &geometry[i].hrep, &geometry[j].hrep);
        let shared: Vec<usize> = self.cones[i]
            .iter()
            .filter(|r| self.cones[j].contains(r))
            .copied()
            .collect();
        let mut got: Vec<LatticeVector> = inter.rays().to_vec();
        let mut want: Vec<LatticeVector> = shared.iter().map(|&r| self.rays[r].clone()).collect();
        got.sort();
        want.sort();
        if got != want {
            return false;
        }
        self.is_face(i, &shared) && self.is_face(j, &shared)
    }

    fn is_face(&self, cone: usize, subset: &[usize]) -> bool {
        if subset.is_empty() {
            return true;
        }
        let rays = &self.cones[cone];
        let mut tight: Vec<usize> = rays.clone();
        for facet in &self.geometry()[cone].hrep.facets {
            let facet_rays: Vec<usize> = facet.rays.iter().map(|&k| rays[k]).collect();
            if subset.iter().all(|s| facet_rays.contains(s)) {
                tight.retain(|r| facet_rays.contains(r));
            }
        }
        let mut s = subset.to_vec();
        s.sort_unstable();
        tight == s
    }

    /// Barycentric subdivision of a simplicial fan. New rays sit at the
    /// barycenters of faces taken on the L1 cross-section, so cones shrink
    /// geometrically under iteration.
    pub fn barycentric_subdivision(&self) -> Result<Fan> {
        if let Some(bad) = (0..self.cones.len()).find(|&i| self.cones[i].len() != self.geometry()[i].rank) {
            return Err(Error::NotSimplicial { cone: bad });
        }
        let mut builder = FanBuilder::new(self.dim, self.rays.clone());
        let mut face_rays: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (i, _) in self.rays.iter().enumerate() {
            face_rays.insert(vec![i], i);
        }
        let mut cones = Vec::new();
        for cone in &self.cones {
            for perm in permutations(cone) {
                let mut chain = Vec::with_capacity(perm.len());
                for k in 1..=perm.len() {
                    let mut face: Vec<usize> = perm[..k].to_vec();
                    face.sort_unstable();
                    let idx = match face_rays.get(&face) {
                        Some(&idx) => idx,
                        None => {
                            let b = l1_barycenter(face.iter().map(|&r| &self.rays[r]));
                            let idx = builder.ray_index(b);
                            face_rays.insert(face, idx);
                            idx
                        }
                    };
                    chain.push(idx);
                }
                cones.push(chain);
            }
        }
        builder.finish(cones, self.complete)
    }
}

impl ConeGeometry {
    fn cap_may_contain(&self, x: &[f64], norm: f64) -> bool {
        let cos = self.center.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / norm;
        cos.clamp(-1.0, 1.0).acos() <= self.radius + 1e-9
    }
}

/// Smallest-known cap (center, angular radius) around the rays of a cone.
fn angular_cap(rays: &[LatticeVector]) -> (Vec<f64>, f64) {
    if rays.is_empty() {
        return (Vec::new(), 0.0);
    }
    let units: Vec<Vec<f64>> = rays
        .iter()
        .map(|r| {
            let f = r.to_f64();
            let n = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            f.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let dim = units[0].len();
    let mut center = vec![0.0; dim];
    for u in &units {
        for (c, x) in center.iter_mut().zip(u) {
            *c += x;
        }
    }
    let n = center.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-12 {
        return (units[0].clone(), std::f64::consts::PI);
    }
    for c in center.iter_mut() {
        *c /= n;
    }
    let radius = units
        .iter()
        .map(|u| u.iter().zip(&center).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0).acos())
        .fold(0.0, f64::max);
    (center, radius)
}

fn caps_overlap(a: &ConeGeometry, b: &ConeGeometry) -> bool {
    if a.center.is_empty() || b.center.is_empty() {
        return true;
    }
    let cos = a.center.iter().zip(&b.center).map(|(x, y)| x * y).sum::<f64>();
    cos.clamp(-1.0, 1.0).acos() <= a.radius + b.radius + 1e-9
}

pub(crate) fn l1_barycenter<'a>(rays: impl Iterator<Item = &'a LatticeVector>) -> LatticeVector {
    let mut sum: Option<LatticeVector> = None;
    for r in rays {
        let term = r.scaled(&(Rat::from_integer(1.into()) / r.l1_norm()));
        sum = Some(match sum {
            None => term,
            Some(s) => &s + &term,
        });
    }
    sum.expect("nonempty face")
        .primitive()
        .expect("barycenter of a pointed cone is nonzero")
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let rest: Vec<usize> = items
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &x)| x)
            .collect();
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

pub(crate) struct FanBuilder {
    dim: usize,
    rays: Vec<LatticeVector>,
    index: HashMap<LatticeVector, usize>,
}

impl FanBuilder {
    pub(crate) fn new(dim: usize, rays: Vec<LatticeVector>) -> Self {
        let index = rays.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        Self { dim, rays, index }
    }

    pub(crate) fn ray_index(&mut self, ray: LatticeVector) -> usize {
        if let Some(&i) = self.index.get(&ray) {
            return i;
        }
        let i = self.rays.len();
        self.index.insert(ray.clone(), i);
        self.rays.push(ray);
        i
    }

    pub(crate) fn ray(&self, i: usize) -> &LatticeVector {
        &self.rays[i]
    }

    /// Drops unused rays and re-indexes.
    pub(crate) fn finish(self, cones: Vec<Vec<usize>>, complete: bool) -> Result<Fan> {
        let mut used = vec![false; self.rays.len()];
        for c in &cones {
            for &r in c {
                used[r] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.rays.len()];
        let mut rays = Vec::new();
        for (i, ray) in self.rays.into_iter().enumerate() {
            if used[i] {
                remap[i] = rays.len();
                rays.push(ray);
            }
        }
        let cones = cones
            .into_iter()
            .map(|c| c.into_iter().map(|r| remap[r]).collect())
            .collect();
        Fan::new(self.dim, rays, cones, complete)
    }
}

/// Exact support comparison.
fn same_support(f1: &Fan, f2: &Fan) -> Result<bool> {
    let (c1, c2) = (f1.is_complete(), f2.is_complete());
    if c1 || c2 {
        return Ok(c1 && c2);
    }
    let s1 = simplicialize(f1)?;
    let s2 = simplicialize(f2)?;
    if s1.pure_dim() != s2.pure_dim() {
        return Ok(false);
    }
    if s1.pure_dim() < s1.dim() {
        // Lower-dimensional supports: compare ray and barycenter membership.
        let probes = |f: &Fan| -> Vec<LatticeVector> {
            let mut p: Vec<LatticeVector> = f.rays.clone();
            p.extend(f.cones.iter().map(|c| l1_barycenter(c.iter().map(|&r| &f.rays[r]))));
            p
        };
        return Ok(probes(&s1).iter().all(|p| s2.in_support(p)) && probes(&s2).iter().all(|p| s1.in_support(p)));
    }
    Ok(covered_by(&s1, &s2) && covered_by(&s2, &s1))
}

/// Every full-dimensional simplicial cone of `a` is covered by the cones of `b`,
/// certified by comparing normalized volumes of truncated cones.
fn covered_by(a: &Fan, b: &Fan) -> bool {
    let n = a.dim;
    let ga = a.geometry();
    let gb = b.geometry();
    let results: Vec<bool> = Exec::default().map_range(a.cones.len(), |i| {
        let rays: Matrix = a.cones[i].iter().map(|&r| a.rays[r].coords().to_vec()).collect();
        let Some(inv) = linalg::inverse(&linalg::transpose(&rays)) else {
            return false;
        };
        // h(x) = sum of barycentric coordinates, equal to 1 on every ray of the cone.
        let h: Vec<Rat> = (0..n)
            .map(|j| inv.iter().fold(Rat::zero(), |acc, row| acc + &row[j]))
            .collect();
        let mut covered = Rat::zero();
        for (j, g) in gb.iter().enumerate() {
            if !caps_overlap(&ga[i], g) {
                continue;
            }
            let piece = intersect_hreps(n, &ga[i].hrep, &gb[j].hrep);
            if piece.dimension() < n {
                continue;
            }
            for simplex in piece.triangulate() {
                let scaled: Matrix = simplex
                    .iter()
                    .map(|&k| {
                        let w = piece.rays()[k].coords();
                        let hw = linalg::dot(&h, w);
                        w.iter().map(|c| c / &hw).collect()
                    })
                    .collect();
                covered += linalg::determinant(&scaled).abs();
            }
        }
        covered == whole_normalized(&rays, &h)
    });
    results.into_iter().all(|x| x)
}

fn whole_normalized(rays: &Matrix, h: &[Rat]) -> Rat {
    let scaled: Matrix = rays
        .iter()
        .map(|w| {
            let hw = linalg::dot(h, w);
            w.iter().map(|c| c / &hw).collect()
        })
        .collect();
    linalg::determinant(&scaled).abs()
}

/// The fan whose maximal cones are the full-dimensional intersections of a
/// cone of `f1` with a cone of `f2`. Both fans must have the same support.
pub fn common_refinement(f1: &Fan, f2: &Fan) -> Result<Fan> {
    if f1.dim != f2.dim {
        return Err(Error::DimensionMismatch {
            expected: f1.dim,
            found: f2.dim,
        });
    }
    if f1 == f2 {
        return Ok(f1.clone());
    }
    if !same_support(f1, f2)? {
        return Err(Error::SupportMismatch);
    }
    let complete = f1.complete || f2.complete;
    if f2.refines(f1) {
        return Ok(Fan { complete, ..f2.clone() });
    }
    if f1.refines(f2) {
        return Ok(Fan { complete, ..f1.clone() });
    }
    let d = f1.pure_dim();
    let (g1, g2) = (f1.geometry(), f2.geometry());
    let pairs: Vec<(usize, usize)> = (0..f1.cones.len())
        .flat_map(|i| (0..f2.cones.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| caps_overlap(&g1[i], &g2[j]))
        .collect();
    let pieces: Vec<Option<Vec<LatticeVector>>> = Exec::default().map(&pairs, |&(i, j)| {
        let mut eqs = g1[i].hrep.equalities.clone();
        eqs.extend(g2[j].hrep.equalities.iter().cloned());
        let ineqs: Vec<Vec<Rat>> = g1[i]
            .hrep
            .inequalities()
            .chain(g2[j].hrep.inequalities())
            .cloned()
            .collect();
        let rays = extreme_rays(f1.dim, &eqs, &ineqs);
        let rows: Matrix = rays.iter().map(|r| r.coords().to_vec()).collect();
        (linalg::rank(&rows, f1.dim) == d).then_some(rays)
    });
    let mut builder = FanBuilder::new(f1.dim, f1.rays.clone());
    for r in &f2.rays {
        builder.ray_index(r.clone());
    }
    let cones: Vec<Vec<usize>> = pieces
        .into_iter()
        .flatten()
        .map(|rays| rays.into_iter().map(|r| builder.ray_index(r)).collect())
        .collect();
    builder.finish(cones, complete)
}

/// Star-subdivides every non-simplicial cone at the barycenter of its L1
/// cross-section, recursing into non-simplicial faces. Simplicial cones and
/// all existing rays are kept.
pub fn simplicialize(f: &Fan) -> Result<Fan> {
    if f.is_simplicial() {
        return Ok(f.clone());
    }
    let mut builder = FanBuilder::new(f.dim, f.rays.clone());
    let mut cones = Vec::new();
    for cone in &f.cones {
        cones.extend(star_subdivide(&mut builder, cone.clone()));
    }
    builder.finish(cones, f.complete)
}

pub(crate) fn star_subdivide(builder: &mut FanBuilder, cone: Vec<usize>) -> Vec<Vec<usize>> {
    let rc = RationalCone::from_primitive(builder.dim, cone.iter().map(|&r| builder.ray(r).clone()).collect());
    if rc.is_simplicial() {
        return vec![cone];
    }
    let b = l1_barycenter(rc.rays().iter());
    let b_idx = builder.ray_index(b);
    let mut out = Vec::new();
    for facet in rc.h_rep().facets {
        let facet_rays: Vec<usize> = facet.rays.iter().map(|&k| cone[k]).collect();
        for mut piece in star_subdivide(builder, facet_rays) {
            piece.push(b_idx);
            out.push(piece);
        }
    }
    out
}

/// Exact completeness test, see [`Fan::is_complete`].
pub fn is_complete(f: &Fan) -> bool {
    f.is_complete()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted_cones(f: &Fan) -> Vec<Vec<LatticeVector>> {
        let mut cones: Vec<Vec<LatticeVector>> = f
            .cones()
            .iter()
            .map(|c| {
                let mut rays: Vec<LatticeVector> = c.iter().map(|&r| f.ray(r).clone()).collect();
                rays.sort();
                rays
            })
            .collect();
        cones.sort();
        cones
    }

    #[test]
    fn completeness_examples() {
        assert!(is_complete(&Fan::projective_plane()));
        assert!(!is_complete(&Fan::affine_space(2)));
        assert!(is_complete(&Fan::projective_line()));
        assert!(is_complete(&Fan::product_of_lines(3)));
        assert!(is_complete(&Fan::projective_space(3)));
        assert!(!is_complete(&Fan::affine_space(1)));
    }

    #[test]
    fn validation_accepts_standard_fans() {
        for f in [
            Fan::projective_plane(),
            Fan::product_of_lines(2),
            Fan::projective_space(3),
            Fan::affine_space(2),
        ] {
            let report = f.validate();
            assert!(report.valid, "{:?}", report.issues);
            assert_eq!(report.complete, f.complete_flag());
        }
    }

    #[test]
    fn validation_rejects_overlaps() {
        let f = Fan::from_ints(2, &[&[1, 0], &[0, 1], &[1, 1]], &[&[0, 1], &[0, 2]], false).unwrap();
        assert!(!f.validate().valid);
        let wrong_flag = Fan::from_ints(2, &[&[1, 0], &[0, 1]], &[&[0, 1]], true).unwrap();
        assert!(!wrong_flag.validate().valid);
    }

    #[test]
    fn construction_rejects_bad_rays() {
        assert!(matches!(
            Fan::from_ints(2, &[&[2, 0], &[0, 1]], &[&[0, 1]], false),
            Err(Error::NonPrimitiveRay { index: 0 })
        ));
        assert!(Fan::from_ints(2, &[&[1, 0]], &[&[3]], false).is_err());
    }

    #[test]
    fn refinement_is_idempotent() {
        let p2 = Fan::projective_plane();
        let r = common_refinement(&p2, &p2).unwrap();
        assert_eq!(sorted_cones(&r), sorted_cones(&p2));
        let p1 = Fan::projective_line();
        let r = common_refinement(&p1, &p1).unwrap();
        assert_eq!(r.rays().len(), 2);
    }

    #[test]
    fn refinement_of_two_triangle_fans_has_six_cones() {
        let a = Fan::projective_plane();
        let b = Fan::from_ints(2, &[&[1, 1], &[-1, 0], &[0, -1]], &[&[0, 1], &[1, 2], &[2, 0]], true).unwrap();
        // Brute force: the refinement of two complete 2D fans is cut out by
        // the union of their rays, sorted by angle.
        let mut angles: Vec<f64> = a
            .rays()
            .iter()
            .chain(b.rays())
            .map(|r| {
                let f = r.to_f64();
                f[1].atan2(f[0])
            })
            .collect();
        angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
        angles.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        let r = common_refinement(&a, &b).unwrap();
        assert_eq!(r.cones().len(), angles.len());
        assert_eq!(r.cones().len(), 6);
        assert!(r.validate().valid);
        let r2 = common_refinement(&b, &a).unwrap();
        assert_eq!(sorted_cones(&r), sorted_cones(&r2));
    }

    #[test]
    fn refinement_rejects_support_mismatch() {
        let quadrant = Fan::affine_space(2);
        let half = Fan::from_ints(2, &[&[1, 0], &[0, 1], &[-1, 0]], &[&[0, 1], &[1, 2]], false).unwrap();
        assert!(matches!(common_refinement(&quadrant, &half), Err(Error::SupportMismatch)));
        assert!(matches!(
            common_refinement(&Fan::projective_plane(), &quadrant),
            Err(Error::SupportMismatch)
        ));
        let split = Fan::from_ints(2, &[&[1, 0], &[0, 1], &[1, 1]], &[&[0, 2], &[2, 1]], false).unwrap();
        let r = common_refinement(&quadrant, &split).unwrap();
        assert_eq!(r.cones().len(), 2);
    }

    #[test]
    fn refinement_in_three_dimensions() {
        let a = Fan::projective_space(3);
        let b = Fan::product_of_lines(3);
        let r = common_refinement(&a, &b).unwrap();
        assert!(r.validate().valid);
        assert!(r.is_complete());
        assert!(r.refines(&a) && r.refines(&b));
        let s = simplicialize(&r).unwrap();
        assert!(s.is_full_simplicial());
        assert!(s.is_complete());
    }

    #[test]
    fn square_cone_is_star_subdivided() {
        let f = Fan::from_ints(
            3,
            &[&[1, 0, 1], &[0, 1, 1], &[-1, 0, 1], &[0, -1, 1]],
            &[&[0, 1, 2, 3]],
            false,
        )
        .unwrap();
        let s = simplicialize(&f).unwrap();
        assert_eq!(s.cones().len(), 4);
        assert_eq!(s.rays().len(), 5);
        assert!(s.rays().contains(&LatticeVector::from_ints(&[0, 0, 1])));
        assert!(s.validate().valid);
        // Brute force: the four pieces tile the cone with disjoint interiors, so
        // their doubled cross-section areas at z = 1 sum to twice the square's area.
        let whole = f.cone(0);
        let total: Rat = s
            .cones()
            .iter()
            .map(|c| {
                let m: Matrix = c
                    .iter()
                    .map(|&r| {
                        let w = s.ray(r).coords();
                        let z = w[2].clone();
                        w.iter().map(|x| x / &z).collect()
                    })
                    .collect();
                linalg::determinant(&m).abs()
            })
            .sum();
        assert_eq!(total, Rat::from_integer(4.into()));
        for c in s.cones() {
            for &r in c {
                assert!(whole.contains(s.ray(r)));
            }
        }
    }

    #[test]
    fn simplicial_input_is_unchanged() {
        for f in [Fan::projective_plane(), Fan::product_of_lines(3), Fan::projective_line()] {
            assert_eq!(simplicialize(&f).unwrap(), f);
        }
    }

    #[test]
    fn simplicialize_preserves_support_on_samples() {
        // Cube fan: cones over the six faces of [-1,1]^3, each a square cone.
        let mut rays = Vec::new();
        for x in [-1i64, 1] {
            for y in [-1i64, 1] {
                for z in [-1i64, 1] {
                    rays.push(LatticeVector::from_ints(&[x, y, z]));
                }
            }
        }
        let mut cones = Vec::new();
        for axis in 0..3 {
            for sign in [-1i64, 1] {
                let c: Vec<usize> = rays
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.coords()[axis] == Rat::from_integer(sign.into()))
                    .map(|(i, _)| i)
                    .collect();
                cones.push(c);
            }
        }
        let cube = Fan::new(3, rays, cones, true).unwrap();
        assert!(cube.validate().valid);
        assert!(!cube.is_simplicial());
        let s = simplicialize(&cube).unwrap();
        assert!(s.is_full_simplicial());
        assert_eq!(s.cones().len(), 24);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = LatticeVector::from_ints(&[
                rng.gen_range(-9..=9),
                rng.gen_range(-9..=9),
                rng.gen_range(-9..=9),
            ]);
            assert_eq!(cube.in_support(&p), s.in_support(&p));
        }
    }

    #[test]
    fn barycentric_subdivision_counts() {
        let p2 = Fan::projective_plane();
        let b = p2.barycentric_subdivision().unwrap();
        assert_eq!(b.cones().len(), 6);
        assert!(b.validate().valid);
        assert!(b.refines(&p2));
        let p3 = Fan::projective_space(3);
        let b3 = p3.barycentric_subdivision().unwrap();
        assert_eq!(b3.cones().len(), 24);
        assert!(b3.validate().valid);
        assert!(b3.is_complete());
        // L1 barycenter of (1,0) and (1,1) is (3/2, 1/2) -> (3, 1).
        let q = Fan::from_ints(2, &[&[1, 0], &[1, 1]], &[&[0, 1]], false).unwrap();
        let bq = q.barycentric_subdivision().unwrap();
        assert!(bq.rays().contains(&LatticeVector::from_ints(&[3, 1])));
    }

    #[test]
    fn refinement_map_points_to_containing_cones() {
        let p1p1 = Fan::product_of_lines(2);
        let fine = p1p1.barycentric_subdivision().unwrap().barycentric_subdivision().unwrap();
        let map = fine.refinement_map(&p1p1).unwrap();
        for (i, &j) in map.iter().enumerate() {
            let coarse = p1p1.cone(j);
            for &r in &fine.cones()[i] {
                assert!(coarse.contains(fine.ray(r)));
            }
        }
        assert!(p1p1.refinement_map(&fine).is_none());
    }

    #[test]
    fn json_round_trip() {
        let f = Fan::projective_plane();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"1/1\""));
        let back: Fan = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
