use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::LatticeVector;
use crate::error::{Error, Result};
use crate::linalg::{self, combinations, Matrix};
use crate::rational::Rat;

/// Nonnegative span of finitely many primitive integer rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalCone {
    dim: usize,
    rays: Vec<LatticeVector>,
}

/// A facet of a cone: inward normal lying in the cone's linear span, plus the
/// indices of the rays on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    pub normal: Vec<Rat>,
    pub rays: Vec<usize>,
}

/// Inequality description: `e . x = 0` for every equality, `n . x >= 0` for
/// every facet normal.
#[derive(Clone, Debug, Default)]
pub struct HRep {
    pub equalities: Matrix,
    pub facets: Vec<Facet>,
}

impl HRep {
    pub fn contains(&self, a: &[Rat]) -> bool {
        self.equalities
            .iter()
            .all(|e| linalg::dot(e, a).is_zero())
            && self
                .facets
                .iter()
                .all(|f| !linalg::dot(&f.normal, a).is_negative())
    }

    pub(crate) fn inequalities(&self) -> impl Iterator<Item = &Vec<Rat>> {
        self.facets.iter().map(|f| &f.normal)
    }
}

impl RationalCone {
    /// Rays are normalized to primitive vectors; duplicates are dropped.
    pub fn new(dim: usize, rays: Vec<LatticeVector>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(rays.len());
        for (index, ray) in rays.iter().enumerate() {
            ray.check_dim(dim)?;
            let p = ray.primitive().ok_or(Error::NonPrimitiveRay { index })?;
            if seen.insert(p.clone()) {
                normalized.push(p);
            }
        }
        Ok(Self {
            dim,
            rays: normalized,
        })
    }

    pub(crate) fn from_primitive(dim: usize, rays: Vec<LatticeVector>) -> Self {
        Self { dim, rays }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    fn ray_rows(&self) -> Matrix {
        self.rays.iter().map(|r| r.coords().to_vec()).collect()
    }

    /// Dimension of the linear span.
    pub fn dimension(&self) -> usize {
        linalg::rank(&self.ray_rows(), self.dim)
    }

    pub fn is_simplicial(&self) -> bool {
        self.dimension() == self.rays.len()
    }

    /// Membership by triangulation: `a` lies in the cone iff it is a
    /// nonnegative combination of some linearly independent subset of rays
    /// spanning the cone. Points on faces count as contained.
    pub fn contains(&self, a: &LatticeVector) -> bool {
        if a.dim() != self.dim {
            return false;
        }
        if a.is_zero() {
            return true;
        }
        let rank = self.dimension();
        if rank == 0 {
            return false;
        }
        let columns = |idx: &[usize]| -> Matrix {
            (0..self.dim)
                .map(|i| idx.iter().map(|&j| self.rays[j].coords()[i].clone()).collect())
                .collect()
        };
        for subset in combinations(self.rays.len(), rank) {
            let system = columns(&subset);
            if linalg::rank(&linalg::transpose(&system), self.dim) < rank {
                continue;
            }
            if let Some(lambda) = linalg::solve_any(&system, a.coords(), rank) {
                if lambda.iter().all(|l| !l.is_negative()) {
                    return true;
                }
            }
        }
        false
    }

    /// Equalities cutting out the span and the facets within it.
    pub fn h_rep(&self) -> HRep {
        let rows = self.ray_rows();
        let equalities = linalg::kernel(&rows, self.dim);
        let rank = self.dim - equalities.len();
        let mut facets: Vec<Facet> = Vec::new();
        if rank == 0 {
            return HRep {
                equalities,
                facets,
            };
        }
        for subset in combinations(self.rays.len(), rank - 1) {
            let mut system: Matrix = subset.iter().map(|&i| rows[i].clone()).collect();
            system.extend(equalities.iter().cloned());
            let kernel = linalg::kernel(&system, self.dim);
            if kernel.len() != 1 {
                continue;
            }
            let values: Vec<Rat> = rows.iter().map(|r| linalg::dot(r, &kernel[0])).collect();
            let has_pos = values.iter().any(Signed::is_positive);
            let has_neg = values.iter().any(Signed::is_negative);
            let normal = match (has_pos, has_neg) {
                (true, false) => kernel[0].clone(),
                (false, true) => kernel[0].iter().map(|c| -c).collect(),
                _ => continue,
            };
            let normal = crate::rational::primitive_integer(&normal)
                .expect("nonzero kernel vector")
                .into_iter()
                .map(Rat::from_integer)
                .collect::<Vec<_>>();
            if facets.iter().any(|f| f.normal == normal) {
                continue;
            }
            let on_facet = values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_zero())
                .map(|(i, _)| i)
                .collect();
            facets.push(Facet {
                normal,
                rays: on_facet,
            });
        }
        HRep {
            equalities,
            facets,
        }
    }

    pub fn is_pointed(&self) -> bool {
        let h = self.h_rep();
        let mut rows = h.equalities.clone();
        rows.extend(h.inequalities().cloned());
        linalg::rank(&rows, self.dim) == self.dim
    }

    pub fn intersection(&self, other: &RationalCone) -> RationalCone {
        let (a, b) = (self.h_rep(), other.h_rep());
        intersect_hreps(self.dim, &a, &b)
    }

    /// Pulling triangulation from the first ray, without new rays. Returns
    /// index sets into [`Self::rays`].
    pub fn triangulate(&self) -> Vec<Vec<usize>> {
        let rank = self.dimension();
        if rank == self.rays.len() {
            return vec![(0..self.rays.len()).collect()];
        }
        let mut pieces = Vec::new();
        for facet in self.h_rep().facets {
            if facet.rays.contains(&0) {
                continue;
            }
            let sub = RationalCone::from_primitive(
                self.dim,
                facet.rays.iter().map(|&i| self.rays[i].clone()).collect(),
            );
            for piece in sub.triangulate() {
                let mut simplex = vec![0];
                simplex.extend(piece.iter().map(|&k| facet.rays[k]));
                pieces.push(simplex);
            }
        }
        pieces
    }
}

/// Extreme rays of `{x : E x = 0, H x >= 0}` for a pointed cone.
pub(crate) fn extreme_rays(dim: usize, equalities: &[Vec<Rat>], inequalities: &[Vec<Rat>]) -> Vec<LatticeVector> {
    let (reduced, pivots) = linalg::rref(equalities, dim);
    let basis: Matrix = reduced.into_iter().take(pivots.len()).collect();
    let e = basis.len();
    if e >= dim {
        return Vec::new();
    }
    let need = dim - 1 - e;
    let mut found: Vec<LatticeVector> = Vec::new();
    for subset in combinations(inequalities.len(), need) {
        let mut system = basis.clone();
        system.extend(subset.iter().map(|&i| inequalities[i].clone()));
        let kernel = linalg::kernel(&system, dim);
        if kernel.len() != 1 {
            continue;
        }
        let k = &kernel[0];
        let values: Vec<Rat> = inequalities.iter().map(|h| linalg::dot(h, k)).collect();
        let sign = if values.iter().all(|v| !v.is_negative()) {
            Rat::from_integer(1.into())
        } else if values.iter().all(|v| !v.is_positive()) {
            Rat::from_integer((-1).into())
        } else {
            continue;
        };
        let ray = LatticeVector::new(k.clone())
            .scaled(&sign)
            .primitive()
            .expect("kernel vector is nonzero");
        if !found.contains(&ray) {
            found.push(ray);
        }
    }
    found
}

pub(crate) fn intersect_hreps(dim: usize, a: &HRep, b: &HRep) -> RationalCone {
    let mut eqs = a.equalities.clone();
    eqs.extend(b.equalities.iter().cloned());
    let ineqs: Vec<Vec<Rat>> = a.inequalities().chain(b.inequalities()).cloned().collect();
    RationalCone::from_primitive(dim, extreme_rays(dim, &eqs, &ineqs))
}

/// Whether `a` is a nonnegative rational combination of the cone's rays.
pub fn cone_contains(cone: &RationalCone, a: &LatticeVector) -> bool {
    cone.contains(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(rays: &[&[i64]]) -> RationalCone {
        let dim = rays[0].len();
        RationalCone::new(dim, rays.iter().map(|r| LatticeVector::from_ints(r)).collect()).unwrap()
    }

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector::from_ints(c)
    }

    #[test]
    fn membership_examples() {
        let quadrant = cone(&[&[1, 0], &[0, 1]]);
        assert!(cone_contains(&quadrant, &v(&[2, 3])));
        assert!(!cone_contains(&quadrant, &v(&[-1, 0])));
        assert!(cone_contains(&quadrant, &v(&[0, 0])));
        assert!(cone_contains(&quadrant, &v(&[0, 5])));
    }

    #[test]
    fn membership_in_non_simplicial_cone_matches_hrep() {
        let square = cone(&[&[1, 0, 1], &[0, 1, 1], &[-1, 0, 1], &[0, -1, 1]]);
        let h = square.h_rep();
        assert_eq!(h.facets.len(), 4);
        assert!(h.equalities.is_empty());
        for x in -3..=3 {
            for y in -3..=3 {
                for z in -1..=3 {
                    let p = v(&[x, y, z]);
                    assert_eq!(square.contains(&p), h.contains(p.coords()), "{p:?}");
                }
            }
        }
        assert!(!square.is_simplicial());
        assert!(square.is_pointed());
    }

    #[test]
    fn rays_are_normalized() {
        let c = RationalCone::new(2, vec![v(&[2, 0]), v(&[1, 0]), v(&[3, 3])]).unwrap();
        assert_eq!(c.rays(), &[v(&[1, 0]), v(&[1, 1])]);
        assert!(RationalCone::new(2, vec![v(&[0, 0])]).is_err());
    }

    #[test]
    fn lower_dimensional_cone_hrep() {
        let ray = cone(&[&[1, 1, 0]]);
        let h = ray.h_rep();
        assert_eq!(h.equalities.len(), 2);
        assert_eq!(h.facets.len(), 1);
        assert!(h.contains(v(&[2, 2, 0]).coords()));
        assert!(!h.contains(v(&[-2, -2, 0]).coords()));
        assert!(!h.contains(v(&[1, 2, 0]).coords()));
    }

    #[test]
    fn intersection_of_overlapping_quadrants() {
        let a = cone(&[&[1, 0], &[0, 1]]);
        let b = cone(&[&[1, 1], &[-1, 0]]);
        let c = a.intersection(&b);
        let mut rays = c.rays().to_vec();
        rays.sort();
        assert_eq!(rays, vec![v(&[0, 1]), v(&[1, 1])]);
        let d = cone(&[&[-1, 0], &[0, -1]]);
        assert!(a.intersection(&d).rays().is_empty());
    }

    #[test]
    fn non_pointed_cone_detected() {
        let half = cone(&[&[1, 0], &[-1, 0], &[0, 1]]);
        assert!(!half.is_pointed());
    }

    #[test]
    fn pulling_triangulation_of_square_cone() {
        let square = cone(&[&[1, 0, 1], &[0, 1, 1], &[-1, 0, 1], &[0, -1, 1]]);
        let pieces = square.triangulate();
        assert_eq!(pieces.len(), 2);
        let total: Rat = pieces
            .iter()
            .map(|p| {
                let m: Matrix = p.iter().map(|&i| square.rays()[i].coords().to_vec()).collect();
                linalg::determinant(&m).abs()
            })
            .sum();
        assert_eq!(total, Rat::from_integer(4.into()));
    }
}
