//! Exact convex hulls and volumes in dimension at most three.
//!
//! Points are scaled to a common integer lattice first, so every orientation
//! test is a plain big-integer determinant.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::Rat;

pub(crate) struct Hull {
    /// Extreme points, sorted.
    pub vertices: Vec<Vec<Rat>>,
    /// Volume in the ambient dimension; zero when the hull is flat.
    pub volume: Rat,
}

pub(crate) fn hull(dim: usize, points: &[Vec<Rat>]) -> Result<Hull> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 1 {
        let volume = if dim == 0 && !pts.is_empty() { Rat::one() } else { Rat::zero() };
        return Ok(Hull { vertices: pts, volume });
    }
    let diffs: Vec<Vec<Rat>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let (_, pivots) = linalg::rref(&diffs, dim);
    let k = pivots.len();
    if k > 3 {
        return Err(Error::UnsupportedDimension(k));
    }
    // Projection to the pivot coordinates is injective on the affine hull.
    let projected: Vec<Vec<Rat>> = pts.iter().map(|p| pivots.iter().map(|&c| p[c].clone()).collect()).collect();
    let (ints, scale) = to_integer(&projected);
    let (extreme, content) = match k {
        1 => hull1(&ints),
        2 => hull2(&ints),
        _ => hull3(&ints),
    };
    let volume = if k == dim {
        let factorial: u64 = (1..=k as u64).product();
        Rat::new(content, BigInt::from(factorial) * scale.pow(k as u32))
    } else {
        Rat::zero()
    };
    let mut vertices: Vec<Vec<Rat>> = extreme.into_iter().map(|i| pts[i].clone()).collect();
    vertices.sort();
    Ok(Hull { vertices, volume })
}

fn to_integer(points: &[Vec<Rat>]) -> (Vec<Vec<BigInt>>, BigInt) {
    let mut scale = BigInt::one();
    for x in points.iter().flatten() {
        scale = scale.lcm(x.denom());
    }
    let ints = points
        .iter()
        .map(|p| p.iter().map(|x| (x * &scale).to_integer()).collect())
        .collect();
    (ints, scale)
}

fn sub(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn hull1(pts: &[Vec<BigInt>]) -> (Vec<usize>, BigInt) {
    let lo = (0..pts.len()).min_by(|&i, &j| pts[i][0].cmp(&pts[j][0])).unwrap();
    let hi = (0..pts.len()).max_by(|&i, &j| pts[i][0].cmp(&pts[j][0])).unwrap();
    (vec![lo, hi], &pts[hi][0] - &pts[lo][0])
}

fn cross2(o: &[BigInt], a: &[BigInt], b: &[BigInt]) -> BigInt {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Monotone chain; returns the counterclockwise vertex cycle and twice the area.
fn hull2(pts: &[Vec<BigInt>]) -> (Vec<usize>, BigInt) {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i].cmp(&pts[j]));
    let mut chain: Vec<usize> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = chain.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 { Box::new(order.iter()) } else { Box::new(order.iter().rev()) };
        for &p in iter {
            while chain.len() >= start + 2
                && !cross2(&pts[chain[chain.len() - 2]], &pts[chain[chain.len() - 1]], &pts[p]).is_positive()
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain.pop();
    }
    let n = chain.len();
    let mut area2 = BigInt::zero();
    for i in 0..n {
        let (a, b) = (&pts[chain[i]], &pts[chain[(i + 1) % n]]);
        area2 += &a[0] * &b[1] - &b[0] * &a[1];
    }
    (chain, area2)
}

fn det3(u: &[BigInt], v: &[BigInt], w: &[BigInt]) -> BigInt {
    &u[0] * (&v[1] * &w[2] - &v[2] * &w[1]) - &u[1] * (&v[0] * &w[2] - &v[2] * &w[0])
        + &u[2] * (&v[0] * &w[1] - &v[1] * &w[0])
}

fn cross3(u: &[BigInt], v: &[BigInt]) -> Vec<BigInt> {
    vec![
        &u[1] * &v[2] - &u[2] * &v[1],
        &u[2] * &v[0] - &u[0] * &v[2],
        &u[0] * &v[1] - &u[1] * &v[0],
    ]
}

/// Incremental hull with outward-oriented triangles; returns the extreme
/// points and six times the volume.
fn hull3(pts: &[Vec<BigInt>]) -> (Vec<usize>, BigInt) {
    let orient = |a: usize, b: usize, c: usize, d: usize| {
        let o = &pts[a];
        det3(&sub(&pts[b], o), &sub(&pts[c], o), &sub(&pts[d], o))
    };
    let n = pts.len();
    let i0 = 0;
    let i1 = 1;
    let i2 = (2..n)
        .find(|&i| cross3(&sub(&pts[i1], &pts[i0]), &sub(&pts[i], &pts[i0])).iter().any(|x| !x.is_zero()))
        .expect("three-dimensional point set");
    let i3 = (2..n).find(|&i| !orient(i0, i1, i2, i).is_zero()).expect("three-dimensional point set");
    let seed = [i0, i1, i2, i3];
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for skip in 0..4 {
        let f: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| seed[k]).collect();
        let (a, mut b, mut c) = (f[0], f[1], f[2]);
        if orient(a, b, c, seed[skip]).is_positive() {
            std::mem::swap(&mut b, &mut c);
        }
        faces.push([a, b, c]);
    }
    for p in 0..n {
        if seed.contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|&[a, b, c]| orient(a, b, c, p).is_positive()).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for k in 0..3 {
                edges.insert((f[k], f[(k + 1) % 3]));
            }
        }
        let mut next: Vec<[usize; 3]> = faces.iter().zip(&visible).filter(|(_, &v)| !v).map(|(f, _)| *f).collect();
        let mut horizon: Vec<(usize, usize)> = edges.iter().filter(|&&(u, v)| !edges.contains(&(v, u))).copied().collect();
        horizon.sort_unstable();
        next.extend(horizon.into_iter().map(|(u, v)| [u, v, p]));
        faces = next;
    }
    let mut volume6 = BigInt::zero();
    for &[a, b, c] in &faces {
        volume6 -= orient(a, b, c, i0);
    }
    let mut incident: Vec<Vec<Vec<BigInt>>> = vec![Vec::new(); n];
    for &[a, b, c] in &faces {
        let normal = cross3(&sub(&pts[b], &pts[a]), &sub(&pts[c], &pts[a]));
        for v in [a, b, c] {
            incident[v].push(normal.clone());
        }
    }
    // A hull point is extreme iff the normals around it span three dimensions.
    let extreme = (0..n)
        .filter(|&v| {
            let normals = &incident[v];
            let Some(first) = normals.first() else { return false };
            let Some(second) = normals.iter().find(|m| cross3(first, m).iter().any(|x| !x.is_zero())) else {
                return false;
            };
            normals.iter().any(|m| !det3(first, second, m).is_zero())
        })
        .collect();
    (extreme, volume6)
}
