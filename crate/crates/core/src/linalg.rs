//! Dense exact linear algebra over the rationals.

use num_traits::{One, Zero};

use crate::rational::Rat;

pub type Matrix = Vec<Vec<Rat>>;

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// Reduced row echelon form. Returns the reduced matrix and pivot columns.
pub fn rref(rows: &[Vec<Rat>], ncols: usize) -> (Matrix, Vec<usize>) {
    let mut m: Matrix = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rat::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in c..ncols {
                    let delta = &factor * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank(rows: &[Vec<Rat>], ncols: usize) -> usize {
    rref(rows, ncols).1.len()
}

/// Basis of `{x : rows * x = 0}`.
pub fn kernel(rows: &[Vec<Rat>], ncols: usize) -> Matrix {
    let (m, pivots) = rref(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rat::zero(); ncols];
            v[f] = Rat::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -m[row][f].clone();
            }
            v
        })
        .collect()
}

/// Inverse of a square matrix, `None` if singular.
pub fn inverse(m: &[Vec<Rat>]) -> Option<Matrix> {
    let n = m.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let augmented: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    let (red, pivots) = rref(&augmented, 2 * n);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(red.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn determinant(m: &[Vec<Rat>]) -> Rat {
    let n = m.len();
    let mut a: Matrix = m.to_vec();
    let mut det = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rat::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let factor = &a[i][c] / &a[c][c];
            for j in c..n {
                let delta = &factor * &a[c][j];
                a[i][j] -= delta;
            }
        }
    }
    det
}

/// Unique solution of the square system `m * x = b`.
pub fn solve(m: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let inv = inverse(m)?;
    Some(mat_vec(&inv, b))
}

/// Some solution of `m * x = b` for a possibly non-square `m`, `None` if inconsistent.
pub fn solve_any(m: &[Vec<Rat>], b: &[Rat], ncols: usize) -> Option<Vec<Rat>> {
    let augmented: Matrix = m
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let (red, pivots) = rref(&augmented, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rat::zero(); ncols];
    for (row, &p) in pivots.iter().enumerate() {
        x[p] = red[row][ncols].clone();
    }
    Some(x)
}

pub fn mat_vec(m: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn transpose(m: &[Vec<Rat>]) -> Matrix {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len())
        .map(|j| m.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            extend(i + 1, n, k, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        extend(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ints, rat};

    #[test]
    fn inverse_and_determinant() {
        let m = vec![ints(&[2, 1]), ints(&[1, 1])];
        assert_eq!(determinant(&m), int(1));
        let inv = inverse(&m).unwrap();
        assert_eq!(inv, vec![ints(&[1, -1]), ints(&[-1, 2])]);
        let singular = vec![ints(&[1, 2]), ints(&[2, 4])];
        assert!(inverse(&singular).is_none());
        assert_eq!(determinant(&singular), int(0));
    }

    #[test]
    fn kernel_of_rank_deficient() {
        let m = vec![ints(&[1, 1, 0]), ints(&[2, 2, 0])];
        let k = kernel(&m, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(mat_vec(&m, v), ints(&[0, 0]));
        }
        assert_eq!(rank(&m, 3), 1);
    }

    #[test]
    fn solve_square_and_rectangular() {
        let m = vec![ints(&[1, 2]), ints(&[3, 4])];
        let x = solve(&m, &ints(&[5, 6])).unwrap();
        assert_eq!(x, vec![int(-4), rat(9, 2)]);
        let tall = vec![ints(&[1, 0]), ints(&[0, 1]), ints(&[1, 1])];
        assert_eq!(solve_any(&tall, &ints(&[1, 2, 3]), 2), Some(ints(&[1, 2])));
        assert_eq!(solve_any(&tall, &ints(&[1, 2, 4]), 2), None);
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }
}
