//! Dense linear-algebra kernels: rank-revealing null spaces, square solves,
//! least squares and small symmetric eigenproblems.
//!
//! Everything here is generic over [`Real`] so the geometric code above it
//! never has to commit to a precision.

use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged row {i}");
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[T]) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for DMat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Singular value decomposition `A = U diag(s) V^T` with a full square `V`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Singular values, one per column of `A` (unsorted, matching `v` columns).
    pub singular_values: Vec<T>,
    /// Columns of `A V`, i.e. `u_j * s_j`.
    pub scaled_left: Vec<Vec<T>>,
    /// Right singular vectors as columns.
    pub right: Vec<Vec<T>>,
}

/// One-sided Jacobi SVD. Works for any shape and returns all `n` right
/// singular vectors, which is what null-space extraction needs.
pub fn jacobi_svd<T: Real>(a: &DMat<T>) -> Svd<T> {
    let m = a.rows();
    let n = a.cols();
    let mut w: Vec<Vec<T>> = (0..n)
        .map(|j| (0..m).map(|i| a[(i, j)]).collect())
        .collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();
    let eps = T::epsilon();
    let mut norms: Vec<T> = w.iter().map(|c| dot(c, c)).collect();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                norms[p] = dot(&w[p], &w[p]);
                norms[q] = dot(&w[q], &w[q]);
            }
        }
        if !rotated {
            break;
        }
    }
    Svd {
        singular_values: norms.iter().map(|x| x.sqrt()).collect(),
        scaled_left: w,
        right: v,
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Orthonormal null-space basis together with the rank that produced it.
#[derive(Debug, Clone)]
pub struct NullSpace<T> {
    pub basis: Vec<Vec<T>>,
    pub rank: usize,
    pub largest_singular_value: T,
    /// Largest singular value classified as zero, or zero if none.
    pub largest_discarded: T,
    /// Smallest singular value kept in the range, or zero if none.
    pub smallest_kept: T,
}

/// Null space of `a` using the threshold `rel_tol * sigma_max`. Each basis
/// vector is sign-normalized so that its largest-magnitude entry is positive.
pub fn null_space<T: Real>(a: &DMat<T>, rel_tol: T) -> NullSpace<T> {
    let n = a.cols();
    if a.rows() == 0 || a.max_abs() == T::zero() {
        let basis = (0..n)
            .map(|j| {
                let mut e = vec![T::zero(); n];
                e[j] = T::one();
                e
            })
            .collect();
        return NullSpace {
            basis,
            rank: 0,
            largest_singular_value: T::zero(),
            largest_discarded: T::zero(),
            smallest_kept: T::zero(),
        };
    }
    let svd = jacobi_svd(a);
    let smax = svd.singular_values.iter().fold(T::zero(), |m, &s| m.max(s));
    let tau = rel_tol * smax;
    let mut basis = Vec::new();
    let mut largest_discarded = T::zero();
    let mut smallest_kept = T::infinity();
    for (s, v) in svd.singular_values.iter().zip(svd.right) {
        if *s <= tau {
            largest_discarded = largest_discarded.max(*s);
            basis.push(sign_normalize(v));
        } else {
            smallest_kept = smallest_kept.min(*s);
        }
    }
    let rank = n - basis.len();
    NullSpace {
        basis,
        rank,
        largest_singular_value: smax,
        largest_discarded,
        smallest_kept: if rank == 0 { T::zero() } else { smallest_kept },
    }
}

fn sign_normalize<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + T::epsilon() * v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < T::zero()) {
        for x in &mut v {
            *x = -*x;
        }
    }
    v
}

/// Numerical rank with the same relative threshold as [`null_space`].
pub fn rank<T: Real>(a: &DMat<T>, rel_tol: T) -> usize {
    null_space(a, rel_tol).rank
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix;

/// Solves the square system `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(a: &DMat<T>, b: &[T]) -> Result<Vec<T>, SingularMatrix> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = a.max_abs();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().partial_cmp(&m[(j, k)].abs()).unwrap())
            .unwrap();
        if m[(piv, k)].abs() <= T::epsilon() * scale * T::from_usize_lossy(n) {
            return Err(SingularMatrix);
        }
        if piv != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
            let t = x[k];
            x[i] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Ok(x)
}

/// Minimum-norm least-squares solution of `a x ~ b` through the SVD.
pub fn least_squares<T: Real>(a: &DMat<T>, b: &[T], rel_tol: T) -> Vec<T> {
    let svd = jacobi_svd(a);
    let smax = svd.singular_values.iter().fold(T::zero(), |m, &s| m.max(s));
    let n = a.cols();
    let mut x = vec![T::zero(); n];
    for ((s, av), v) in svd
        .singular_values
        .iter()
        .zip(&svd.scaled_left)
        .zip(&svd.right)
    {
        if *s <= rel_tol * smax || *s == T::zero() {
            continue;
        }
        // u = av / s, coefficient = <u, b> / s
        let coef = dot(av, b) / (*s * *s);
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += coef * *vi;
        }
    }
    x
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in ascending order with matching column vectors.
pub fn symmetric_eigen<T: Real>(a: &DMat<T>) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut v = DMat::identity(n);
    for _ in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off <= T::epsilon() * T::epsilon() * m.max_abs().powi(2) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|i| v[(i, j)]).collect())
        .collect();
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn null_space_of_rank_one_matrix() {
        let a = DMat::<f64>::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.rank, 1);
        assert_eq!(ns.basis.len(), 2);
        for v in &ns.basis {
            let r = a.mul_vec(v);
            assert!(r.iter().all(|x| x.abs() < 1e-12));
            let n: f64 = v.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_constraint_set_gives_identity_basis() {
        let a: DMat<f64> = DMat::zeros(0, 3);
        let ns = null_space(&a, 1e-8);
        assert_eq!(ns.basis.len(), 3);
        assert_eq!(ns.rank, 0);
    }

    #[test]
    fn solve_small_system() {
        let a = DMat::<f64>::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]);
        let x = solve(&a, &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        let s = DMat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(solve(&s, &[1.0, 1.0]), Err(SingularMatrix));
    }

    #[test]
    fn symmetric_eigen_diagonalizes() {
        let a = DMat::<f64>::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 0.0],
            vec![0.0, 0.0, 5.0],
        ]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - 5.0).abs() < 1e-12);
        let av = a.mul_vec(&vecs[0]);
        for (x, y) in av.iter().zip(&vecs[0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn null_vectors_are_annihilated(entries in prop::collection::vec(-3.0f64..3.0, 12)) {
            // 3x4 matrix: null space has dimension at least one.
            let rows: Vec<Vec<f64>> = entries.chunks(4).take(3).map(|c| c.to_vec()).collect();
            let a = DMat::from_rows(&rows);
            let ns = null_space(&a, 1e-10);
            prop_assert!(!ns.basis.is_empty());
            prop_assert_eq!(ns.rank + ns.basis.len(), 4);
            for v in &ns.basis {
                let r = a.mul_vec(v);
                prop_assert!(r.iter().all(|x| x.abs() < 1e-9));
            }
        }

        #[test]
        fn least_squares_recovers_consistent_solution(x0 in prop::collection::vec(-2.0f64..2.0, 3)) {
            let a = DMat::<f64>::from_rows(&[
                vec![1.0, 0.5, 0.0],
                vec![0.0, 1.0, 2.0],
                vec![1.0, 1.0, 1.0],
                vec![3.0, 0.0, 1.0],
            ]);
            let b = a.mul_vec(&x0);
            let x = least_squares(&a, &b, 1e-12);
            for (u, v) in x.iter().zip(&x0) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
