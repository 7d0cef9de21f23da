//! Small dense linear algebra: symmetric matrices, a cyclic Jacobi
//! eigensolver, Cholesky solves and one-sided Jacobi singular values.
//!
//! Dimensions here are the feature dimension `d`, which is small, so every
//! routine is a straightforward O(d^3) kernel over a row-major `Vec<f64>`.

use serde::{Deserialize, Serialize};

const MAX_SWEEPS: usize = 100;

/// Dense symmetric `n x n` matrix stored row-major (both triangles kept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from row-major entries, symmetrizing `(A + A^T) / 2`.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = 0.5 * (entries[i * n + j] + entries[j * n + i]);
            }
        }
        m
    }

    /// Outer product `x x^T`.
    pub fn outer(x: &[f64]) -> Self {
        let mut m = Self::zeros(x.len());
        m.add_outer(x, 1.0);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self += weight * x x^T`.
    pub fn add_outer(&mut self, x: &[f64], weight: f64) {
        debug_assert_eq!(x.len(), self.n);
        let n = self.n;
        for i in 0..n {
            let wi = weight * x[i];
            if wi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, &xj) in row.iter_mut().zip(x) {
                *r += wi * xj;
            }
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    pub fn add_assign(&mut self, other: &SymMatrix) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.n, other.n);
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Matrix square `A A` (symmetric for symmetric `A`).
    pub fn square(&self) -> SymMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += aik * self.data[k * n + j];
                }
            }
        }
        SymMatrix::from_row_major(n, &out)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi_eigen(self, false).0
    }

    /// Eigenvalues in ascending order with the matching orthonormal
    /// eigenvectors stored as columns of a row-major `n x n` array.
    pub fn eigen(&self) -> (Vec<f64>, Vec<f64>) {
        let (vals, vecs) = jacobi_eigen(self, true);
        (vals, vecs.expect("vectors requested"))
    }

    /// Smallest eigenvalue; `0` for the empty matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue; `0` for the empty matrix.
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// Solves `A x = b` by Cholesky factorization. Returns `None` when `A` is
    /// not numerically positive definite.
    pub fn cholesky_solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = self.data[j * n + j];
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = self.data[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        // forward: L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        Some(y)
    }
}

/// Cyclic Jacobi rotations. A rotation is applied to `(p, q)` whenever the
/// off-diagonal entry is not negligible relative to `sqrt(|a_pp a_qq|)`; the
/// sweep loop ends once a full sweep applies no rotation.
fn jacobi_eigen(m: &SymMatrix, want_vectors: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = want_vectors.then(|| SymMatrix::identity(n).data);
    let scale = m.frobenius_norm();
    if n == 0 {
        return (Vec::new(), v);
    }
    // Entries below this are treated as exact zeros.
    let floor = scale * 1e-300_f64.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq.abs() <= floor
                    || apq.abs() <= f64::EPSILON * (app.abs() * aqq.abs()).sqrt() * 0.5
                {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    a[k * n + p] = nkp;
                    a[p * n + k] = nkp;
                    a[k * n + q] = nkq;
                    a[q * n + k] = nkq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let vals = order.iter().map(|&i| a[i * n + i]).collect();
    let vecs = v.map(|v| {
        let mut sorted = vec![0.0; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                sorted[r * n + new_col] = v[r * n + old_col];
            }
        }
        sorted
    });
    (vals, vecs)
}

/// Singular values (descending) of the `rows x cols` row-major matrix `a`,
/// via one-sided Jacobi orthogonalization of its columns. Returns
/// `min(rows, cols)` values.
///
/// Small singular values come out with accuracy relative to the column
/// scale, which a Gram-matrix eigen route would square away.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // Work on the orientation with fewer columns.
    let (r, c, mut colmajor) = if cols <= rows {
        let mut cm = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                cm[j * rows + i] = a[i * cols + j];
            }
        }
        (rows, cols, cm)
    } else {
        // Columns of A^T are rows of A.
        (cols, rows, a.to_vec())
    };

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in (p + 1)..c {
                let (head, tail) = colmajor.split_at_mut(q * r);
                let cp = &mut head[p * r..(p + 1) * r];
                let cq = &mut tail[..r];
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..r {
                    alpha += cp[k] * cp[k];
                    beta += cq[k] * cq[k];
                    gamma += cp[k] * cq[k];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..r {
                    let x = cp[k];
                    let y = cq[k];
                    cp[k] = cs * x - sn * y;
                    cq[k] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = (0..c)
        .map(|j| {
            colmajor[j * r..(j + 1) * r]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &[f64], rows: usize, cols: usize, rel_tol: f64) -> usize {
    let sv = singular_values(a, rows, cols);
    let Some(&smax) = sv.first() else {
        return 0;
    };
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Roots of the 2x2 characteristic polynomial, ascending.
    fn char_roots_2(a: f64, b: f64, c: f64) -> [f64; 2] {
        // [[a, b], [b, c]]: t^2 - (a + c) t + (ac - b^2)
        let tr = a + c;
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        [(tr - disc) / 2.0, (tr + disc) / 2.0]
    }

    /// Roots of the 3x3 characteristic polynomial by the trigonometric
    /// method for real-rooted cubics, ascending.
    fn char_roots_3(m: &[f64; 9]) -> [f64; 3] {
        let q = (m[0] + m[4] + m[8]) / 3.0;
        let p1 = m[1] * m[1] + m[2] * m[2] + m[5] * m[5];
        let p2 = (m[0] - q).powi(2) + (m[4] - q).powi(2) + (m[8] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        if p == 0.0 {
            return [q, q, q];
        }
        let mut bm = [0.0; 9];
        for i in 0..9 {
            bm[i] = (m[i] - if i % 4 == 0 { q } else { 0.0 }) / p;
        }
        let det = bm[0] * (bm[4] * bm[8] - bm[5] * bm[7]) - bm[1] * (bm[3] * bm[8] - bm[5] * bm[6])
            + bm[2] * (bm[3] * bm[7] - bm[4] * bm[6]);
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut out = [e1, e2, e3];
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn jacobi_matches_2x2_characteristic_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let (a, b, c) = (
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            );
            let m = SymMatrix::from_row_major(2, &[a, b, b, c]);
            let got = m.eigenvalues();
            let want = char_roots_2(a, b, c);
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() <= 1e-10, "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn jacobi_matches_3x3_characteristic_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let mut e = [0.0; 9];
            for i in 0..3 {
                for j in i..3 {
                    let v = rng.random_range(-3.0..3.0);
                    e[i * 3 + j] = v;
                    e[j * 3 + i] = v;
                }
            }
            let got = SymMatrix::from_row_major(3, &e).eigenvalues();
            let want = char_roots_3(&e);
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() <= 1e-10, "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn eigenvectors_reconstruct_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let mut e = vec![0.0; n * n];
        for v in e.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let m = SymMatrix::from_row_major(n, &e);
        let (vals, vecs) = m.eigen();
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| vecs[i * n + k] * vals[k] * vecs[j * n + k]).sum();
                assert!((r - m.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_and_zero_matrices() {
        let m = SymMatrix::from_row_major(3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(m.eigenvalues(), vec![-1.0, 2.0, 3.0]);
        assert_eq!(SymMatrix::zeros(4).eigenvalues(), vec![0.0; 4]);
        assert!(SymMatrix::zeros(0).eigenvalues().is_empty());
    }

    #[test]
    fn cholesky_solves_spd_and_rejects_singular() {
        let m = SymMatrix::from_row_major(2, &[4.0, 2.0, 2.0, 3.0]);
        let x = m.cholesky_solve(&[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
        let singular = SymMatrix::from_row_major(2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(singular.cholesky_solve(&[1.0, 0.0]).is_none());
    }

    #[test]
    fn singular_values_of_known_matrices() {
        // [[-1, 1]] has the single singular value sqrt(2).
        let sv = singular_values(&[-1.0, 1.0], 1, 2);
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - 2f64.sqrt()).abs() < 1e-15);
        // Rank-one 3x2.
        let a = [1.0, 2.0, 2.0, 4.0, 3.0, 6.0];
        let sv = singular_values(&a, 3, 2);
        assert!((sv[0] - (14.0f64 * 5.0).sqrt()).abs() < 1e-12);
        assert!(sv[1].abs() < 1e-14);
        assert_eq!(numerical_rank(&a, 3, 2, 1e-10), 1);
    }

    proptest! {
        #[test]
        fn singular_values_match_gram_eigenvalues(seed in 0u64..1000, rows in 1usize..8, cols in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect();
            let sv = singular_values(&a, rows, cols);
            prop_assert_eq!(sv.len(), rows.min(cols));
            let mut gram = SymMatrix::zeros(cols);
            for r in 0..rows {
                gram.add_outer(&a[r * cols..(r + 1) * cols], 1.0);
            }
            let mut ev = gram.eigenvalues();
            ev.reverse();
            for (k, s) in sv.iter().enumerate() {
                prop_assert!((s * s - ev[k].max(0.0)).abs() < 1e-9 * (1.0 + ev[0]));
            }
        }
    }
}
