//! Small linear-algebra helpers: a banded complex solver for the vectorised
//! Liouvillian and Hermitian eigendecompositions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative pivot threshold below which the banded system is declared singular.
const PIVOT_EPS: f64 = 1e-13;

#[derive(Debug, Clone)]
struct BandRow {
    start: usize,
    vals: Vec<Complex64>,
}

impl BandRow {
    fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    fn get(&self, col: usize) -> Complex64 {
        if col < self.start || col >= self.end() {
            Complex64::new(0.0, 0.0)
        } else {
            self.vals[col - self.start]
        }
    }

    fn extend_to(&mut self, end: usize) {
        if end > self.end() {
            let len = end - self.start;
            self.vals.resize(len, Complex64::new(0.0, 0.0));
        }
    }
}

/// Square complex matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    rows: Vec<BandRow>,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let start = i.saturating_sub(kl);
                let end = (i + ku + 1).min(n);
                BandRow {
                    start,
                    vals: vec![Complex64::new(0.0, 0.0); end - start],
                }
            })
            .collect();
        BandedMatrix { n, kl, ku, rows }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i].get(j)
    }

    /// Adds `v` to entry `(i, j)`; panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku && j < self.n,
            "entry ({i}, {j}) outside band"
        );
        let row = &mut self.rows[i];
        row.vals[j - row.start] += v;
    }

    /// Replaces row `i` by the given `(column, value)` entries.
    pub fn set_row(&mut self, i: usize, entries: &[(usize, Complex64)]) {
        let row = &mut self.rows[i];
        row.vals.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for &(j, v) in entries {
            assert!(j >= row.start && j < row.end(), "entry ({i}, {j}) outside band");
            row.vals[j - row.start] = v;
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Gaussian elimination with partial pivoting; consumes the matrix.
    pub fn solve(mut self, mut b: Vec<Complex64>) -> Result<Vec<Complex64>> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let scale = self
            .rows
            .iter()
            .flat_map(|r| r.vals.iter())
            .fold(0.0f64, |m, v| m.max(v.norm()));
        if scale == 0.0 {
            return Err(Error::SingularLiouvillian { row: 0, pivot: 0.0 });
        }
        for j in 0..n {
            let last = (j + self.kl).min(n - 1);
            let mut piv_row = j;
            let mut piv_abs = self.rows[j].get(j).norm();
            for i in j + 1..=last {
                let a = self.rows[i].get(j).norm();
                if a > piv_abs {
                    piv_abs = a;
                    piv_row = i;
                }
            }
            if piv_abs <= PIVOT_EPS * scale {
                return Err(Error::SingularLiouvillian { row: j, pivot: piv_abs });
            }
            if piv_row != j {
                self.rows.swap(j, piv_row);
                b.swap(j, piv_row);
            }
            let (head, tail) = self.rows.split_at_mut(j + 1);
            let pivot_row = &head[j];
            let piv = pivot_row.get(j);
            let piv_end = pivot_row.end();
            for (offset, row) in tail.iter_mut().take(last - j).enumerate() {
                let f = row.get(j) / piv;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                row.extend_to(piv_end);
                for c in j + 1..piv_end {
                    let v = pivot_row.vals[c - pivot_row.start];
                    row.vals[c - row.start] -= f * v;
                }
                row.vals[j - row.start] = Complex64::new(0.0, 0.0);
                let bj = b[j];
                b[j + 1 + offset] -= f * bj;
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for j in (0..n).rev() {
            let row = &self.rows[j];
            let mut acc = b[j];
            let upper = &row.vals[j + 1 - row.start..row.end() - row.start];
            for (v, xc) in upper.iter().zip(&x[j + 1..row.end()]) {
                acc -= v * xc;
            }
            x[j] = acc / row.get(j);
        }
        Ok(x)
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = 0.5 * (m + m.transpose());
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = 0.5 * (m + m.transpose());
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Applies a scalar function to the spectrum of a real symmetric matrix.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = symmetric_eigen(m);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| vecs[(r, c)] * f(vals[c]));
    &scaled * vecs.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> BandedMatrix {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut m = BandedMatrix::new(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // zero diagonal half the time so pivoting is exercised
                if i == j && rng.random_bool(0.5) {
                    continue;
                }
                m.add(i, j, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        m
    }

    #[test]
    fn banded_matches_dense_lu() {
        for (seed, (n, kl, ku)) in [(30, 3, 2), (50, 7, 7), (40, 1, 5), (12, 11, 11)]
            .into_iter()
            .enumerate()
        {
            let m = random_banded(n, kl, ku, seed as u64);
            let dense = m.to_dense();
            let b: Vec<Complex64> = (0..n).map(|i| c(i as f64 * 0.1 - 1.0, (i % 3) as f64)).collect();
            let x = m.solve(b.clone()).unwrap();
            let reference = dense.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                assert!((x[i] - reference[i]).norm() < 1e-9 * (1.0 + reference[i].norm()));
            }
            let r = &dense * DVector::from_vec(x) - DVector::from_vec(b);
            assert!(r.norm() < 1e-9);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut m = BandedMatrix::new(3, 1, 1);
        m.add(0, 0, c(1.0, 0.0));
        m.add(0, 1, c(1.0, 0.0));
        m.add(1, 0, c(1.0, 0.0));
        m.add(1, 1, c(1.0, 0.0));
        m.add(2, 2, c(1.0, 0.0));
        assert!(matches!(
            m.solve(vec![c(1.0, 0.0); 3]),
            Err(Error::SingularLiouvillian { .. })
        ));
    }

    #[test]
    #[should_panic]
    fn add_outside_band_panics() {
        let mut m = BandedMatrix::new(5, 1, 1);
        m.add(0, 3, c(1.0, 0.0));
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let (vals, vecs) = symmetric_eigen(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let rebuilt = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals.clone())) * vecs.transpose();
        assert!((rebuilt - &m).norm() < 1e-12);
        let sq = symmetric_function(&m, |x| x * x);
        assert!((sq - &m * &m).norm() < 1e-11);
        let hm = m.map(|x| c(x, 0.0));
        let (hv, _) = hermitian_eigen(&hm);
        for (a, b) in hv.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(symmetric_eigenvalues(&m).len(), 3);
    }
}
