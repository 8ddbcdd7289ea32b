//! Sparse symmetric storage and a skyline LDL^T direct factorization.
//!
//! The meshes this crate produces (1D slabs, ring-ordered disks) have small
//! envelopes, so a profile factorization is adequate at desk scale and keeps
//! the solve deterministic.

use crate::error::{Error, Result};

/// Symmetric sparse matrix; only the lower triangle (col <= row) is stored.
#[derive(Debug, Clone)]
pub struct SymSparse {
    pub n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymSparse {
    pub fn new(n: usize) -> Self {
        SymSparse { n, rows: vec![Vec::new(); n] }
    }

    /// Accumulate `v` at (i, j) = (j, i).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let row = &mut self.rows[r];
        match row.binary_search_by_key(&c, |&(col, _)| col) {
            Ok(pos) => row[pos].1 += v,
            Err(pos) => row.insert(pos, (c, v)),
        }
    }

    pub fn lower_row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// y = A x (full symmetric product).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            for &(j, v) in &self.rows[i] {
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    /// x^T A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for &(j, v) in &self.rows[i] {
                if i == j {
                    acc += v * x[i] * x[i];
                } else {
                    acc += 2.0 * v * x[i] * x[j];
                }
            }
        }
        acc
    }

    /// Frobenius-type asymmetry check is structural here (lower storage), so
    /// this returns the extracted dense lower triangle for tests.
    #[cfg(test)]
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for &(j, v) in &self.rows[i] {
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        d
    }
}

/// Skyline LDL^T factorization of an SPD `SymSparse`.
pub struct SkylineFactor {
    n: usize,
    /// first stored column of each row
    first: Vec<usize>,
    /// offset of each row's segment in `vals`
    off: Vec<usize>,
    /// strictly-lower entries, row-major over the envelope
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SkylineFactor {
    pub fn new(a: &SymSparse) -> Result<Self> {
        let n = a.n;
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            if let Some(&(c, _)) = a.lower_row(i).first() {
                first[i] = c;
            }
        }
        let mut off = vec![0usize; n + 1];
        for i in 0..n {
            off[i + 1] = off[i] + (i - first[i]);
        }
        let mut vals = vec![0.0; off[n]];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for &(j, v) in a.lower_row(i) {
                if j == i {
                    diag[i] = v;
                } else {
                    vals[off[i] + (j - first[i])] = v;
                }
            }
        }
        // in-place LDL^T over the envelope
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = vals[off[i] + (j - fi)];
                for k in lo..j {
                    s -= vals[off[i] + (k - fi)] * vals[off[j] + (k - fj)] * diag[k];
                }
                vals[off[i] + (j - fi)] = s / diag[j];
            }
            let mut d = diag[i];
            for k in fi..i {
                let l = vals[off[i] + (k - fi)];
                d -= l * l * diag[k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularSystem(i));
            }
            diag[i] = d;
        }
        Ok(SkylineFactor { n, first, off, vals, diag })
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let mut s = x[i];
            for k in fi..i {
                s -= self.vals[self.off[i] + (k - fi)] * x[k];
            }
            x[i] = s;
        }
        // diagonal
        for i in 0..self.n {
            x[i] /= self.diag[i];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.vals[self.off[i] + (k - fi)] * xi;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, p);
            b.swap(col, p);
            for r in (col + 1)..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let mut s = b[r];
            for c in (r + 1)..n {
                s -= a[r][c] * x[c];
            }
            x[r] = s / a[r][r];
        }
        x
    }

    #[test]
    fn solves_tridiagonal_poisson() {
        let n = 50;
        let mut a = SymSparse::new(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        let b = vec![1.0; n];
        let f = SkylineFactor::new(&a).unwrap();
        let x = f.solve(&b);
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        for i in 0..n {
            assert!((r[i] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_dense_solver_with_fill_in() {
        // banded SPD matrix with skipped columns to exercise envelope fill
        let n = 20;
        let mut a = SymSparse::new(n);
        for i in 0..n {
            a.add(i, i, 8.0 + i as f64 * 0.1);
            if i >= 3 {
                a.add(i, i - 3, -1.5);
            }
            if i >= 5 {
                a.add(i, i - 5, 0.5);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = SkylineFactor::new(&a).unwrap().solve(&b);
        let xd = dense_solve(a.to_dense(), b);
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let mut a = SymSparse::new(2);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        assert!(matches!(SkylineFactor::new(&a), Err(Error::SingularSystem(1))));
    }

    #[test]
    fn quadratic_form_agrees_with_matvec() {
        let n = 12;
        let mut a = SymSparse::new(n);
        for i in 0..n {
            a.add(i, i, 3.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut y = vec![0.0; n];
        a.matvec(&x, &mut y);
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((a.quadratic_form(&x) - dot).abs() < 1e-12);
    }
}
