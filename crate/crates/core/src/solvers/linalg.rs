//! Tridiagonal and banded linear solves.

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest matrix entry count as zero.
const PIVOT_REL_TOL: f64 = 1e-14;

/// Thomas algorithm. `lower[i]` is entry `(i+1, i)`, `upper[i]` is `(i, i+1)`.
pub fn tridiagonal_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: rhs.len() });
    }
    let off = n.saturating_sub(1);
    if lower.len() != off || upper.len() != off {
        return Err(Error::LengthMismatch {
            expected: off,
            got: if lower.len() != off { lower.len() } else { upper.len() },
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = diag
        .iter()
        .chain(lower)
        .chain(upper)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let thresh = PIVOT_REL_TOL * scale;

    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - lower[i - 1] * c[i - 1];
        }
        if !(pivot.abs() > thresh) {
            return Err(Error::Singular { row: i, pivot });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = if i == 0 { rhs[0] } else { rhs[i] - lower[i - 1] * d[i - 1] } / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored
/// column-major with `kl` extra rows of room for pivoting fill-in:
/// entry `(i, j)` lives at `data[j * ldab + kl + ku + i − j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (2 * kl + ku + 1)],
        }
    }

    pub fn from_dense(a: &[Vec<f64>], kl: usize, ku: usize) -> Self {
        let n = a.len();
        let mut m = Self::new(n, kl, ku);
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if m.in_band(i, j) {
                    m.set(i, j, v);
                } else {
                    debug_assert!(v == 0.0, "entry ({i}, {j}) outside the band");
                }
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab() + self.kl + self.ku + i - j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    /// Zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Solves `A x = rhs` by band LU with partial pivoting (row interchanges
/// limited to the `kl` rows below the diagonal, as in LAPACK's `gbtf2`).
pub fn banded_lu_solve(a: &BandMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    if rhs.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: rhs.len() });
    }
    let thresh = PIVOT_REL_TOL * a.max_abs();
    let (kl, ku) = (a.kl, a.ku);
    let kv = kl + ku;
    let ld = a.ldab();
    let mut ab = a.data.clone();
    let at = |i: usize, j: usize| j * ld + kv + i - j;
    let mut ipiv = vec![0usize; n];
    let mut ju = 0usize;

    for j in 0..n {
        let km = kl.min(n - 1 - j);
        let mut jp = 0;
        for r in 1..=km {
            if ab[at(j + r, j)].abs() > ab[at(j + jp, j)].abs() {
                jp = r;
            }
        }
        ipiv[j] = j + jp;
        let pivot = ab[at(j + jp, j)];
        if !(pivot.abs() > thresh) {
            return Err(Error::Singular { row: j, pivot });
        }
        ju = ju.max((j + ku + jp).min(n - 1));
        if jp != 0 {
            for c in j..=ju {
                ab.swap(at(j, c), at(j + jp, c));
            }
        }
        for r in 1..=km {
            ab[at(j + r, j)] /= pivot;
        }
        for c in j + 1..=ju {
            let ujc = ab[at(j, c)];
            if ujc != 0.0 {
                for r in 1..=km {
                    ab[at(j + r, c)] -= ab[at(j + r, j)] * ujc;
                }
            }
        }
    }

    let mut x = rhs.to_vec();
    for j in 0..n {
        x.swap(j, ipiv[j]);
        let km = kl.min(n - 1 - j);
        for r in 1..=km {
            x[j + r] -= ab[at(j + r, j)] * x[j];
        }
    }
    for j in (0..n).rev() {
        x[j] /= ab[at(j, j)];
        let xj = x[j];
        for i in j.saturating_sub(kv)..j {
            x[i] -= ab[at(i, j)] * xj;
        }
    }
    Ok(x)
}
