//! Dense LU factorization with partial pivoting.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

/// Pivots with magnitude at or below this are treated as zero.
pub const PIVOT_EPSILON: f64 = 1e-13;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[r * n..(r + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.n;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * n);
        head[lo * n..(lo + 1) * n].swap_with_slice(&mut tail[..n]);
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }
}

/// Elimination hit a pivot no larger than [`PIVOT_EPSILON`].
///
/// `row` is the original (unpermuted) row that owned the failing column, so
/// callers can map it back to a circuit node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix {
    pub row: usize,
}

impl core::fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "singular matrix at row {}", self.row)
    }
}

impl core::error::Error for SingularMatrix {}

/// Solve `a·x = b`, factoring `a` in place.
pub fn lu_solve(mut a: DenseMatrix, mut b: Vec<f64>) -> Result<Vec<f64>, SingularMatrix> {
    let n = a.size();
    assert_eq!(b.len(), n, "right-hand side length must match matrix");
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|r| (r, a[(r, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if !(mag > PIVOT_EPSILON) {
            return Err(SingularMatrix { row: perm[k] });
        }
        a.swap_rows(k, p);
        b.swap(k, p);
        perm.swap(k, p);

        let pivot = a[(k, k)];
        for r in k + 1..n {
            let factor = a[(r, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[(r, k)] = factor;
            for c in k + 1..n {
                let u = a[(k, c)];
                a[(r, c)] -= factor * u;
            }
            b[r] -= factor * b[k];
        }
    }

    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[(k, c)] * b[c];
        }
        b[k] = s / a[(k, k)];
    }
    Ok(b)
}
