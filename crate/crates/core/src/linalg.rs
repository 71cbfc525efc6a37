//! Small dense complex elimination: rank and null space.

use num_complex::Complex64;

use crate::herglotz::{CMatrix, CVector};

/// Reduced row echelon form with partial pivoting; returns the pivot columns.
///
/// Entries below `tol · max|a_ij|` are treated as zero.
pub fn rref(m: &CMatrix, tol: f64) -> (CMatrix, Vec<usize>) {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eps = tol * scale.max(f64::MIN_POSITIVE);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows).map(|i| (i, a[(i, c)].norm())).fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= eps {
            continue;
        }
        a.swap_rows(r, p);
        let inv = Complex64::new(1.0, 0.0) / a[(r, c)];
        for j in 0..cols {
            a[(r, j)] *= inv;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != Complex64::new(0.0, 0.0) {
                    for j in 0..cols {
                        let v = a[(r, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank(m: &CMatrix, tol: f64) -> usize {
    rref(m, tol).1.len()
}

/// Basis of the null space, one vector per free column, each with a 1 in its free slot.
pub fn null_space(m: &CMatrix, tol: f64) -> Vec<CVector> {
    let (a, pivots) = rref(m, tol);
    let cols = a.ncols();
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = CVector::zeros(cols);
            v[f] = Complex64::new(1.0, 0.0);
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[(r, f)];
            }
            v
        })
        .collect()
}
