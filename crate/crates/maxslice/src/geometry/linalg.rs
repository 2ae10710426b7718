//! Small dense helpers for symmetric 3x3 (6-component upper triangle) and
//! symmetric 4x4 (10-component upper triangle) matrices.

use crate::fields::{sym3, sym4};

/// Determinant of a symmetric 3x3 in upper-triangle layout.
#[inline]
pub fn det3_sym(a: &[f64; 6]) -> f64 {
    let (xx, xy, xz, yy, yz, zz) = (a[0], a[1], a[2], a[3], a[4], a[5]);
    xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) + xz * (xy * yz - yy * xz)
}

/// Inverse of a symmetric 3x3; returns (inverse, determinant).
#[inline]
pub fn inv3_sym(a: &[f64; 6]) -> ([f64; 6], f64) {
    let (xx, xy, xz, yy, yz, zz) = (a[0], a[1], a[2], a[3], a[4], a[5]);
    let det = det3_sym(a);
    let inv_det = 1.0 / det;
    let out = [
        (yy * zz - yz * yz) * inv_det,
        (xz * yz - xy * zz) * inv_det,
        (xy * yz - xz * yy) * inv_det,
        (xx * zz - xz * xz) * inv_det,
        (xy * xz - xx * yz) * inv_det,
        (xx * yy - xy * xy) * inv_det,
    ];
    (out, det)
}

/// Symmetric-3 times vector.
#[inline]
pub fn sym3_mul(a: &[f64; 6], v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += a[sym3(i, j)] * v[j];
        }
    }
    out
}

#[inline]
pub fn mat4_from_sym(a: &[f64; 10]) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[sym4(i, j)];
        }
    }
    m
}

#[inline]
pub fn sym_from_mat4(m: &[[f64; 4]; 4]) -> [f64; 10] {
    let mut a = [0.0; 10];
    for i in 0..4 {
        for j in i..4 {
            a[sym4(i, j)] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    a
}

/// Inverse of a general 4x4 by Gauss-Jordan with partial pivoting.
/// Returns None when the pivot collapses.
pub fn inv4(m: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut a = *m;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let mut pivot = col;
        for row in col + 1..4 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..4 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for row in 0..4 {
            if row != col {
                let f = a[row][col];
                for j in 0..4 {
                    a[row][j] -= f * a[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

/// Smallest eigenvalue of a symmetric 3x3 via cyclic Jacobi rotations.
pub fn min_eig3_sym(a: &[f64; 6]) -> f64 {
    let mut m = [
        [a[0], a[1], a[2]],
        [a[1], a[3], a[4]],
        [a[2], a[4], a[5]],
    ];
    for _ in 0..30 {
        // Largest off-diagonal element.
        let mut p = 0;
        let mut q = 1;
        let mut biggest = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                if m[i][j].abs() > biggest {
                    biggest = m[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if biggest < 1e-14 {
            break;
        }
        let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        let mpp = m[p][p];
        let mqq = m[q][q];
        let mpq = m[p][q];
        m[p][p] = c * c * mpp - 2.0 * s * c * mpq + s * s * mqq;
        m[q][q] = s * s * mpp + 2.0 * s * c * mpq + c * c * mqq;
        m[p][q] = 0.0;
        m[q][p] = 0.0;
        let r = 3 - p - q;
        let mrp = m[r][p];
        let mrq = m[r][q];
        m[r][p] = c * mrp - s * mrq;
        m[p][r] = m[r][p];
        m[r][q] = s * mrp + c * mrq;
        m[q][r] = m[r][q];
    }
    m[0][0].min(m[1][1]).min(m[2][2])
}
