//! Small dense helpers for the barrier geometry: LU solves, Householder
//! frames, and rotated quadratic forms. Dimensions here are the ambient n,
//! never the grid size.

use crate::error::{Error, Result};

/// Solves `m x = rhs` by LU with partial pivoting; `m` is consumed.
pub(crate) fn solve_lu(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = m.len();
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidParameter(
                "singular system in barrier construction".into(),
            ));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[row][j] -= f * m[col][j];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m[row][j] * x[j];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

/// Householder reflection (rows of an orthogonal, symmetric matrix) mapping
/// the unit vector `nu` to `-e_n`. Degenerates to the identity when `nu` is
/// already `-e_n`.
pub(crate) fn householder_to_minus_last(nu: &[f64]) -> Vec<Vec<f64>> {
    let n = nu.len();
    let mut w: Vec<f64> = nu.to_vec();
    w[n - 1] += 1.0; // nu + e_n
    let norm2: f64 = w.iter().map(|v| v * v).sum();
    let mut rows = vec![vec![0.0; n]; n];
    if norm2 < 1e-24 {
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        return rows;
    }
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            rows[i][j] = id - 2.0 * w[i] * w[j] / norm2;
        }
    }
    rows
}

pub(crate) fn apply(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
        .collect()
}

/// `R diag(a) R^T` for a row-major orthogonal `R`.
pub(crate) fn rotate_diagonal(r: &[Vec<f64>], a: &[f64]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (l, &al) in a.iter().enumerate() {
                acc += r[i][l] * al * r[j][l];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Quadratic form `(1/2) (x-c)^T diag(a) (x-c)`.
pub(crate) fn half_quad_diag(a: &[f64], x: &[f64], c: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(x.iter().zip(c))
        .map(|(&ai, (&xi, &ci))| ai * (xi - ci) * (xi - ci))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let m = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ];
        let x = solve_lu(m.clone(), vec![3.0, 5.0, 5.0]).unwrap();
        for (row, &b) in m.iter().zip(&[3.0, 5.0, 5.0]) {
            assert!((dot(row, &x) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn householder_sends_normal_down() {
        let nu = [0.6, 0.0, 0.8];
        let r = householder_to_minus_last(&nu);
        let image = apply(&r, &nu);
        assert!((image[0]).abs() < 1e-14);
        assert!((image[1]).abs() < 1e-14);
        assert!((image[2] + 1.0).abs() < 1e-14);
        // orthogonality
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&r[i], &r[j]) - id).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_preserves_quadratic_form() {
        let a = [0.5, 1.5, 3.0];
        let r = householder_to_minus_last(&[1.0 / 3f64.sqrt(); 3]);
        let at = rotate_diagonal(&r, &a);
        let x = [0.3, -1.0, 0.7];
        let xr = apply(&r, &x);
        let direct: f64 = a.iter().zip(&x).map(|(&ai, &xi)| ai * xi * xi).sum();
        let mut rotated = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                rotated += xr[i] * at[i][j] * xr[j];
            }
        }
        assert!((direct - rotated).abs() < 1e-13);
    }
}
