//! The rank-one spectral identity
//! `sigma_k(lambda(diag(p) - beta q q^T)) = sigma_k(p) - beta sum_i q_i^2 sigma_{k-1;i}(p)`,
//! the characteristic-polynomial expansion behind it, Hessian assembly for
//! generalized symmetric functions, and an independent Jacobi eigenvalue
//! oracle used to verify all of the above.

use crate::error::{Error, Result};
use crate::symfun::{esp, esp_deleted_each, SymVector};

/// `M = diag(p) - beta q q^T`, stored by its generators. The dense matrix is
/// reconstructible bit-for-bit from `(p, q, beta)`.
///
/// `n = 1` is accepted as a consistent extension: `sigma_1 = p_1 - beta q_1^2`.
#[derive(Debug, Clone)]
pub struct RankOneMatrix {
    p: Vec<f64>,
    q: Vec<f64>,
    beta: f64,
}

impl RankOneMatrix {
    pub fn new(p: Vec<f64>, q: Vec<f64>, beta: f64) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::DimensionTooSmall(0));
        }
        if p.len() != q.len() {
            return Err(Error::LengthMismatch {
                expected: p.len(),
                got: q.len(),
            });
        }
        Ok(Self { p, q, beta })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn to_dense(&self) -> DenseSymMatrix {
        let n = self.n();
        DenseSymMatrix::from_fn(n, |i, j| {
            let diag = if i == j { self.p[i] } else { 0.0 };
            diag - self.beta * self.q[i] * self.q[j]
        })
    }
}

/// `sigma_k` of the eigenvalues of a rank-one update, evaluated without
/// forming the dense matrix. Deleted polynomials come from one leave-one-out
/// pass, O(n^2 k) total.
pub fn sigma_k_rank_one(m: &RankOneMatrix, k: usize) -> Result<f64> {
    let n = m.n();
    if k < 1 || k > n {
        return Err(Error::OrderOutOfRange { k: k as i64, n });
    }
    let head = esp(&m.p, k as i64);
    let deleted = esp_deleted_each(&m.p, k as i64 - 1);
    let correction: f64 = m
        .q
        .iter()
        .zip(&deleted)
        .map(|(&qi, &d)| qi * qi * d)
        .sum();
    Ok(head - m.beta * correction)
}

/// Coefficients of `det(lambda I - M)` in descending powers of `lambda`:
/// entry `i` multiplies `lambda^{n-i}` and equals
/// `(-1)^i (sigma_i(p) - beta sum_j q_j^2 sigma_{i-1;j}(p))`.
pub fn char_poly_rank_one(m: &RankOneMatrix) -> Vec<f64> {
    let n = m.n();
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut sign = 1.0_f64;
    for i in 0..=n {
        let head = esp(&m.p, i as i64);
        let deleted = esp_deleted_each(&m.p, i as i64 - 1);
        let correction: f64 = m
            .q
            .iter()
            .zip(&deleted)
            .map(|(&qj, &d)| qj * qj * d)
            .sum();
        coeffs.push(sign * (head - m.beta * correction));
        sign = -sign;
    }
    coeffs
}

/// Dense symmetric matrix, row-major, symmetric by construction.
#[derive(Debug, Clone)]
pub struct DenseSymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymMatrix {
    /// Validates exact symmetry of the given rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionTooSmall(0));
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (rows[i][j] - rows[j][i]).abs();
                if diff != 0.0 {
                    return Err(Error::NotSymmetric { i, j, diff });
                }
            }
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Ok(Self { n, data })
    }

    /// Builds a symmetric matrix from `f(i, j)` evaluated for `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// ascending. The off-diagonal Frobenius norm is driven below
/// `1e-12 * ||M||_F`.
pub fn eigen_oracle(m: &DenseSymMatrix) -> Result<Vec<f64>> {
    Ok(jacobi_eigen(m)?.0)
}

/// Jacobi eigendecomposition: `(values, vectors)` with values ascending and
/// `vectors[j]` the unit eigenvector for `values[j]`.
pub fn jacobi_eigen(m: &DenseSymMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.n;
    let norm = m.frobenius_norm();
    let mut a = m.data.clone();
    let mut v = vec![0.0_f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    if norm > 0.0 {
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = {
                let mut s = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        s += 2.0 * a[i * n + j] * a[i * n + j];
                    }
                }
                s.sqrt()
            };
            if off <= JACOBI_OFF_TOL * norm {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
                    let t = {
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // rotate rows/columns p and q of the working matrix
                    for i in 0..n {
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        a[i * n + p] = c * aip - s * aiq;
                        a[i * n + q] = s * aip + c * aiq;
                    }
                    for j in 0..n {
                        let apj = a[p * n + j];
                        let aqj = a[q * n + j];
                        a[p * n + j] = c * apj - s * aqj;
                        a[q * n + j] = s * apj + c * aqj;
                    }
                    for i in 0..n {
                        let vip = v[i * n + p];
                        let viq = v[i * n + q];
                        v[i * n + p] = c * vip - s * viq;
                        v[i * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
        if !converged {
            let off: f64 = {
                let mut s = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        s += 2.0 * a[i * n + j] * a[i * n + j];
                    }
                }
                s.sqrt()
            };
            if off > JACOBI_OFF_TOL * norm {
                return Err(Error::EigenNoConvergence(JACOBI_MAX_SWEEPS));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| (0..n).map(|i| v[i * n + j]).collect())
        .collect();
    Ok((sorted_values, sorted_vectors))
}

/// Hessian of a generalized symmetric profile at `x`: given the profile
/// derivatives `d1 = w'(s)`, `d2 = w''(s)` at `s = (1/2) sum a_i x_i^2`,
/// returns the rank-one form with `p = d1 * a`, `q_i = a_i x_i`,
/// `beta = -d2`.
pub fn hessian_of_generalized(
    d1: f64,
    d2: f64,
    a: &SymVector,
    x: &[f64],
) -> Result<RankOneMatrix> {
    let n = a.n();
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let p = a.entries().iter().map(|&ai| d1 * ai).collect();
    let q = a
        .entries()
        .iter()
        .zip(x)
        .map(|(&ai, &xi)| ai * xi)
        .collect();
    RankOneMatrix::new(p, q, -d2)
}

/// Direct evaluation of `sigma_k` of the Hessian of a generalized symmetric
/// profile:
/// `sigma_k(a) d1^k + d2 d1^{k-1} sum_i sigma_{k-1;i}(a) (a_i x_i)^2`.
pub fn sigma_k_generalized(d1: f64, d2: f64, a: &SymVector, x: &[f64], k: usize) -> Result<f64> {
    let n = a.n();
    if k < 1 || k > n {
        return Err(Error::OrderOutOfRange { k: k as i64, n });
    }
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let head = esp(a.entries(), k as i64) * d1.powi(k as i32);
    let deleted = esp_deleted_each(a.entries(), k as i64 - 1);
    let weighted: f64 = a
        .entries()
        .iter()
        .zip(x)
        .zip(&deleted)
        .map(|((&ai, &xi), &d)| d * (ai * xi) * (ai * xi))
        .sum();
    Ok(head + d2 * d1.powi(k as i32 - 1) * weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::SymVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * 1.0_f64.max(a.abs()).max(b.abs())
    }

    #[test]
    fn trace_case() {
        // M = diag(0, 1): sigma_1 = trace = 1
        let m = RankOneMatrix::new(vec![1.0, 1.0], vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(sigma_k_rank_one(&m, 1).unwrap(), 1.0);
    }

    #[test]
    fn beta_zero_reduces_to_diagonal() {
        let m = RankOneMatrix::new(vec![0.3, -1.2, 2.2, 0.9], vec![1.0, 2.0, 3.0, 4.0], 0.0)
            .unwrap();
        for k in 1..=4_usize {
            let direct = esp(m.p(), k as i64);
            assert_eq!(sigma_k_rank_one(&m, k).unwrap(), direct);
        }
    }

    #[test]
    fn dimension_one_extension() {
        let m = RankOneMatrix::new(vec![2.5], vec![1.5], 0.4).unwrap();
        let expect = 2.5 - 0.4 * 1.5 * 1.5;
        assert!((sigma_k_rank_one(&m, 1).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn rank_one_identity_against_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..200 {
            let n = rng.random_range(2..=8);
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let beta = rng.random_range(-2.0..2.0);
            let m = RankOneMatrix::new(p, q, beta).unwrap();
            let evals = eigen_oracle(&m.to_dense()).unwrap();
            for k in 1..=n {
                let fast = sigma_k_rank_one(&m, k).unwrap();
                let slow = esp(&evals, k as i64);
                assert!(close(fast, slow, 1e-10), "n={n} k={k}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn char_poly_base_case_matches_expansion() {
        // n = 2, beta = 1: (l-p1)(l-p2) + q1^2 (l-p2) + q2^2 (l-p1)
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p1 = rng.random_range(-2.0..2.0);
            let p2 = rng.random_range(-2.0..2.0);
            let q1 = rng.random_range(-2.0..2.0);
            let q2 = rng.random_range(-2.0..2.0);
            let lam: f64 = rng.random_range(-3.0..3.0);
            let m = RankOneMatrix::new(vec![p1, p2], vec![q1, q2], 1.0).unwrap();
            let coeffs = char_poly_rank_one(&m);
            let horner = coeffs.iter().fold(0.0, |acc, &c| acc * lam + c);
            let direct =
                (lam - p1) * (lam - p2) + q1 * q1 * (lam - p2) + q2 * q2 * (lam - p1);
            assert!(close(horner, direct, 1e-13));
        }
    }

    #[test]
    fn char_poly_diagonal_case() {
        let m = RankOneMatrix::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 0.0], 0.7).unwrap();
        let coeffs = char_poly_rank_one(&m);
        // (l-1)(l-2)(l-3) = l^3 - 6 l^2 + 11 l - 6
        let expect = [1.0, -6.0, 11.0, -6.0];
        for (c, e) in coeffs.iter().zip(expect) {
            assert!((c - e).abs() < 1e-13);
        }
    }

    #[test]
    fn char_poly_matches_oracle_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..40 {
            let n = 5;
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let beta = rng.random_range(-1.0..1.0);
            let m = RankOneMatrix::new(p, q, beta).unwrap();
            let dense = m.to_dense();
            let evals = eigen_oracle(&dense).unwrap();
            // coefficients from the oracle roots
            let mut from_roots = vec![1.0_f64];
            for &r in &evals {
                let mut next = vec![0.0; from_roots.len() + 1];
                for (i, &c) in from_roots.iter().enumerate() {
                    next[i] += c;
                    next[i + 1] -= c * r;
                }
                from_roots = next;
            }
            let coeffs = char_poly_rank_one(&m);
            let scale = (1.0 + dense.frobenius_norm()).powi(n as i32);
            for (c, e) in coeffs.iter().zip(&from_roots) {
                assert!((c - e).abs() <= 1e-10 * scale, "{c} vs {e}");
            }
            // residual of the characteristic polynomial at each oracle root
            for &r in &evals {
                let val = coeffs.iter().fold(0.0, |acc, &c| acc * r + c);
                assert!(val.abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn eigen_oracle_fixed_cases() {
        let id = DenseSymMatrix::from_fn(3, |i, j| if i == j { 1.0 } else { 0.0 });
        assert_eq!(eigen_oracle(&id).unwrap(), vec![1.0, 1.0, 1.0]);

        let d = DenseSymMatrix::from_fn(3, |i, j| {
            if i == j {
                [3.0, 1.0, 2.0][i]
            } else {
                0.0
            }
        });
        assert_eq!(eigen_oracle(&d).unwrap(), vec![1.0, 2.0, 3.0]);

        // diag(2,2) - e1 e1^T has eigenvalues (1, 2)
        let m = RankOneMatrix::new(vec![2.0, 2.0], vec![1.0, 0.0], 1.0).unwrap();
        let evals = eigen_oracle(&m.to_dense()).unwrap();
        assert!((evals[0] - 1.0).abs() < 1e-12 && (evals[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_oracle_rejects_asymmetric_rows() {
        let rows = vec![vec![1.0, 2.0], vec![2.1, 1.0]];
        assert!(DenseSymMatrix::from_rows(&rows).is_err());
    }

    #[test]
    fn jacobi_eigenvectors_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 5;
        let m = DenseSymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let (vals, vecs) = jacobi_eigen(&m).unwrap();
        for (lam, vec) in vals.iter().zip(&vecs) {
            for i in 0..n {
                let mv: f64 = (0..n).map(|j| m.get(i, j) * vec[j]).sum();
                assert!((mv - lam * vec[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn generalized_hessian_quadratic_profile() {
        // d2 = 0, d1 = 1: the Hessian is diag(a) regardless of x
        let a = SymVector::new(vec![0.4, 1.1, 2.0]).unwrap();
        let m = hessian_of_generalized(1.0, 0.0, &a, &[0.3, -0.7, 2.0]).unwrap();
        let dense = m.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { a.entries()[i] } else { 0.0 };
                assert_eq!(dense.get(i, j), expect);
            }
        }
        // x = 0: q = 0
        let m0 = hessian_of_generalized(0.8, -0.4, &a, &[0.0, 0.0, 0.0]).unwrap();
        assert!(m0.q().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generalized_sigma_matches_rank_one_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let n = rng.random_range(2..=7);
            let a = SymVector::new((0..n).map(|_| rng.random_range(0.2..4.0)).collect()).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let d1 = rng.random_range(0.5..3.0);
            let d2 = rng.random_range(-1.0..0.0);
            let m = hessian_of_generalized(d1, d2, &a, &x).unwrap();
            for k in 1..=n {
                let direct = sigma_k_generalized(d1, d2, &a, &x, k).unwrap();
                let chained = sigma_k_rank_one(&m, k).unwrap();
                assert!(close(direct, chained, 1e-12));
                let oracle = esp(&eigen_oracle(&m.to_dense()).unwrap(), k as i64);
                assert!(close(direct, oracle, 1e-10));
            }
        }
    }

    #[test]
    fn generalized_sigma_axis_point() {
        // x along axis i: sigma_k = d1^k + 2 s d2 d1^{k-1} sigma_{k-1;i}(a) a_i
        let a = SymVector::new(vec![0.5, 1.25, 0.8, 2.0]).unwrap();
        let (k, i, s) = (3_usize, 2_usize, 1.7_f64);
        let mut x = vec![0.0; 4];
        x[i] = (2.0 * s / a.entries()[i]).sqrt();
        let (d1, d2) = (1.3, -0.21);
        let got = sigma_k_generalized(d1, d2, &a, &x, k).unwrap();
        let di = crate::symfun::sigma_deleted(&a, k as i64 - 1, &[i]).unwrap();
        let head = esp(a.entries(), k as i64) * d1.powi(k as i32);
        let expect = head + 2.0 * s * d2 * d1.powi(k as i32 - 1) * di * a.entries()[i];
        assert!(close(got, expect, 1e-13));
    }
}
