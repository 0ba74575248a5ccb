//! Elementary symmetric functions, deleted variants, cone membership, and the
//! derived quantities `A_k^i`, `h_k`, `theta`, `c*` that steer the subsolution
//! construction.
//!
//! All evaluations of `sigma_k` run the stable prefix recurrence
//! `P_j <- P_j + a_i * P_{j-1}` in one pass, O(n k), which has no cancellation
//! for positive inputs. Subset enumeration is never used outside test oracles.

use crate::error::{Error, Result};

/// A real n-tuple, the eigenvalue vector `a = lambda(A)` of a diagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymVector {
    entries: Vec<f64>,
}

impl SymVector {
    /// Requires n >= 2 and finite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::DimensionTooSmall(entries.len()));
        }
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NotFinite { index, value });
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn all_positive(&self) -> bool {
        self.entries.iter().all(|&v| v > 0.0)
    }

    fn require_positive(&self) -> Result<()> {
        for (index, &value) in self.entries.iter().enumerate() {
            if value <= 0.0 {
                return Err(Error::NotPositive { index, value });
            }
        }
        Ok(())
    }
}

/// Elementary symmetric polynomial of an arbitrary slice.
///
/// Conventions: `esp(_, 0) = 1`, `esp(_, k) = 0` for `k < 0` or `k > len`.
pub(crate) fn esp(values: &[f64], k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as usize;
    if k > values.len() {
        return 0.0;
    }
    if k == 0 {
        return 1.0;
    }
    let mut acc = vec![0.0_f64; k + 1];
    acc[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        let top = k.min(i + 1);
        for j in (1..=top).rev() {
            acc[j] += v * acc[j - 1];
        }
    }
    acc[k]
}

/// All of `sigma_0 .. sigma_k` in one pass.
pub(crate) fn esp_prefix(values: &[f64], k: usize) -> Vec<f64> {
    let k = k.min(values.len());
    let mut acc = vec![0.0_f64; k + 1];
    acc[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        let top = k.min(i + 1);
        for j in (1..=top).rev() {
            acc[j] += v * acc[j - 1];
        }
    }
    acc
}

/// `sigma_{k;i}` for every i, by one leave-one-out pass per index.
///
/// Recomputing each deleted polynomial from scratch keeps all summands
/// positive for positive input; the downward recurrence
/// `sigma_{k;i} = sigma_k - a_i sigma_{k-1;i}` would cancel.
pub(crate) fn esp_deleted_each(values: &[f64], k: i64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut reduced = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        reduced.clear();
        reduced.extend_from_slice(&values[..i]);
        reduced.extend_from_slice(&values[i + 1..]);
        out.push(esp(&reduced, k));
    }
    out
}

/// `sigma_k(a)`, the k-th elementary symmetric function.
///
/// `k = 0` returns 1 and `k = -1` returns 0 by the standard conventions;
/// anything outside `[-1, n]` is a domain error.
pub fn sigma(a: &SymVector, k: i64) -> Result<f64> {
    let n = a.n();
    if k < -1 || k > n as i64 {
        return Err(Error::OrderOutOfRange { k, n });
    }
    Ok(esp(a.entries(), k))
}

/// `sigma_{k; i1..it}(a)`: sigma_k with the excluded entries removed.
///
/// Indices are 0-based. Returns 0 when fewer than k variables remain.
pub fn sigma_deleted(a: &SymVector, k: i64, excluded: &[usize]) -> Result<f64> {
    let n = a.n();
    if k < -1 || k > n as i64 {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let mut seen = vec![false; n];
    for &i in excluded {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if seen[i] {
            return Err(Error::DuplicateIndex(i));
        }
        seen[i] = true;
    }
    let reduced: Vec<f64> = a
        .entries()
        .iter()
        .enumerate()
        .filter(|(i, _)| !seen[*i])
        .map(|(_, &v)| v)
        .collect();
    Ok(esp(&reduced, k))
}

/// Membership in the Garding cone `Gamma_k`: `sigma_j(lambda) > 0` for all
/// `j = 1..k`, strictly. Callers apply their own tolerance if they need one.
pub fn gamma_k_member(lambda: &SymVector, k: usize) -> Result<bool> {
    let n = lambda.n();
    if k < 1 || k > n {
        return Err(Error::OrderOutOfRange { k: k as i64, n });
    }
    let prefix = esp_prefix(lambda.entries(), k);
    Ok(prefix[1..=k].iter().all(|&s| s > 0.0))
}

/// `A_k^i(a) = a_i * sigma_{k-1;i}(a)`. Requires all-positive `a`.
pub fn a_k_i(a: &SymVector, k: usize, i: usize) -> Result<f64> {
    let n = a.n();
    if k < 1 || k > n {
        return Err(Error::OrderOutOfRange { k: k as i64, n });
    }
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    a.require_positive()?;
    let deleted = sigma_deleted(a, k as i64 - 1, &[i])?;
    Ok(a.entries()[i] * deleted)
}

/// Normalization tolerance for membership in the admissible class.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A positive diagonal matrix with `sigma_k(lambda(A)) = 1`, i.e. a member of
/// the admissible far-field class. Constructors enforce `n >= 3`.
#[derive(Debug, Clone)]
pub struct AdmissibleMatrix {
    a: SymVector,
    k: usize,
    normalized: bool,
}

impl AdmissibleMatrix {
    /// Accepts an already-normalized vector; rejects `|sigma_k(a) - 1|`
    /// beyond [`NORMALIZATION_TOL`].
    pub fn new(a: SymVector, k: usize) -> Result<Self> {
        let n = a.n();
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        if k < 1 || k > n {
            return Err(Error::OrderOutOfRange { k: k as i64, n });
        }
        a.require_positive()?;
        let s = esp(a.entries(), k as i64);
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { k, sigma: s });
        }
        Ok(Self {
            a,
            k,
            normalized: true,
        })
    }

    /// Rescales a positive vector onto `sigma_k = 1`. Since `sigma_k` is
    /// homogeneous of degree k, `a / sigma_k(a)^{1/k}` lands exactly on the
    /// constraint.
    pub fn normalized(a: SymVector, k: usize) -> Result<Self> {
        let n = a.n();
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        if k < 1 || k > n {
            return Err(Error::OrderOutOfRange { k: k as i64, n });
        }
        a.require_positive()?;
        let s = esp(a.entries(), k as i64);
        let scale = s.powf(-1.0 / k as f64);
        let rescaled: Vec<f64> = a.entries().iter().map(|&v| v * scale).collect();
        Ok(Self {
            a: SymVector::new(rescaled)?,
            k,
            normalized: true,
        })
    }

    pub fn a(&self) -> &SymVector {
        &self.a
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `A_k^i(a)` for every i.
    pub fn a_k_all(&self) -> Vec<f64> {
        let deleted = esp_deleted_each(self.a.entries(), self.k as i64 - 1);
        self.a
            .entries()
            .iter()
            .zip(deleted)
            .map(|(&ai, d)| ai * d)
            .collect()
    }
}

/// `h_k(a) = max_i A_k^i(a)` over a normalized admissible vector.
///
/// Satisfies `k/n <= h_k < 1` for `k <= n-1` and `h_n = 1`, with equality at
/// `k/n` exactly for the symmetric vector.
pub fn h_k(adm: &AdmissibleMatrix) -> Result<f64> {
    if !adm.is_normalized() {
        let s = esp(adm.a().entries(), adm.k() as i64);
        return Err(Error::NotNormalized { k: adm.k(), sigma: s });
    }
    Ok(adm
        .a_k_all()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Checks `sigma_m(a) * sigma_{k-1;i}(a) >= sigma_{m-1;i}(a)` with absolute
/// tolerance 1e-12 on the normalized scale. Only `1 <= m <= k-1` is covered
/// by the inequality; `m = k` is rejected.
pub fn newton_quotient_check(adm: &AdmissibleMatrix, m: usize, i: usize) -> Result<bool> {
    let n = adm.n();
    let k = adm.k();
    if m < 1 || m >= k {
        return Err(Error::OrderOutOfRange { k: m as i64, n });
    }
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let a = adm.a();
    let lhs = sigma(a, m as i64)? * sigma_deleted(a, k as i64 - 1, &[i])?;
    let rhs = sigma_deleted(a, m as i64 - 1, &[i])?;
    let scale = 1.0_f64.max(lhs.abs()).max(rhs.abs());
    Ok(lhs >= rhs - 1e-12 * scale)
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut out = 1.0_f64;
    for j in 0..k {
        out = out * (n - j) as f64 / (j + 1) as f64;
    }
    out
}

/// The derived constants attached to an admissible vector: `h_k`, the decay
/// exponent `theta = ((k/h_k) - 2)/(n - 2)`, and `c* = C(n,k)^{-1/k}`.
#[derive(Debug, Clone)]
pub struct HessianParams {
    pub n: usize,
    pub k: usize,
    pub a: SymVector,
    pub hk: f64,
    pub theta: f64,
    pub cstar: f64,
}

impl HessianParams {
    pub fn new(adm: &AdmissibleMatrix) -> Result<Self> {
        let n = adm.n();
        let k = adm.k();
        let hk = h_k(adm)?;
        let theta = ((k as f64 / hk) - 2.0) / (n as f64 - 2.0);
        let cstar = binomial(n, k).powf(-1.0 / k as f64);
        Ok(Self {
            n,
            k,
            a: adm.a().clone(),
            hk,
            theta,
            cstar,
        })
    }

    /// The integrand exponent `k / (2 h_k)`, strictly above 1 for `n >= 3`.
    pub fn gamma(&self) -> f64 {
        self.k as f64 / (2.0 * self.hk)
    }

    pub fn admissible(&self) -> AdmissibleMatrix {
        AdmissibleMatrix::new(self.a.clone(), self.k).expect("params hold an admissible vector")
    }
}

/// Uniform entries `c* * (1,..,1)`, the unique symmetric member of the class.
pub fn symmetric_admissible(n: usize, k: usize) -> Result<AdmissibleMatrix> {
    let cstar = binomial(n, k).powf(-1.0 / k as f64);
    AdmissibleMatrix::new(SymVector::new(vec![cstar; n])?, k)
}
