//! The generalized symmetric subsolution family
//!
//! ```text
//! w_a(s) = beta + int_{sbar}^{s} (1 + alpha t^{-k/(2 h_k)})^{1/k} dt,   s > 0,
//! ```
//!
//! its far-field constant `mu(alpha)`, the inverse map `alpha(c)`, pointwise
//! verification that the induced Hessian stays in the admissibility cone with
//! `sigma_k >= 1`, decay-exponent fits, the exact radial solutions for the
//! symmetric matrix, and a numerical falsifier for the rigidity statement
//! that non-symmetric admissible matrices admit no curved generalized
//! symmetric solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, FitOutcome};
use crate::quad;
use crate::symfun::{esp_prefix, AdmissibleMatrix, HessianParams, SymVector};

const PANEL_TOL: f64 = 1e-12;
const TAIL_ERR_BUDGET: f64 = 1e-12;

/// Profile kernel shared by the subsolution family and the radial exact
/// solutions: first/second derivatives, the integrand, and improper-integral
/// tails for exponent `gamma = k/(2h) > 1`.
#[derive(Debug, Clone, Copy)]
struct ProfileKernel {
    alpha: f64,
    gamma: f64,
    k: usize,
    /// coefficient h in the governing ODE `(w')^k + 2 h s w'' (w')^{k-1} = 1`
    h: f64,
}

impl ProfileKernel {
    fn u(&self, s: f64) -> f64 {
        self.alpha * s.powf(-self.gamma)
    }

    /// `w'(s) = (1 + alpha s^{-gamma})^{1/k}`
    fn d1(&self, s: f64) -> f64 {
        (self.u(s).ln_1p() / self.k as f64).exp()
    }

    /// `w''(s) = -(1/(2 h s)) * alpha/(s^gamma + alpha) * w'(s)`
    fn d2(&self, s: f64) -> f64 {
        let u = self.u(s);
        let ratio = u / (1.0 + u);
        -ratio * self.d1(s) / (2.0 * self.h * s)
    }

    /// `(1 + alpha t^{-gamma})^{1/k} - 1`, cancellation-free.
    fn integrand_minus_one(&self, t: f64) -> f64 {
        (self.u(t).ln_1p() / self.k as f64).exp_m1()
    }

    /// Cutoff beyond which the binomial tail expansion is accurate to
    /// [`TAIL_ERR_BUDGET`]. The alternating-series remainder after the
    /// second-order term is bounded by the first omitted term.
    fn tail_cutoff(&self, from: f64) -> f64 {
        let k = self.k as f64;
        let g = self.gamma;
        let mut cutoff = 1e6_f64.max(1e3 * self.alpha.powf(1.0 / g)).max(2.0 * from);
        let c3 = ((1.0 / k) * (1.0 / k - 1.0) * (1.0 / k - 2.0) / 6.0).abs();
        if c3 > 0.0 {
            let needed =
                (c3 * self.alpha.powi(3) / (TAIL_ERR_BUDGET * (3.0 * g - 1.0))).powf(1.0 / (3.0 * g - 1.0));
            cutoff = cutoff.max(needed);
        }
        cutoff
    }

    /// `int_from^infty ((1 + alpha t^{-gamma})^{1/k} - 1) dt`, finite since
    /// `gamma > 1`: quadrature up to the cutoff plus a two-term analytic tail.
    fn tail_integral(&self, from: f64) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        let k = self.k as f64;
        let g = self.gamma;
        let cutoff = self.tail_cutoff(from);
        let breaks = quad::geometric_breakpoints(from, cutoff, 4.0);
        let (body, _) =
            quad::adaptive_segmented(|t| self.integrand_minus_one(t), &breaks, PANEL_TOL);
        let first = (self.alpha / k) * cutoff.powf(1.0 - g) / (g - 1.0);
        let c2 = (1.0 / k) * (1.0 / k - 1.0) / 2.0;
        let second = c2 * self.alpha * self.alpha * cutoff.powf(1.0 - 2.0 * g) / (2.0 * g - 1.0);
        body + first + second
    }

    /// `int_a^b ((1 + alpha t^{-gamma})^{1/k} - 1) dt` over a finite range.
    fn integral_minus_one(&self, a: f64, b: f64) -> f64 {
        if self.alpha == 0.0 || a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let breaks = quad::geometric_breakpoints(lo, hi, 4.0);
        let (v, _) = quad::adaptive_segmented(|t| self.integrand_minus_one(t), &breaks, PANEL_TOL);
        sign * v
    }

    /// Residual of `(w')^k + 2 h s w'' (w')^{k-1} - 1`, grouped so the unit
    /// terms cancel analytically rather than in floating point.
    fn ode_residual(&self, s: f64) -> f64 {
        let d1 = self.d1(s);
        let head = ((self.k as f64) * d1.ln()).exp_m1();
        let tail = 2.0 * self.h * s * self.d2(s) * d1.powi(self.k as i32 - 1);
        head + tail
    }
}

/// Flat serialization record for a subsolution, used by the CLI and solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsolutionRecord {
    pub n: usize,
    pub k: usize,
    pub a: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub sbar: f64,
    pub hk: f64,
    pub theta: f64,
    pub mu: f64,
}

/// A member of the subsolution family, immutable after construction with its
/// far-field constant `mu(alpha)` cached.
#[derive(Debug, Clone)]
pub struct GeneralizedSubsolution {
    params: HessianParams,
    alpha: f64,
    beta: f64,
    sbar: f64,
    mu: f64,
    kernel: ProfileKernel,
}

impl GeneralizedSubsolution {
    /// `alpha >= 0` (zero degenerates to the affine profile), `sbar > 0`.
    pub fn new(params: HessianParams, alpha: f64, beta: f64, sbar: f64) -> Result<Self> {
        if alpha < 0.0 {
            return Err(Error::NegativeArgument {
                name: "alpha",
                value: alpha,
            });
        }
        if sbar <= 0.0 {
            return Err(Error::NonPositiveArgument {
                name: "sbar",
                value: sbar,
            });
        }
        let kernel = ProfileKernel {
            alpha,
            gamma: params.gamma(),
            k: params.k,
            h: params.hk,
        };
        let mu = beta - sbar + kernel.tail_integral(sbar);
        Ok(Self {
            params,
            alpha,
            beta,
            sbar,
            mu,
            kernel,
        })
    }

    pub fn params(&self) -> &HessianParams {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sbar(&self) -> f64 {
        self.sbar
    }

    /// Cached far-field constant `mu(alpha)`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `s = (1/2) x^T A x` for the diagonal matrix behind this profile.
    pub fn level(&self, x: &[f64]) -> f64 {
        0.5 * self
            .params
            .a
            .entries()
            .iter()
            .zip(x)
            .map(|(&ai, &xi)| ai * xi * xi)
            .sum::<f64>()
    }

    /// `w(s)`: exact at `s = sbar` (returns `beta`) and evaluated as
    /// `beta + (s - sbar) + int (integrand - 1)` so the affine part carries
    /// no quadrature error.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(self.beta + (s - self.sbar) + self.kernel.integral_minus_one(self.sbar, s))
    }

    /// `w((1/2) x^T A x)`.
    pub fn eval_at(&self, x: &[f64]) -> Result<f64> {
        self.eval(self.level(x))
    }

    /// `w'(s) > 1` for `alpha > 0`.
    pub fn d1(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(self.kernel.d1(s))
    }

    /// `w''(s) < 0` for `alpha > 0`.
    pub fn d2(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(self.kernel.d2(s))
    }

    /// `w(s) - s - mu(alpha)`, computed as the (negated) improper tail
    /// integral, which avoids the catastrophic cancellation of forming the
    /// difference directly.
    pub fn far_field_deviation(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(-self.kernel.tail_integral(s))
    }

    /// Residual of the governing ODE `(w')^k + 2 h_k s w'' (w')^{k-1} = 1`.
    pub fn ode_residual(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(self.kernel.ode_residual(s))
    }

    pub fn record(&self) -> SubsolutionRecord {
        SubsolutionRecord {
            n: self.params.n,
            k: self.params.k,
            a: self.params.a.entries().to_vec(),
            alpha: self.alpha,
            beta: self.beta,
            sbar: self.sbar,
            hk: self.params.hk,
            theta: self.params.theta,
            mu: self.mu,
        }
    }

    /// Rebuilds the profile from a flat record, recomputing the cached
    /// quantities.
    pub fn from_record(record: &SubsolutionRecord) -> Result<Self> {
        let adm = AdmissibleMatrix::new(SymVector::new(record.a.clone())?, record.k)?;
        let params = HessianParams::new(&adm)?;
        Self::new(params, record.alpha, record.beta, record.sbar)
    }
}

/// `mu(alpha) = beta - sbar + int_sbar^infty ((1+alpha t^{-gamma})^{1/k} - 1) dt`.
///
/// `mu(0) = beta - sbar` exactly; strictly increasing in `alpha`.
pub fn mu_of_alpha(params: &HessianParams, alpha: f64, beta: f64, sbar: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::NegativeArgument {
            name: "alpha",
            value: alpha,
        });
    }
    if sbar <= 0.0 {
        return Err(Error::NonPositiveArgument {
            name: "sbar",
            value: sbar,
        });
    }
    if alpha == 0.0 {
        return Ok(beta - sbar);
    }
    let kernel = ProfileKernel {
        alpha,
        gamma: params.gamma(),
        k: params.k,
        h: params.hk,
    };
    Ok(beta - sbar + kernel.tail_integral(sbar))
}

/// Inverts `mu` for a prescribed far-field constant: the unique `alpha` with
/// `|mu(alpha) - c| <= 1e-8`, found by doubling until `mu` exceeds `c` and
/// then bisecting. Requires `c > mu(0) = beta - sbar`.
pub fn alpha_of_c(params: &HessianParams, c: f64, beta: f64, sbar: f64) -> Result<f64> {
    let mu0 = beta - sbar;
    if c <= mu0 {
        return Err(Error::TargetBelowRange { target: c, mu0 });
    }
    let mu_at = |alpha: f64| mu_of_alpha(params, alpha, beta, sbar);

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut doublings = 0;
    while mu_at(hi)? < c {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::InvalidParameter(format!(
                "alpha bracketing failed to reach target {c}"
            )));
        }
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let m = mu_at(mid)?;
        if (m - c).abs() <= 1e-8 && (hi - lo) <= 1e-9 * mid.max(1.0) {
            return Ok(mid);
        }
        if m < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Per-point record of the cone checks at a sample.
#[derive(Debug, Clone, Serialize)]
pub struct SampleCheck {
    pub point_index: usize,
    pub s: f64,
    /// `sigma_k - 1 >= 0`, from the cancellation-free rearrangement.
    pub defect: f64,
    /// smallest `sigma_m`, `1 <= m <= k-1` (`f64::INFINITY` when `k = 1`)
    pub min_sigma_m: f64,
}

/// Report from [`verify_subsolution`].
#[derive(Debug, Clone, Serialize)]
pub struct SubsolutionReport {
    pub checked: usize,
    pub skipped_origin: usize,
    pub min_defect: f64,
    pub max_defect: f64,
    pub min_sigma_m: f64,
    /// max disagreement between the rearranged `sigma_k` and the direct
    /// rank-one evaluation, relative to the local scale
    pub max_cross_gap: f64,
    pub violations: Vec<SampleCheck>,
    pub pass: bool,
}

const SIGMA_K_SLACK: f64 = 1e-9;
const SIGMA_M_SLACK: f64 = 1e-9;

/// Evaluates `sigma_m(lambda(D^2 w))` for `m = 1..k` at every sample and
/// checks `sigma_k >= 1 - 1e-9`, `sigma_m >= -1e-9`.
///
/// The assertion path uses the algebraically identical rearrangement
/// `sigma_k - 1 = (u / (2 h_k s)) * sum_i a_i x_i^2 (h_k - A_k^i)`, a sum of
/// nonnegative terms; the direct formula loses all significance at axis
/// points with small `s`, where its two terms reach `1e14` and cancel.
/// Points at the origin are skipped (the profile is singular there).
pub fn verify_subsolution(
    w: &GeneralizedSubsolution,
    samples: &[Vec<f64>],
) -> Result<SubsolutionReport> {
    let params = w.params();
    let n = params.n;
    let k = params.k;
    let a = params.a.entries();
    let hk = params.hk;
    let a_k = params.admissible().a_k_all();

    // sigma_{j;i}(a) for j <= k-1, one leave-one-out prefix pass per i
    let mut deleted_prefix: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut reduced = Vec::with_capacity(n - 1);
        reduced.extend_from_slice(&a[..i]);
        reduced.extend_from_slice(&a[i + 1..]);
        deleted_prefix.push(esp_prefix(&reduced, k.saturating_sub(1)));
    }
    let sigma_prefix = esp_prefix(a, k);

    let mut report = SubsolutionReport {
        checked: 0,
        skipped_origin: 0,
        min_defect: f64::INFINITY,
        max_defect: f64::NEG_INFINITY,
        min_sigma_m: f64::INFINITY,
        max_cross_gap: 0.0,
        violations: Vec::new(),
        pass: true,
    };

    for (point_index, x) in samples.iter().enumerate() {
        if x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let s = w.level(x);
        if s == 0.0 {
            report.skipped_origin += 1;
            continue;
        }
        let u = w.kernel.u(s);
        let ratio = u / (1.0 + u);

        // sigma_k - 1 as a nonnegative sum
        let mut weighted_gap = 0.0;
        for i in 0..n {
            weighted_gap += a[i] * x[i] * x[i] * (hk - a_k[i]);
        }
        let defect = u / (2.0 * hk * s) * weighted_gap;

        // cross-check against the direct rank-one evaluation where it is
        // numerically meaningful
        let d1 = w.kernel.d1(s);
        let d2 = w.kernel.d2(s);
        let direct = crate::spectral::sigma_k_generalized(d1, d2, &params.a, x, k)?;
        let scale = (1.0 + u).max(1.0);
        let gap = ((1.0 + defect) - direct).abs() / scale;
        report.max_cross_gap = report.max_cross_gap.max(gap);

        // sigma_m = d1^m (sigma_m(a) - ratio * W_m / (2 h_k s)), m < k
        let mut min_sigma_m = f64::INFINITY;
        for m in 1..k {
            let mut wm = 0.0;
            for i in 0..n {
                let q = a[i] * x[i];
                wm += deleted_prefix[i][m - 1] * q * q;
            }
            let bracket = sigma_prefix[m] - ratio * wm / (2.0 * hk * s);
            let value = d1.powi(m as i32) * bracket;
            min_sigma_m = min_sigma_m.min(value);
        }

        report.checked += 1;
        report.min_defect = report.min_defect.min(defect);
        report.max_defect = report.max_defect.max(defect);
        report.min_sigma_m = report.min_sigma_m.min(min_sigma_m);

        if defect < -SIGMA_K_SLACK || min_sigma_m < -SIGMA_M_SLACK {
            report.pass = false;
            report.violations.push(SampleCheck {
                point_index,
                s,
                defect,
                min_sigma_m,
            });
        }
    }
    Ok(report)
}

/// Least-squares fit of `log |w(s) - s - mu|` against `log s` on a geometric
/// grid spanning at least three decades with `min(s) >= 10 sbar`. The slope
/// estimates the decay exponent `(2-n) theta / 2`.
pub fn asymptotic_fit(w: &GeneralizedSubsolution, s_grid: &[f64]) -> Result<FitOutcome> {
    if s_grid.len() < 4 {
        return Err(Error::InvalidGrid("need at least 4 grid points".into()));
    }
    let min = s_grid.first().copied().unwrap();
    let max = s_grid.last().copied().unwrap();
    if !s_grid.windows(2).all(|p| p[1] > p[0]) || min <= 0.0 {
        return Err(Error::InvalidGrid(
            "grid must be positive and strictly increasing".into(),
        ));
    }
    if min < 10.0 * w.sbar() {
        return Err(Error::InvalidGrid(format!(
            "min(s) = {min} below 10 * sbar = {}",
            10.0 * w.sbar()
        )));
    }
    if max / min < 1e3 {
        return Err(Error::InvalidGrid("grid must span at least 3 decades".into()));
    }

    let mut xs = Vec::with_capacity(s_grid.len());
    let mut ys = Vec::with_capacity(s_grid.len());
    let mut max_dev = 0.0_f64;
    for &s in s_grid {
        let dev = w.far_field_deviation(s)?.abs();
        max_dev = max_dev.max(dev);
        if dev > 0.0 {
            xs.push(s.ln());
            ys.push(dev.ln());
        }
    }
    if max_dev < 1e-14 || xs.len() < 2 {
        return Ok(FitOutcome::Indeterminate {
            reason: format!(
                "far-field deviation peaks at {max_dev:e}, below the quadrature noise floor"
            ),
        });
    }
    Ok(FitOutcome::Fit(linear_fit(&xs, &ys)?))
}

/// A witness that the generalized symmetric ansatz over-determines the
/// profile curvature when the `A_k^i` are not all equal: two axis points
/// whose saturated equations demand different values of `w''(sbar)`.
#[derive(Debug, Clone, Serialize)]
pub struct RigidityWitness {
    pub axis_lo: usize,
    pub axis_hi: usize,
    pub a_k_lo: f64,
    pub a_k_hi: f64,
    pub point_lo: Vec<f64>,
    pub point_hi: Vec<f64>,
    pub demanded_curvature_lo: f64,
    pub demanded_curvature_hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub n: usize,
    pub k: usize,
    pub a_k: Vec<f64>,
    /// `max_i A_k^i - min_i A_k^i`; zero exactly for the symmetric vector or
    /// for `k = n`
    pub spread: f64,
    pub witness: Option<RigidityWitness>,
}

/// Computes the spread of the `A_k^i` and, when positive, exhibits two axis
/// points where a curved generalized symmetric solution would need two
/// different second derivatives at the same level.
pub fn rigidity_falsifier(adm: &AdmissibleMatrix) -> Result<RigidityReport> {
    let n = adm.n();
    let k = adm.k();
    let a_k = adm.a_k_all();
    let (mut i_lo, mut i_hi) = (0usize, 0usize);
    for (i, &v) in a_k.iter().enumerate() {
        if v < a_k[i_lo] {
            i_lo = i;
        }
        if v > a_k[i_hi] {
            i_hi = i;
        }
    }
    let spread = a_k[i_hi] - a_k[i_lo];

    let witness = if spread > 0.0 {
        // probe level s = 1 with the test slope w' = 2^(1/k); the saturated
        // axis equation 1 = (w')^k + 2 s w'' (w')^{k-1} A_k^i then demands
        // w'' = -1 / (2 (w')^{k-1} A_k^i), which differs between the axes.
        let s_probe = 1.0;
        let d1 = 2f64.powf(1.0 / k as f64);
        let demanded = |aki: f64| -1.0 / (2.0 * s_probe * d1.powi(k as i32 - 1) * aki);
        let axis_point = |i: usize| {
            let mut x = vec![0.0; n];
            x[i] = (2.0 * s_probe / adm.a().entries()[i]).sqrt();
            x
        };
        Some(RigidityWitness {
            axis_lo: i_lo,
            axis_hi: i_hi,
            a_k_lo: a_k[i_lo],
            a_k_hi: a_k[i_hi],
            point_lo: axis_point(i_lo),
            point_hi: axis_point(i_hi),
            demanded_curvature_lo: demanded(a_k[i_lo]),
            demanded_curvature_hi: demanded(a_k[i_hi]),
        })
    } else {
        None
    };

    Ok(RigidityReport {
        n,
        k,
        a_k,
        spread,
        witness,
    })
}

/// Exact radial solution for the symmetric matrix `c* I`:
/// `int_1^s (1 + alpha t^{-n/2})^{1/k} dt`, which satisfies
/// `(w')^k + 2 s (k/n) w'' (w')^{k-1} = 1` identically.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    kernel: ProfileKernel,
}

impl RadialSolution {
    pub fn new(n: usize, k: usize, alpha: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        if k < 1 || k > n {
            return Err(Error::OrderOutOfRange { k: k as i64, n });
        }
        if alpha <= 0.0 {
            return Err(Error::NonPositiveArgument {
                name: "alpha",
                value: alpha,
            });
        }
        Ok(Self {
            n,
            k,
            alpha,
            kernel: ProfileKernel {
                alpha,
                gamma: n as f64 / 2.0,
                k,
                h: k as f64 / n as f64,
            },
        })
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok((s - 1.0) + self.kernel.integral_minus_one(1.0, s))
    }

    pub fn d1(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(self.kernel.d1(s))
    }

    pub fn d2(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(self.kernel.d2(s))
    }

    pub fn ode_residual(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        Ok(self.kernel.ode_residual(s))
    }

    pub fn max_ode_residual(&self, s_grid: &[f64]) -> Result<f64> {
        let mut worst = 0.0_f64;
        for &s in s_grid {
            worst = worst.max(self.ode_residual(s)?.abs());
        }
        Ok(worst)
    }
}

/// Geometric grid of `count` points covering `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}
