//! Quadratic boundary barriers on strictly convex domains, their pointwise
//! envelope, the constants of the existence argument, and the
//! sub/supersolution sandwich that pins the exterior solution.
//!
//! A barrier at a boundary point `xi` is the quadratic
//!
//! ```text
//! w_xi(x) = phi(xi) + (1/2) ((x - xbar)^T A (x - xbar) - (xi - xbar)^T A (xi - xbar))
//! ```
//!
//! with `xbar` chosen (via a tilt parameter `t` along the inward normal) so
//! that `w_xi < phi` on the rest of the boundary. Since `A` is admissible,
//! each barrier solves the Hessian equation exactly, and the envelope
//! `max_xi w_xi` is a subsolution attaining the boundary data.

use serde::Serialize;

use crate::domain::{BoundaryData, ConvexDomain};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sample;
use crate::subsolution::{alpha_of_c, GeneralizedSubsolution};
use crate::symfun::HessianParams;

/// Sublevel set `E(s) = { x : (1/2) x^T diag(a) x < s }`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    a: Vec<f64>,
    s: f64,
}

impl Ellipsoid {
    pub fn new(a: Vec<f64>, s: f64) -> Result<Self> {
        if s <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "s", value: s });
        }
        for (index, &v) in a.iter().enumerate() {
            if v <= 0.0 {
                return Err(Error::NotPositive { index, value: v });
            }
        }
        Ok(Self { a, s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn level(&self, x: &[f64]) -> f64 {
        linalg::half_quad_diag(&self.a, x, &vec![0.0; self.a.len()])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.level(x) < self.s
    }

    pub fn boundary_from_direction(&self, v: &[f64]) -> Vec<f64> {
        let lv = self.level(v);
        let r = (self.s / lv).sqrt();
        v.iter().map(|&vi| r * vi).collect()
    }

    pub fn boundary_mesh(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.a.len();
        let dirs: Vec<Vec<f64>> = if n == 3 {
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        } else {
            let mut rng = sample::rng_from_seed(seed);
            (0..count).map(|_| sample::unit_direction(&mut rng, n)).collect()
        };
        dirs.iter().map(|d| self.boundary_from_direction(d)).collect()
    }
}

/// One boundary barrier, self-contained with its diagonal quadratic form.
#[derive(Debug, Clone)]
pub struct Barrier {
    pub xi: Vec<f64>,
    pub xbar: Vec<f64>,
    pub t: f64,
    pub phi_xi: f64,
    a: Vec<f64>,
    offset: f64,
}

impl Barrier {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.phi_xi + linalg::half_quad_diag(&self.a, x, &self.xbar) - self.offset
    }

    /// `max (w_xi - phi)` over boundary samples away from the contact point.
    pub fn max_separation_on(
        &self,
        samples: &[Vec<f64>],
        phi: &BoundaryData,
        exclude_radius: f64,
    ) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for y in samples {
            let dist: f64 = y
                .iter()
                .zip(&self.xi)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist <= exclude_radius {
                continue;
            }
            worst = worst.max(self.eval(y) - phi.value(y));
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct BarrierOpts {
    /// separation margin scale: `eps_sep = eps_scale * (1 + ||phi||_C2)`
    pub eps_scale: f64,
    /// boundary samples used for the far-field separation check
    pub separation_samples: usize,
    pub max_doublings: u32,
    pub mesh_seed: u64,
}

impl Default for BarrierOpts {
    fn default() -> Self {
        Self {
            eps_scale: 1e-8,
            separation_samples: 2048,
            max_doublings: 40,
            mesh_seed: 1,
        }
    }
}

/// Builds the barrier at `xi`: rotates the frame so the inward normal is the
/// last coordinate, solves `A_rot xbar = (-grad_tan phi, t)`, and doubles the
/// tilt `t` from 1 until `w_xi - phi <= -eps_sep` on the far boundary mesh
/// while the cap around `xi` is covered by the quadratic bound
/// `C (|x'|^2 + rho^2) - t rho < 0`.
pub fn build_barrier(
    domain: &ConvexDomain,
    phi: &BoundaryData,
    a: &[f64],
    xi: &[f64],
    opts: &BarrierOpts,
) -> Result<Barrier> {
    let n = a.len();
    let nu = domain.outward_normal(xi);
    let rows = linalg::householder_to_minus_last(&nu);
    let a_rot = linalg::rotate_diagonal(&rows, a);
    let g_world = phi.ambient_gradient(xi);
    let g_rot = linalg::apply(&rows, &g_world);
    let phi_xi = phi.value(xi);
    let delta = domain.delta();
    let eps_sep = opts.eps_scale * (1.0 + phi.c2_bound());

    // the tilt-independent part of (w - phi) on the boundary:
    // G(y) = phi(xi) + (1/2) y_rot^T A_rot y_rot + grad_tan . y_rot' - phi(y)
    // so that (w - phi)(y) = G(y) - t * y_rot_n
    let g_of = |y: &[f64]| -> (f64, f64, f64) {
        let rel: Vec<f64> = y.iter().zip(xi).map(|(&p, &q)| p - q).collect();
        let yr = linalg::apply(&rows, &rel);
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += yr[i] * a_rot[i][j] * yr[j];
            }
        }
        let lin: f64 = (0..n - 1).map(|i| g_rot[i] * yr[i]).sum();
        let tangent_norm: f64 = (0..n - 1).map(|i| yr[i] * yr[i]).sum::<f64>().sqrt();
        (phi_xi + 0.5 * quad + lin - phi.value(y), yr[n - 1], tangent_norm)
    };

    // cap probes: graph heights over the tangent chart up to radius delta
    let mut cap_quad_bound = 0.0_f64; // sup G / (|x'|^2 + rho^2)
    let mut graph_upper = 0.0_f64; // sup rho / |x'|^2
    let mut graph_lower = f64::INFINITY; // inf rho / |x'|^2
    {
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for d in 0..(n - 1) {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; n - 1];
                v[d] = sign;
                dirs.push(v);
            }
        }
        for d in 0..(n - 1) {
            for d2 in (d + 1)..(n - 1) {
                let mut v = vec![0.0; n - 1];
                v[d] = std::f64::consts::FRAC_1_SQRT_2;
                v[d2] = std::f64::consts::FRAC_1_SQRT_2;
                dirs.push(v.clone());
                v[d2] = -std::f64::consts::FRAC_1_SQRT_2;
                dirs.push(v);
            }
        }
        for dir in &dirs {
            for j in 0..6 {
                let r = delta * 0.5_f64.powi(j);
                let xp: Vec<f64> = dir.iter().map(|&v| v * r).collect();
                if let Some(rho) = domain.graph_height(xi, &rows, &xp) {
                    let y: Vec<f64> = {
                        let mut local = xp.clone();
                        local.push(rho);
                        let shift: Vec<f64> = (0..n)
                            .map(|i| (0..n).map(|l| rows[l][i] * local[l]).sum())
                            .collect();
                        xi.iter().zip(shift).map(|(&p, q)| p + q).collect()
                    };
                    let (g, _, _) = g_of(&y);
                    cap_quad_bound = cap_quad_bound.max(g / (r * r + rho * rho));
                    graph_upper = graph_upper.max(rho / (r * r));
                    graph_lower = graph_lower.min(rho / (r * r));
                }
            }
        }
    }
    let delta_eff = delta.min(graph_lower);
    if !(delta_eff > 0.0) {
        return Err(Error::ConvexityViolation {
            xi: xi.to_vec(),
            t_max: 0.0,
        });
    }
    let cap_chart_height = 2.0 * graph_upper * delta * delta;

    // far samples: everything outside the graph cap, with G and the rotated
    // height cached so each tilt candidate costs O(1) per sample
    let mesh = domain.boundary_mesh(opts.separation_samples, opts.mesh_seed);
    let mut far: Vec<(f64, f64)> = Vec::with_capacity(mesh.len());
    for y in &mesh {
        let close: f64 = y
            .iter()
            .zip(xi)
            .map(|(&p, &q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        if close <= 1e-12 * domain.diameter() {
            continue; // the contact point itself
        }
        let (g, height, tangent_norm) = g_of(y);
        let in_cap = tangent_norm < delta && height >= 0.0 && height <= cap_chart_height;
        if !in_cap {
            far.push((g, height));
        }
    }

    let cap_threshold = cap_quad_bound * (1.0 + graph_upper * graph_upper * delta * delta)
        / delta_eff;

    let mut t = 1.0_f64;
    for _ in 0..=opts.max_doublings {
        let far_ok = far.iter().all(|&(g, height)| g - t * height <= -eps_sep);
        let cap_ok = t > cap_threshold;
        if far_ok && cap_ok {
            let mut rhs = vec![0.0; n];
            for i in 0..(n - 1) {
                rhs[i] = -g_rot[i];
            }
            rhs[n - 1] = t;
            let xbar_rot = linalg::solve_lu(a_rot.clone(), rhs)?;
            // xbar = xi + R^T xbar_rot (R is symmetric orthogonal)
            let shift: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|l| rows[l][i] * xbar_rot[l]).sum())
                .collect();
            let xbar: Vec<f64> = xi.iter().zip(shift).map(|(&p, q)| p + q).collect();
            let offset = linalg::half_quad_diag(a, xi, &xbar);
            return Ok(Barrier {
                xi: xi.to_vec(),
                xbar,
                t,
                phi_xi,
                a: a.to_vec(),
                offset,
            });
        }
        t *= 2.0;
    }
    Err(Error::ConvexityViolation {
        xi: xi.to_vec(),
        t_max: t,
    })
}

/// Pointwise maximum of barriers over a finite boundary mesh; a locally
/// Lipschitz subsolution equal to `phi` at the mesh points and `<= phi`
/// between them.
#[derive(Debug, Clone)]
pub struct BarrierEnvelope {
    barriers: Vec<Barrier>,
}

impl BarrierEnvelope {
    /// Default mesh size `32 n^2`.
    pub fn default_mesh_count(n: usize) -> usize {
        32 * n * n
    }

    pub fn build(
        domain: &ConvexDomain,
        phi: &BoundaryData,
        a: &[f64],
        mesh: &[Vec<f64>],
        opts: &BarrierOpts,
    ) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::InvalidParameter("empty barrier mesh".into()));
        }
        let barriers = mesh
            .iter()
            .map(|xi| build_barrier(domain, phi, a, xi, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { barriers })
    }

    pub fn from_barriers(barriers: Vec<Barrier>) -> Self {
        Self { barriers }
    }

    pub fn barriers(&self) -> &[Barrier] {
        &self.barriers
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.barriers
            .iter()
            .map(|b| b.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The constants fixed in the course of the existence argument.
#[derive(Debug, Clone, Serialize)]
pub struct ProofConstants {
    /// minimum of the barriers over the closed annulus; anchors the
    /// subsolution family
    pub beta: f64,
    /// maximum of the barriers over the closed annulus
    pub bhat: f64,
    pub sbar: f64,
    /// `2 * sbar`
    pub shat: f64,
    /// tilt of the family needed to clear the envelope on `E(shat)`
    pub alphahat: f64,
    /// far-field constants above this admit the sandwich
    pub cstar_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct ConstantsOpts {
    pub annulus_samples: usize,
    pub boundary_samples: usize,
    pub seed: u64,
}

impl Default for ConstantsOpts {
    fn default() -> Self {
        Self {
            annulus_samples: 4096,
            boundary_samples: 2048,
            seed: 1,
        }
    }
}

/// Uniform-along-rays samples of the closed annulus `E(sbar) \ D`.
fn annulus_samples(
    domain: &ConvexDomain,
    shell: &Ellipsoid,
    count: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let n = domain.n();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v = sample::unit_direction(rng, n);
        let t_inner = 1.0 / domain.gauge(&v);
        let t_outer = (shell.s() / shell.level(&v)).sqrt();
        if t_outer <= t_inner {
            continue;
        }
        let t = rng.random_range(t_inner..t_outer);
        out.push(v.iter().map(|&vi| t * vi).collect());
    }
    out
}

use rand::Rng;

/// Computes `beta`, `bhat` over the annulus, fixes `shat = 2 sbar`, finds
/// `alphahat` by doubling until the subsolution clears the envelope on
/// `E(shat)`, and returns the resulting admissibility threshold for the
/// far-field constant.
///
/// Requires the closure of the domain to lie inside `E(sbar)`.
pub fn proof_constants(
    domain: &ConvexDomain,
    phi: &BoundaryData,
    params: &HessianParams,
    sbar: f64,
    envelope: &BarrierEnvelope,
    opts: &ConstantsOpts,
) -> Result<ProofConstants> {
    let a = params.a.entries();
    let shell = Ellipsoid::new(a.to_vec(), sbar)?;

    let boundary = domain.boundary_mesh(opts.boundary_samples, opts.seed);
    let max_s = boundary
        .iter()
        .map(|x| shell.level(x))
        .fold(f64::NEG_INFINITY, f64::max);
    if max_s >= sbar {
        return Err(Error::DomainNotContained { max_s, sbar });
    }
    for x in &boundary {
        let gap = envelope.eval(x) - phi.value(x);
        if gap > 1e-9 * (1.0 + phi.c2_bound()) {
            return Err(Error::ContractViolation {
                what: "envelope <= phi on the boundary (envelope built for different data?)".into(),
                point: x.clone(),
                gap,
            });
        }
    }

    let mut rng = sample::rng_from_seed(opts.seed);
    let mut samples = boundary;
    samples.extend(shell.boundary_mesh(opts.boundary_samples, opts.seed));
    samples.extend(annulus_samples(domain, &shell, opts.annulus_samples, &mut rng));

    let mut beta_raw = f64::INFINITY;
    let mut bhat = f64::NEG_INFINITY;
    for barrier in envelope.barriers() {
        for x in &samples {
            let v = barrier.eval(x);
            beta_raw = beta_raw.min(v);
            bhat = bhat.max(v);
        }
    }
    // the continuum minimum can undercut any finite sample; anchor slightly
    // below it
    let beta = beta_raw - 1e-6 * (1.0 + beta_raw.abs());

    let shat = 2.0 * sbar;
    let shat_shell = Ellipsoid::new(a.to_vec(), shat)?;
    let shat_mesh = shat_shell.boundary_mesh(opts.boundary_samples, opts.seed);
    let envelope_max = shat_mesh
        .iter()
        .map(|x| envelope.eval(x))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut alphahat = 1.0_f64;
    let mut cleared = false;
    for _ in 0..200 {
        let w = GeneralizedSubsolution::new(params.clone(), alphahat, beta, sbar)?;
        if w.eval(shat)? > envelope_max + 1e-9 * (1.0 + envelope_max.abs()) {
            cleared = true;
            break;
        }
        alphahat *= 2.0;
    }
    if !cleared {
        return Err(Error::InvalidParameter(
            "alphahat doubling failed to clear the envelope".into(),
        ));
    }

    let mu_hat = GeneralizedSubsolution::new(params.clone(), alphahat, beta, sbar)?.mu();
    let margin = 1e-6 * (1.0 + bhat.abs());
    Ok(ProofConstants {
        beta,
        bhat,
        sbar,
        shat,
        alphahat,
        cstar_threshold: (bhat + margin).max(mu_hat),
    })
}

/// The sandwich pair: lower function `max(w_alpha(c), envelope)` inside
/// `E(shat)` and `w_alpha(c)` outside; upper function the far-field quadratic
/// `(1/2) x^T A x + c`.
#[derive(Debug, Clone)]
pub struct Sandwich {
    omega: GeneralizedSubsolution,
    envelope: BarrierEnvelope,
    a: Vec<f64>,
    shat: f64,
    c: f64,
}

#[derive(Debug, Clone)]
pub struct SandwichOpts {
    pub check_samples: usize,
    pub seed: u64,
}

impl Default for SandwichOpts {
    fn default() -> Self {
        Self {
            check_samples: 10_000,
            seed: 2,
        }
    }
}

impl Sandwich {
    /// Assembles the pair for a far-field constant `c` above the threshold
    /// and verifies the ordering contracts on sampled points; any violation
    /// is a construction error carrying the offending point.
    pub fn build(
        domain: &ConvexDomain,
        phi: &BoundaryData,
        params: &HessianParams,
        c: f64,
        envelope: &BarrierEnvelope,
        constants: &ProofConstants,
        opts: &SandwichOpts,
    ) -> Result<Self> {
        if c <= constants.cstar_threshold {
            return Err(Error::InvalidParameter(format!(
                "far-field constant {c} not above the threshold {}",
                constants.cstar_threshold
            )));
        }
        let alpha = alpha_of_c(params, c, constants.beta, constants.sbar)?;
        let omega = GeneralizedSubsolution::new(params.clone(), alpha, constants.beta, constants.sbar)?;
        let a = params.a.entries().to_vec();
        let sandwich = Self {
            omega,
            envelope: envelope.clone(),
            a,
            shat: constants.shat,
            c,
        };

        // subsolution clears the envelope on the matching shell (the lower
        // function is the plain profile there and beyond)
        let shat_shell = Ellipsoid::new(sandwich.a.clone(), constants.shat)?;
        for x in shat_shell.boundary_mesh(1024, opts.seed) {
            let w_env = sandwich.envelope.eval(&x);
            let w_omega = sandwich.omega.eval_at(&x)?;
            if w_omega <= w_env {
                return Err(Error::ContractViolation {
                    what: "omega > envelope on the shat shell".into(),
                    point: x.clone(),
                    gap: w_omega - w_env,
                });
            }
        }

        // profile below beta below envelope on the inner annulus
        let sbar_shell = Ellipsoid::new(sandwich.a.clone(), constants.sbar)?;
        let mut rng = sample::rng_from_seed(opts.seed);
        for x in annulus_samples(domain, &sbar_shell, 2048, &mut rng) {
            let w_omega = sandwich.omega.eval_at(&x)?;
            let w_env = sandwich.envelope.eval(&x);
            if w_omega > constants.beta + 1e-12 * (1.0 + constants.beta.abs()) {
                return Err(Error::ContractViolation {
                    what: "omega <= beta on the inner annulus".into(),
                    point: x.clone(),
                    gap: w_omega - constants.beta,
                });
            }
            if constants.beta > w_env {
                return Err(Error::ContractViolation {
                    what: "beta <= envelope on the inner annulus".into(),
                    point: x.clone(),
                    gap: constants.beta - w_env,
                });
            }
        }

        // boundary attainment at the barrier contact points
        for barrier in sandwich.envelope.barriers() {
            let lower = sandwich.lower(&barrier.xi)?;
            let scale = 1.0 + barrier.phi_xi.abs();
            if (lower - barrier.phi_xi).abs() > 1e-12 * scale {
                return Err(Error::ContractViolation {
                    what: "lower = phi at barrier mesh points".into(),
                    point: barrier.xi.clone(),
                    gap: lower - barrier.phi_xi,
                });
            }
            let upper = sandwich.upper(&barrier.xi);
            if upper <= phi.value(&barrier.xi) {
                return Err(Error::ContractViolation {
                    what: "upper > phi on the boundary".into(),
                    point: barrier.xi.clone(),
                    gap: upper - phi.value(&barrier.xi),
                });
            }
        }

        // global ordering on log-uniform radii
        let n = params.n;
        for _ in 0..opts.check_samples {
            let v = sample::unit_direction(&mut rng, n);
            let r_inner = 1.0 / domain.gauge(&v);
            let r = r_inner * sample::log_uniform(&mut rng, 1.0, 1e3);
            let x: Vec<f64> = v.iter().map(|&vi| r * vi).collect();
            let lo = sandwich.lower(&x)?;
            let hi = sandwich.upper(&x);
            if lo > hi {
                return Err(Error::ContractViolation {
                    what: "lower <= upper".into(),
                    point: x.clone(),
                    gap: lo - hi,
                });
            }
        }

        Ok(sandwich)
    }

    pub fn level(&self, x: &[f64]) -> f64 {
        0.5 * self
            .a
            .iter()
            .zip(x)
            .map(|(&ai, &xi)| ai * xi * xi)
            .sum::<f64>()
    }

    /// `max(w_alpha(c), envelope)` inside `E(shat)`, `w_alpha(c)` beyond.
    pub fn lower(&self, x: &[f64]) -> Result<f64> {
        let s = self.level(x);
        let w = self.omega.eval(s)?;
        if s >= self.shat {
            Ok(w)
        } else {
            Ok(w.max(self.envelope.eval(x)))
        }
    }

    /// `(1/2) x^T A x + c`.
    pub fn upper(&self, x: &[f64]) -> f64 {
        self.level(x) + self.c
    }

    pub fn omega(&self) -> &GeneralizedSubsolution {
        &self.omega
    }

    pub fn envelope(&self) -> &BarrierEnvelope {
        &self.envelope
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn shat(&self) -> f64 {
        self.shat
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PolyTerm, Polynomial};
    use crate::symfun::{symmetric_admissible, AdmissibleMatrix, SymVector};

    fn symmetric_params(n: usize, k: usize) -> HessianParams {
        HessianParams::new(&symmetric_admissible(n, k).unwrap()).unwrap()
    }

    fn const_phi(domain: &ConvexDomain, value: f64) -> BoundaryData {
        BoundaryData::from_polynomial(Polynomial::constant(domain.n(), value), domain).unwrap()
    }

    #[test]
    fn ball_constant_phi_needs_no_tilt_growth() {
        // unit ball, phi = 0, A = c* I: (w - phi) = (c* - t) rho on the
        // boundary, negative for every t >= 1
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let phi = const_phi(&domain, 0.0);
        let params = symmetric_params(3, 2);
        let xi = domain.boundary_from_direction(&[0.0, 0.3, 1.0]);
        let b = build_barrier(&domain, &phi, params.a.entries(), &xi, &BarrierOpts::default())
            .unwrap();
        assert_eq!(b.t, 1.0);
        assert!((b.eval(&xi) - 0.0).abs() < 1e-12);
        let samples = domain.boundary_mesh(4096, 9);
        let worst = b.max_separation_on(&samples, &phi, 1e-9);
        assert!(worst < 0.0, "separation failed: {worst}");
    }

    #[test]
    fn linear_phi_is_absorbed() {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let poly = Polynomial::new(
            3,
            vec![
                PolyTerm { coeff: 0.3, powers: vec![1, 0, 0] },
                PolyTerm { coeff: -0.2, powers: vec![0, 1, 0] },
                PolyTerm { coeff: 0.1, powers: vec![0, 0, 1] },
            ],
        )
        .unwrap();
        let phi = BoundaryData::from_polynomial(poly, &domain).unwrap();
        let params = symmetric_params(3, 2);
        let xi = domain.boundary_from_direction(&[1.0, 1.0, 0.2]);
        let b = build_barrier(&domain, &phi, params.a.entries(), &xi, &BarrierOpts::default())
            .unwrap();
        assert!((b.eval(&xi) - phi.value(&xi)).abs() < 1e-12);
        let samples = domain.boundary_mesh(4096, 9);
        assert!(b.max_separation_on(&samples, &phi, 1e-9) < 0.0);
    }

    #[test]
    fn ellipsoid_quadratic_phi_separation() {
        let domain = ConvexDomain::ellipsoid(vec![1.0, 1.4, 0.8]).unwrap();
        let poly = Polynomial::new(
            3,
            vec![
                PolyTerm { coeff: 0.5, powers: vec![2, 0, 0] },
                PolyTerm { coeff: -0.3, powers: vec![0, 1, 1] },
                PolyTerm { coeff: 1.0, powers: vec![0, 0, 0] },
            ],
        )
        .unwrap();
        let phi = BoundaryData::from_polynomial(poly, &domain).unwrap();
        let adm = AdmissibleMatrix::normalized(
            SymVector::new(vec![0.6, 1.0, 1.6]).unwrap(),
            2,
        )
        .unwrap();
        let params = HessianParams::new(&adm).unwrap();
        let mesh = domain.boundary_mesh(32, 5);
        let dense = domain.boundary_mesh(4096, 17);
        for xi in &mesh {
            let b = build_barrier(&domain, &phi, params.a.entries(), xi, &BarrierOpts::default())
                .unwrap();
            assert!(b.t < 2.0_f64.powi(40));
            let worst = b.max_separation_on(&dense, &phi, 1e-9 * domain.diameter());
            assert!(worst < 0.0, "xi={xi:?}: worst separation {worst}");
        }
    }

    #[test]
    fn envelope_of_single_barrier_is_that_barrier() {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let phi = const_phi(&domain, 1.0);
        let params = symmetric_params(3, 2);
        let xi = domain.boundary_from_direction(&[1.0, 0.0, 0.0]);
        let env = BarrierEnvelope::build(
            &domain,
            &phi,
            params.a.entries(),
            &[xi.clone()],
            &BarrierOpts::default(),
        )
        .unwrap();
        for x in domain.boundary_mesh(64, 3) {
            assert_eq!(env.eval(&x), env.barriers()[0].eval(&x));
        }
    }

    #[test]
    fn envelope_gap_shrinks_under_mesh_refinement() {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let phi = const_phi(&domain, 0.5);
        let params = symmetric_params(3, 2);
        let probe = domain.boundary_mesh(2000, 23);
        let mut previous_gap = f64::INFINITY;
        for count in [32, 128, 512] {
            let mesh = domain.boundary_mesh(count, 1);
            let env =
                BarrierEnvelope::build(&domain, &phi, params.a.entries(), &mesh, &BarrierOpts::default())
                    .unwrap();
            let gap = probe
                .iter()
                .map(|x| phi.value(x) - env.eval(x))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(gap >= -1e-12, "envelope must stay below phi");
            assert!(gap < previous_gap, "refinement must shrink the gap");
            previous_gap = gap;
        }
        // quadratic contact: quadrupling the mesh should shrink the gap by
        // roughly 4; allow a factor 2 of slack
        assert!(previous_gap < 0.05);
    }

    fn ball_pipeline(c_above_threshold: f64) -> (ConvexDomain, BoundaryData, HessianParams, BarrierEnvelope, ProofConstants, Sandwich) {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let phi = const_phi(&domain, 1.0);
        let params = symmetric_params(3, 2);
        let sbar = 1.5 * 0.5 * params.cstar; // 1.5x the boundary level
        let mesh = domain.boundary_mesh(BarrierEnvelope::default_mesh_count(3), 1);
        let env = BarrierEnvelope::build(&domain, &phi, params.a.entries(), &mesh, &BarrierOpts::default())
            .unwrap();
        let constants =
            proof_constants(&domain, &phi, &params, sbar, &env, &ConstantsOpts::default()).unwrap();
        let c = constants.cstar_threshold + c_above_threshold;
        let sandwich = Sandwich::build(
            &domain,
            &phi,
            &params,
            c,
            &env,
            &constants,
            &SandwichOpts::default(),
        )
        .unwrap();
        (domain, phi, params, env, constants, sandwich)
    }

    #[test]
    fn constants_are_ordered() {
        let (_, phi, _, _, constants, _) = ball_pipeline(1.0);
        let phi0 = 1.0;
        assert!(constants.beta <= phi0 + 1e-9);
        assert!(phi0 <= constants.bhat + 1e-9);
        let mu0 = constants.beta - constants.sbar;
        assert!(mu0 < constants.beta);
        assert!(constants.beta <= constants.bhat);
        assert!(constants.bhat < constants.cstar_threshold);
        let _ = phi;
    }

    #[test]
    fn constants_reject_domain_not_contained() {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let phi = const_phi(&domain, 0.0);
        let params = symmetric_params(3, 2);
        let mesh = domain.boundary_mesh(32, 1);
        let env = BarrierEnvelope::build(&domain, &phi, params.a.entries(), &mesh, &BarrierOpts::default())
            .unwrap();
        // sbar below the boundary level of the unit ball
        let tiny = 0.1 * params.cstar;
        assert!(matches!(
            proof_constants(&domain, &phi, &params, tiny, &env, &ConstantsOpts::default()),
            Err(Error::DomainNotContained { .. })
        ));
    }

    #[test]
    fn sandwich_orders_and_attains_boundary() {
        let (domain, phi, _, _, _, sandwich) = ball_pipeline(1.0);
        // on the boundary: lower = phi, upper > phi
        for barrier in sandwich.envelope().barriers().iter().step_by(7) {
            let xi = &barrier.xi;
            assert!((sandwich.lower(xi).unwrap() - phi.value(xi)).abs() < 1e-12);
            assert!(sandwich.upper(xi) > phi.value(xi));
        }
        // far field: gap shrinks at the predicted rate |x|^(theta(2-n)) = 1/|x|
        let dir = [0.6, -0.64, 0.48];
        let gap_at = |r: f64| {
            let x: Vec<f64> = dir.iter().map(|&d| r * d).collect();
            sandwich.upper(&x) - sandwich.lower(&x).unwrap()
        };
        let (g10, g100) = (gap_at(10.0), gap_at(100.0));
        assert!(g10 > 0.0 && g100 > 0.0);
        let ratio = g10 / g100;
        assert!(
            (ratio - 10.0).abs() < 2.5,
            "decay ratio {ratio} (gaps {g10:e}, {g100:e})"
        );
        let _ = domain;
    }

    #[test]
    fn sandwich_is_continuous_across_the_switch_shell() {
        let (_, _, _, _, constants, sandwich) = ball_pipeline(1.0);
        let shell = Ellipsoid::new(sandwich.a().to_vec(), constants.shat).unwrap();
        for x in shell.boundary_mesh(128, 5) {
            let on = sandwich.lower(&x).unwrap();
            let just_in: Vec<f64> = x.iter().map(|&v| v * 0.999).collect();
            let inner = sandwich.lower(&just_in).unwrap();
            let omega_in = sandwich.omega().eval_at(&just_in).unwrap();
            assert_eq!(inner, omega_in, "lower = omega in a neighborhood of the shell");
            assert!((on - sandwich.omega().eval_at(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_rejects_c_below_threshold() {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let phi = const_phi(&domain, 1.0);
        let params = symmetric_params(3, 2);
        let sbar = 1.5 * 0.5 * params.cstar;
        let mesh = domain.boundary_mesh(64, 1);
        let env = BarrierEnvelope::build(&domain, &phi, params.a.entries(), &mesh, &BarrierOpts::default())
            .unwrap();
        let constants =
            proof_constants(&domain, &phi, &params, sbar, &env, &ConstantsOpts::default()).unwrap();
        assert!(Sandwich::build(
            &domain,
            &phi,
            &params,
            constants.cstar_threshold - 0.5,
            &env,
            &constants,
            &SandwichOpts::default(),
        )
        .is_err());
    }

    #[test]
    fn lower_function_is_monotone_in_c() {
        let (_, _, _, _, _, s1) = ball_pipeline(1.0);
        let (_, _, _, _, _, s2) = ball_pipeline(2.5);
        assert!(s2.omega().alpha() > s1.omega().alpha());
        for r in [2.0, 5.0, 20.0, 200.0] {
            let x = [r, 0.1 * r, -0.4 * r];
            assert!(s2.lower(&x).unwrap() > s1.lower(&x).unwrap());
        }
    }
}
