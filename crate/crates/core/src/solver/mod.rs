//! Desk-scale finite-difference solver for the truncated exterior Dirichlet
//! problem in three dimensions: damped Newton on the residual
//! `sigma_k(lambda(D^2_h u)) - 1` with Dirichlet data fixed, initialized at
//! the sandwich lower function and projected onto the sandwich after every
//! step, which is the discrete stand-in for the supremum over the admissible
//! family.
//!
//! The inner Dirichlet collar carries boundary data extended off the wall
//! along the normal, `phi(cp(x)) + dist(x) * q(cp(x))`; the normal slope `q`
//! is bootstrapped from the current solution over a few outer rounds, which
//! keeps the collar consistent to second order and preserves the O(h^2)
//! convergence of the interior stencil.

pub mod grid;
pub mod harmonic;
pub mod linsolve;
pub mod stencil;

pub use grid::{AnnularGrid, CollarNode, GridField, NodeTag};
pub use harmonic::{harmonic_upper_barrier, HarmonicSolution};

use std::time::Instant;

use serde::Serialize;

use crate::barrier::Sandwich;
use crate::domain::BoundaryData;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, FitOutcome};
use crate::subsolution::GeneralizedSubsolution;
use crate::symfun::HessianParams;

#[derive(Debug, Clone)]
pub struct SolveOpts {
    /// residual infinity-norm target; defaults to `max(1e-8, h^2)`
    pub residual_tol: Option<f64>,
    pub max_iterations: usize,
    /// relative tolerance handed to the linear solver each Newton step
    pub forcing: f64,
    pub max_linear_iters: usize,
    /// outer rounds refreshing the collar's normal slope
    pub bootstrap_rounds: usize,
}

impl Default for SolveOpts {
    fn default() -> Self {
        Self {
            residual_tol: None,
            max_iterations: 500,
            forcing: 1e-2,
            max_linear_iters: 50_000,
            bootstrap_rounds: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// 2-norms of the accepted iterates, monotone by the backtracking rule
    pub residual_history: Vec<f64>,
    pub sandwich_violations: usize,
    pub decay_slope: Option<f64>,
    pub runtime_secs: f64,
    pub converged: bool,
    /// interior nodes whose discrete eigenvalues left the admissibility cone
    /// (tolerance -1e-6 on each sigma_j)
    pub off_cone_nodes: usize,
    pub notes: Vec<String>,
}

/// Solves the exterior problem on the grid with outer data taken from the
/// sandwich profile.
pub fn solve(
    grid: &AnnularGrid,
    k: usize,
    phi: &BoundaryData,
    sandwich: &Sandwich,
    opts: &SolveOpts,
) -> Result<(GridField, SolveReport)> {
    let omega = sandwich.omega().clone();
    solve_with_outer(grid, k, phi, sandwich, &|x| omega.eval_at(x), opts)
}

/// Same, with explicit outer Dirichlet data (the radial fixture passes its
/// exact profile so truncation carries no error of its own).
pub fn solve_with_outer(
    grid: &AnnularGrid,
    k: usize,
    phi: &BoundaryData,
    sandwich: &Sandwich,
    outer: &dyn Fn(&[f64]) -> Result<f64>,
    opts: &SolveOpts,
) -> Result<(GridField, SolveReport)> {
    if k < 1 || k > 3 {
        return Err(Error::OrderOutOfRange { k: k as i64, n: 3 });
    }
    let started = Instant::now();
    let tol = opts
        .residual_tol
        .unwrap_or_else(|| (1e-8_f64).max(grid.h * grid.h));
    let total = grid.node_count();

    // sandwich bounds at every participating node
    let mut lower = vec![f64::NEG_INFINITY; total];
    let mut upper = vec![f64::INFINITY; total];
    for flat in 0..total {
        if grid.tag(flat) == NodeTag::Outside {
            continue;
        }
        let pos = grid.position(flat);
        lower[flat] = sandwich.lower(&pos)?;
        upper[flat] = sandwich.upper(&pos);
    }

    // initial iterate: the lower function, with Dirichlet data overlaid
    let mut u = GridField::zeros(grid);
    for flat in 0..total {
        match grid.tag(flat) {
            NodeTag::Interior => u.values[flat] = lower[flat],
            NodeTag::DirichletOuter => {
                let pos = grid.position(flat);
                u.values[flat] = outer(&pos)?.clamp(lower[flat], upper[flat]);
            }
            _ => {}
        }
    }

    // collar slope: initialized from the lower function, refreshed from the
    // solved field each round
    let mut q: Vec<f64> = Vec::with_capacity(grid.collar().len());
    for node in grid.collar() {
        let probe = |d: f64| -> Result<f64> {
            let p: Vec<f64> = node
                .boundary_point
                .iter()
                .zip(&node.normal)
                .map(|(&b, &nu)| b + d * nu)
                .collect();
            sandwich.lower(&p)
        };
        let e = 0.5 * grid.h;
        q.push((probe(2.0 * e)? - probe(e)?) / e);
    }
    apply_collar(grid, phi, &q, &lower, &upper, &mut u);

    let mut report = SolveReport {
        iterations: 0,
        final_residual: f64::INFINITY,
        residual_history: Vec::new(),
        sandwich_violations: 0,
        decay_slope: None,
        runtime_secs: 0.0,
        converged: false,
        off_cone_nodes: 0,
        notes: Vec::new(),
    };

    let shape = JacobianShape::build(grid);
    let mut rounds = opts.bootstrap_rounds.max(1);
    if grid.collar().is_empty() {
        rounds = 1;
    }
    for round in 0..rounds {
        let converged = newton_loop(grid, k, &mut u, &lower, &upper, tol, opts, &shape, &mut report)?;
        if !converged {
            report.notes.push(format!(
                "Newton stalled in bootstrap round {round}; residual {:.3e}",
                report.final_residual
            ));
            break;
        }
        if round + 1 == rounds {
            break;
        }
        // refresh the collar slope from the current field
        let mut max_shift = 0.0_f64;
        let new_q = estimate_collar_slopes(grid, &u);
        for (qi, &ni) in q.iter_mut().zip(&new_q) {
            max_shift = max_shift.max((*qi - ni).abs());
            *qi = ni;
        }
        apply_collar(grid, phi, &q, &lower, &upper, &mut u);
        if max_shift * 2.0 * grid.h < 0.01 * grid.h * grid.h {
            break;
        }
    }

    // final diagnostics
    report.final_residual = residual_inf(grid, k, &u);
    report.converged = report.final_residual <= tol;
    let slack = 1e-12;
    report.sandwich_violations = (0..total)
        .filter(|&flat| grid.tag(flat) != NodeTag::Outside)
        .filter(|&flat| {
            u.values[flat] < lower[flat] - slack || u.values[flat] > upper[flat] + slack
        })
        .count();
    report.off_cone_nodes = grid
        .interior()
        .iter()
        .filter(|&&flat| {
            let eigs = stencil::eigen3(&stencil::hessian_at(grid, &u, flat));
            let s1 = eigs[0] + eigs[1] + eigs[2];
            let s2 = eigs[0] * eigs[1] + eigs[0] * eigs[2] + eigs[1] * eigs[2];
            let s3 = eigs[0] * eigs[1] * eigs[2];
            let sigmas = [s1, s2, s3];
            sigmas[..k].iter().any(|&s| s < -1e-6)
        })
        .count();
    report.runtime_secs = started.elapsed().as_secs_f64();
    Ok((u, report))
}

fn apply_collar(
    grid: &AnnularGrid,
    phi: &BoundaryData,
    q: &[f64],
    lower: &[f64],
    upper: &[f64],
    u: &mut GridField,
) {
    for (node, &qi) in grid.collar().iter().zip(q) {
        let value = phi.value(&node.boundary_point) + node.distance * qi;
        u.values[node.flat] = value.clamp(lower[node.flat], upper[node.flat]);
    }
}

/// One-sided quadratic fit of the field along the outward normal, giving the
/// normal derivative at the wall. Sample offsets stay clear of the collar so
/// only solved values enter.
fn estimate_collar_slopes(grid: &AnnularGrid, u: &GridField) -> Vec<f64> {
    let offsets = [2.5, 3.5, 4.5];
    grid.collar()
        .iter()
        .map(|node| {
            let mut samples = [0.0_f64; 3];
            for (slot, &m) in offsets.iter().enumerate() {
                let p = [
                    node.boundary_point[0] + m * grid.h * node.normal[0],
                    node.boundary_point[1] + m * grid.h * node.normal[1],
                    node.boundary_point[2] + m * grid.h * node.normal[2],
                ];
                samples[slot] = grid.sample_trilinear(u, &p);
            }
            // derivative at distance 0 of the quadratic through the samples
            let t = [offsets[0] * grid.h, offsets[1] * grid.h, offsets[2] * grid.h];
            let m = vec![
                vec![1.0, t[0], t[0] * t[0]],
                vec![1.0, t[1], t[1] * t[1]],
                vec![1.0, t[2], t[2] * t[2]],
            ];
            match crate::linalg::solve_lu(m, samples.to_vec()) {
                Ok(coeffs) => coeffs[1],
                Err(_) => 0.0,
            }
        })
        .collect()
}

fn residual_vec(grid: &AnnularGrid, k: usize, u: &GridField, out: &mut [f64]) {
    for (eq, &flat) in grid.interior().iter().enumerate() {
        out[eq] = stencil::discrete_sigma_k(grid, u, flat, k) - 1.0;
    }
}

fn residual_inf(grid: &AnnularGrid, k: usize, u: &GridField) -> f64 {
    grid.interior()
        .iter()
        .map(|&flat| (stencil::discrete_sigma_k(grid, u, flat, k) - 1.0).abs())
        .fold(0.0, f64::max)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fixed sparsity of the Newton systems: one row per interior node, columns
/// at the stencil members that are themselves unknowns.
struct JacobianShape {
    row_ptr: Vec<u32>,
    col: Vec<u32>,
    /// per CSR entry, which of the 19 stencil slots feeds it
    slot: Vec<u8>,
}

impl JacobianShape {
    fn build(grid: &AnnularGrid) -> Self {
        let rows = grid.interior().len();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col = Vec::new();
        let mut slot = Vec::new();
        row_ptr.push(0u32);
        for &flat in grid.interior() {
            let stencil_nodes = stencil::stencil_indices(grid, flat);
            for (s, &node) in stencil_nodes.iter().enumerate() {
                let eq = grid.eq_index(node);
                if eq >= 0 {
                    col.push(eq as u32);
                    slot.push(s as u8);
                }
            }
            row_ptr.push(col.len() as u32);
        }
        Self { row_ptr, col, slot }
    }

    fn fill(&self, grid: &AnnularGrid, k: usize, u: &GridField, val: &mut Vec<f64>) {
        val.clear();
        val.reserve(self.col.len());
        for (row, &flat) in grid.interior().iter().enumerate() {
            let grad = stencil::discrete_sigma_k_gradient(grid, u, flat, k);
            for idx in self.row_ptr[row] as usize..self.row_ptr[row + 1] as usize {
                val.push(grad[self.slot[idx] as usize]);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn newton_loop(
    grid: &AnnularGrid,
    k: usize,
    u: &mut GridField,
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    opts: &SolveOpts,
    shape: &JacobianShape,
    report: &mut SolveReport,
) -> Result<bool> {
    let rows = grid.interior().len();
    let mut residual = vec![0.0; rows];
    let mut delta = vec![0.0; rows];
    let mut candidate_res = vec![0.0; rows];
    let mut val: Vec<f64> = Vec::new();

    // clamp onto the sandwich before measuring anything
    for &flat in grid.interior() {
        u.values[flat] = u.values[flat].clamp(lower[flat], upper[flat]);
    }
    residual_vec(grid, k, u, &mut residual);
    let mut r2 = norm2(&residual);
    report.residual_history.push(r2);

    for _ in 0..opts.max_iterations {
        let r_inf = residual.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        if r_inf <= tol {
            report.final_residual = r_inf;
            return Ok(true);
        }
        if report.iterations >= opts.max_iterations {
            break;
        }
        report.iterations += 1;

        shape.fill(grid, k, u, &mut val);
        let jac = linsolve::Csr {
            n: rows,
            row_ptr: shape.row_ptr.clone(),
            col: shape.col.clone(),
            val: std::mem::take(&mut val),
        };
        let rhs: Vec<f64> = residual.iter().map(|&r| -r).collect();
        let outcome = linsolve::bicgstab(&jac, &rhs, &mut delta, opts.forcing, opts.max_linear_iters);
        val = jac.val;
        if let Err(Error::LinearSolveFailed { detail, .. }) = &outcome {
            let off_cone = grid
                .interior()
                .iter()
                .filter(|&&flat| {
                    let eigs = stencil::eigen3(&stencil::hessian_at(grid, u, flat));
                    !crate::symfun::gamma_k_member(
                        &crate::symfun::SymVector::new(eigs.to_vec()).unwrap(),
                        k,
                    )
                    .unwrap_or(false)
                })
                .count();
            return Err(Error::LinearSolveFailed {
                detail: detail.clone(),
                off_cone_nodes: off_cone,
            });
        }
        outcome?;

        // backtracking on the clamped candidate
        let mut step = 1.0_f64;
        let mut accepted = false;
        while step >= 2.0_f64.powi(-20) {
            let snapshot: Vec<f64> = grid.interior().iter().map(|&f| u.values[f]).collect();
            for (i, &flat) in grid.interior().iter().enumerate() {
                u.values[flat] =
                    (u.values[flat] + step * delta[i]).clamp(lower[flat], upper[flat]);
            }
            residual_vec(grid, k, u, &mut candidate_res);
            let c2 = norm2(&candidate_res);
            if c2 <= (1.0 - 1e-4 * step) * r2 {
                accepted = true;
                std::mem::swap(&mut residual, &mut candidate_res);
                r2 = c2;
                report.residual_history.push(r2);
                break;
            }
            for (i, &flat) in grid.interior().iter().enumerate() {
                u.values[flat] = snapshot[i];
            }
            step *= 0.5;
        }
        if !accepted {
            report.final_residual = residual.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            return Ok(false);
        }
    }
    report.final_residual = residual.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    Ok(report.final_residual <= tol)
}

/// Log-log regression of `|u - ((1/2) x^T A x + c)|` against `|x|` over the
/// outer third of the annulus, skipping nodes below the discretization floor
/// `10 h^2`.
pub fn decay_rate(grid: &AnnularGrid, u: &GridField, c: f64) -> FitOutcome {
    let mut r_min = f64::INFINITY;
    let mut r_max = 0.0_f64;
    for &flat in grid.interior() {
        let pos = grid.position(flat);
        let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    let cut = r_min + 2.0 / 3.0 * (r_max - r_min);
    let floor = 10.0 * grid.h * grid.h;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &flat in grid.interior() {
        let pos = grid.position(flat);
        let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
        if r < cut {
            continue;
        }
        let diff = (u.values[flat] - (grid.level(&pos) + c)).abs();
        if diff >= floor {
            xs.push(r.ln());
            ys.push(diff.ln());
        }
    }
    if xs.len() < 16 {
        return FitOutcome::Indeterminate {
            reason: format!(
                "only {} tail nodes above the discretization floor {floor:.2e}",
                xs.len()
            ),
        };
    }
    match linear_fit(&xs, &ys) {
        Ok(fit) => FitOutcome::Fit(fit),
        Err(e) => FitOutcome::Indeterminate {
            reason: e.to_string(),
        },
    }
}

/// The symmetric benchmark: unit ball, constant boundary data, `A = c* I`.
/// The exact exterior solution is the member of the radial family matching
/// `phi0` on the sphere with far-field constant exactly `c`.
#[derive(Debug, Clone)]
pub struct RadialFixture {
    pub params: HessianParams,
    pub phi0: f64,
    pub c: f64,
    /// level of the unit sphere, `c*/2`
    pub s_boundary: f64,
    pub exact: GeneralizedSubsolution,
}

impl RadialFixture {
    pub fn new(k: usize, phi0: f64, c: f64, sbar: f64) -> Result<Self> {
        let params = HessianParams::new(&crate::symfun::symmetric_admissible(3, k)?)?;
        let s0 = 0.5 * params.cstar;
        if c <= phi0 - s0 {
            return Err(Error::TargetBelowRange {
                target: c,
                mu0: phi0 - s0,
            });
        }
        // anchor-independent form of the matching condition:
        // tail(s0) = c - phi0 + s0, strictly increasing in alpha
        let target = c - phi0 + s0;
        let tail_at = |alpha: f64| -> Result<f64> {
            let w = GeneralizedSubsolution::new(params.clone(), alpha, 0.0, sbar)?;
            Ok(-w.far_field_deviation(s0)?)
        };
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut guard = 0;
        while tail_at(hi)? < target {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::InvalidParameter(
                    "fixture bracketing failed".into(),
                ));
            }
        }
        let mut alpha = 0.5 * (lo + hi);
        for _ in 0..200 {
            alpha = 0.5 * (lo + hi);
            let t = tail_at(alpha)?;
            if (t - target).abs() <= 1e-9 && (hi - lo) <= 1e-10 * alpha.max(1.0) {
                break;
            }
            if t < target {
                lo = alpha;
            } else {
                hi = alpha;
            }
        }
        let probe = GeneralizedSubsolution::new(params.clone(), alpha, 0.0, sbar)?;
        let beta = phi0 - probe.eval(s0)?;
        let exact = GeneralizedSubsolution::new(params.clone(), alpha, beta, sbar)?;
        debug_assert!((exact.mu() - c).abs() < 1e-7, "mu = {}", exact.mu());
        Ok(Self {
            params,
            phi0,
            c,
            s_boundary: s0,
            exact,
        })
    }

    pub fn exact_value(&self, x: &[f64]) -> Result<f64> {
        self.exact.eval_at(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{
        proof_constants, BarrierEnvelope, BarrierOpts, ConstantsOpts, Sandwich, SandwichOpts,
    };
    use crate::domain::{ConvexDomain, Polynomial};

    struct Fixture {
        domain: ConvexDomain,
        phi: BoundaryData,
        sandwich: Sandwich,
        fixture: RadialFixture,
    }

    fn build_fixture(k: usize, c_extra: f64) -> Fixture {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let phi0 = 1.0;
        let phi =
            BoundaryData::from_polynomial(Polynomial::constant(3, phi0), &domain).unwrap();
        let params = HessianParams::new(&crate::symfun::symmetric_admissible(3, k).unwrap())
            .unwrap();
        let sbar = 1.5 * 0.5 * params.cstar;
        let mesh = domain.boundary_mesh(BarrierEnvelope::default_mesh_count(3), 1);
        let env = BarrierEnvelope::build(
            &domain,
            &phi,
            params.a.entries(),
            &mesh,
            &BarrierOpts::default(),
        )
        .unwrap();
        let constants =
            proof_constants(&domain, &phi, &params, sbar, &env, &ConstantsOpts::default())
                .unwrap();
        let c = constants.cstar_threshold + c_extra;
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
        let fixture = RadialFixture::new(k, phi0, c, sbar).unwrap();
        Fixture {
            domain,
            phi,
            sandwich,
            fixture,
        }
    }

    #[test]
    fn fixture_matches_boundary_and_far_field() {
        let f = build_fixture(2, 1.0);
        let s0 = f.fixture.s_boundary;
        assert!((f.fixture.exact.eval(s0).unwrap() - 1.0).abs() < 1e-9);
        assert!((f.fixture.exact.mu() - f.fixture.c).abs() < 1e-7);
        // exact solution sits inside the sandwich
        for r in [1.05, 1.3, 2.0, 2.4] {
            let x = [r * 0.6, r * 0.64, -r * 0.48];
            let v = f.fixture.exact_value(&x).unwrap();
            assert!(v >= f.sandwich.lower(&x).unwrap() - 1e-10);
            assert!(v <= f.sandwich.upper(&x) + 1e-10);
        }
    }

    #[test]
    fn radial_fixture_solve_converges_second_order() {
        let f = build_fixture(2, 1.0);
        let mut errors = Vec::new();
        for h in [0.2, 0.1] {
            let grid =
                AnnularGrid::build(&f.domain, f.sandwich.a(), 1.8, h).unwrap();
            let outer = |x: &[f64]| f.fixture.exact_value(x);
            let (u, report) = solve_with_outer(
                &grid,
                2,
                &f.phi,
                &f.sandwich,
                &outer,
                &SolveOpts {
                    residual_tol: Some(1e-8),
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(report.converged, "report: {report:?}");
            assert_eq!(report.sandwich_violations, 0);
            assert_eq!(report.off_cone_nodes, 0);
            let mut err = 0.0_f64;
            for &flat in grid.interior() {
                let pos = grid.position(flat);
                let exact = f.fixture.exact_value(&pos).unwrap();
                err = err.max((u.values[flat] - exact).abs());
            }
            errors.push(err);
        }
        let ratio = errors[0] / errors[1];
        assert!(
            ratio >= 3.5,
            "refinement ratio {ratio} from errors {errors:?}"
        );
    }

    #[test]
    fn poisson_case_matches_direct_linear_solve() {
        let f = build_fixture(1, 1.0);
        let grid = AnnularGrid::build(&f.domain, f.sandwich.a(), 1.8, 0.15).unwrap();
        let outer = |x: &[f64]| f.fixture.exact_value(x);
        let opts = SolveOpts {
            residual_tol: Some(1e-10),
            ..Default::default()
        };
        let (u, report) = solve_with_outer(&grid, 1, &f.phi, &f.sandwich, &outer, &opts).unwrap();
        assert!(report.converged);

        // direct linear solve of the same system with the same boundary data
        let shape = JacobianShape::build(&grid);
        let mut val = Vec::new();
        shape.fill(&grid, 1, &u, &mut val);
        let jac = linsolve::Csr {
            n: grid.interior().len(),
            row_ptr: shape.row_ptr.clone(),
            col: shape.col.clone(),
            val,
        };
        // rhs: 1 - contribution of Dirichlet neighbors under the Laplacian
        let mut ghost = u.clone();
        for &flat in grid.interior() {
            ghost.values[flat] = 0.0;
        }
        let mut rhs = vec![0.0; grid.interior().len()];
        for (eq, &flat) in grid.interior().iter().enumerate() {
            rhs[eq] = 1.0 - stencil::discrete_sigma_k(&grid, &ghost, flat, 1);
        }
        let mut direct = vec![0.0; rhs.len()];
        linsolve::bicgstab(&jac, &rhs, &mut direct, 1e-12, 100_000).unwrap();
        for (eq, &flat) in grid.interior().iter().enumerate() {
            assert!(
                (direct[eq] - u.values[flat]).abs() < 1e-9 * (1.0 + direct[eq].abs()),
                "node {eq}: {} vs {}",
                direct[eq],
                u.values[flat]
            );
        }
    }

    #[test]
    fn outer_shift_moves_solution_monotonically() {
        let f = build_fixture(2, 1.0);
        let grid = AnnularGrid::build(&f.domain, f.sandwich.a(), 1.8, 0.2).unwrap();
        let opts = SolveOpts {
            residual_tol: Some(1e-9),
            ..Default::default()
        };
        let outer_base = |x: &[f64]| f.fixture.exact_value(x);
        let (u1, _) = solve_with_outer(&grid, 2, &f.phi, &f.sandwich, &outer_base, &opts).unwrap();
        let eps = 1e-3;
        let outer_up = |x: &[f64]| f.fixture.exact_value(x).map(|v| v + eps);
        let (u2, _) = solve_with_outer(&grid, 2, &f.phi, &f.sandwich, &outer_up, &opts).unwrap();
        for &flat in grid.interior() {
            let d = u2.values[flat] - u1.values[flat];
            assert!(
                (-1e-8..=eps + 1e-8).contains(&d),
                "shift {d} outside [0, eps]"
            );
        }
    }

    #[test]
    fn decay_rate_on_the_radial_tail() {
        // pure profile on a wide coarse grid: slope ~ -theta (n-2) = -1
        let f = build_fixture(2, 2.0);
        let grid = AnnularGrid::build(&f.domain, f.sandwich.a(), 17.0, 0.35).unwrap();
        let mut u = GridField::zeros(&grid);
        for flat in 0..grid.node_count() {
            if grid.tag(flat) == NodeTag::Outside {
                continue;
            }
            let pos = grid.position(flat);
            u.values[flat] = f.fixture.exact_value(&pos).unwrap();
        }
        match decay_rate(&grid, &u, f.fixture.c) {
            FitOutcome::Fit(fit) => {
                assert!(
                    (fit.slope + 1.0).abs() <= 0.15,
                    "slope {} should be near -1",
                    fit.slope
                );
            }
            FitOutcome::Indeterminate { reason } => panic!("indeterminate: {reason}"),
        }
    }
}
