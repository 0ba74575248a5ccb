//! Discrete harmonic upper barrier on the inner annulus `E(sbar) \ D`:
//! the 7-point Laplacian with Shortley-Weller arms at both curved walls,
//! Dirichlet data `phi` on the domain wall and the constant `sbar + c` on the
//! shell. Subsolutions of the Hessian equation are subharmonic, so the
//! converged exterior solution must stay below this barrier near the wall.

use crate::domain::{BoundaryData, ConvexDomain};
use crate::error::{Error, Result};
use crate::solver::linsolve::{bicgstab, Csr};

#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    pub h: f64,
    dims: [usize; 3],
    origin: [f64; 3],
    values: Vec<f64>,
    solved_mask: Vec<bool>,
    solved: Vec<usize>,
}

impl HarmonicSolution {
    pub fn solved_count(&self) -> usize {
        self.solved.len()
    }

    pub fn position(&self, flat: usize) -> [f64; 3] {
        let k = flat % self.dims[2];
        let rest = flat / self.dims[2];
        let j = rest % self.dims[1];
        let i = rest / self.dims[1];
        [
            self.origin[0] + self.h * i as f64,
            self.origin[1] + self.h * j as f64,
            self.origin[2] + self.h * k as f64,
        ]
    }

    pub fn solved_nodes(&self) -> impl Iterator<Item = (usize, [f64; 3], f64)> + '_ {
        self.solved
            .iter()
            .map(move |&flat| (flat, self.position(flat), self.values[flat]))
    }

    /// Value at the lattice node nearest to `pos`, if that node was solved.
    pub fn sample(&self, pos: &[f64; 3]) -> Option<f64> {
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let t = ((pos[d] - self.origin[d]) / self.h).round();
            if t < 0.0 || t >= self.dims[d] as f64 {
                return None;
            }
            idx[d] = t as usize;
        }
        let flat = (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2];
        if self.solved_mask[flat] {
            Some(self.values[flat])
        } else {
            None
        }
    }
}

/// Solves the discrete Laplace problem on `E(sbar) \ D` with wall data `phi`
/// and shell data `sbar + c`, to relative residual 1e-10.
pub fn harmonic_upper_barrier(
    domain: &ConvexDomain,
    phi: &BoundaryData,
    a: &[f64],
    sbar: f64,
    c: f64,
    h: f64,
) -> Result<HarmonicSolution> {
    if domain.n() != 3 || a.len() != 3 {
        return Err(Error::InvalidParameter(
            "the harmonic barrier is specific to three dimensions".into(),
        ));
    }
    let level = |x: &[f64]| 0.5 * (a[0] * x[0] * x[0] + a[1] * x[1] * x[1] + a[2] * x[2] * x[2]);
    let shell_value = sbar + c;

    let mut dims = [0usize; 3];
    let mut origin = [0.0_f64; 3];
    for i in 0..3 {
        let extent = (2.0 * sbar / a[i]).sqrt() + 2.0 * h;
        let half = (extent / h).ceil() as usize;
        dims[i] = 2 * half + 1;
        origin[i] = -(half as f64) * h;
    }
    let total = dims[0] * dims[1] * dims[2];
    let position = |flat: usize| -> [f64; 3] {
        let k = flat % dims[2];
        let rest = flat / dims[2];
        let j = rest % dims[1];
        let i = rest / dims[1];
        [
            origin[0] + h * i as f64,
            origin[1] + h * j as f64,
            origin[2] + h * k as f64,
        ]
    };
    let in_region = |x: &[f64]| domain.gauge(x) > 1.0 && level(x) < sbar;

    let mut solved_mask = vec![false; total];
    let mut solved = Vec::new();
    let mut eq_of = vec![-1_i64; total];
    for flat in 0..total {
        let x = position(flat);
        if in_region(&x) {
            solved_mask[flat] = true;
            eq_of[flat] = solved.len() as i64;
            solved.push(flat);
        }
    }
    if solved.len() < 32 {
        return Err(Error::InvalidParameter(format!(
            "annulus resolves only {} nodes at h = {h}; refine the spacing",
            solved.len()
        )));
    }

    // boundary intercept along an axis arm, by bisection on the region
    // indicator; returns (arm length fraction, boundary value). The segment
    // endpoint is the neighbor's exact lattice position so the indicator
    // agrees with the solved mask at theta = 1 (the naive `x + h` can round
    // to the other side of the shell at knife-edge nodes).
    let intercept = |x: &[f64; 3], endpoint: &[f64; 3], dir: usize| -> (f64, f64) {
        let probe = |theta: f64| -> [f64; 3] {
            let mut p = *x;
            p[dir] = x[dir] + theta * (endpoint[dir] - x[dir]);
            p
        };
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if in_region(&probe(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        let p = probe(hi.max(theta));
        // crossing the shell or the wall?
        let value = if level(&p) >= sbar {
            shell_value
        } else {
            let (cp, _) = domain.closest_boundary_point(&p);
            phi.value(&cp)
        };
        (theta.max(1e-3), value)
    };

    let stride = [dims[1] * dims[2], dims[2], 1usize];
    let mut row_ptr = vec![0u32];
    let mut col = Vec::new();
    let mut val = Vec::new();
    let mut rhs = vec![0.0_f64; solved.len()];

    for (eq, &flat) in solved.iter().enumerate() {
        let x = position(flat);
        let mut diag = 0.0_f64;
        for dir in 0..3 {
            // arm lengths and couplings in the two directions along `dir`
            let mut arm = [(1.0_f64, None::<usize>, 0.0_f64); 2];
            for (side, sign) in [(0usize, 1.0_f64), (1usize, -1.0_f64)] {
                let neighbor = if sign > 0.0 {
                    flat + stride[dir]
                } else {
                    flat.wrapping_sub(stride[dir])
                };
                let along = (flat / stride[dir]) % dims[dir];
                let neighbor_ok = if sign > 0.0 {
                    along < dims[dir] - 1
                } else {
                    along > 0
                };
                let neighbor_in = neighbor_ok && neighbor < total && solved_mask[neighbor];
                if neighbor_in {
                    arm[side] = (1.0, Some(neighbor), 0.0);
                } else {
                    let endpoint = if neighbor_ok && neighbor < total {
                        position(neighbor)
                    } else {
                        let mut p = x;
                        p[dir] += sign * h;
                        p
                    };
                    let (theta, value) = intercept(&x, &endpoint, dir);
                    arm[side] = (theta, None, value);
                }
            }
            let (lp, np, vp) = arm[0];
            let (lm, nm, vm) = arm[1];
            let denom = 0.5 * (lp + lm) * h * h;
            let cp = 1.0 / (lp * denom);
            let cm = 1.0 / (lm * denom);
            diag -= cp + cm;
            match np {
                Some(node) => {
                    col.push(eq_of[node] as u32);
                    val.push(cp);
                }
                None => rhs[eq] -= cp * vp,
            }
            match nm {
                Some(node) => {
                    col.push(eq_of[node] as u32);
                    val.push(cm);
                }
                None => rhs[eq] -= cm * vm,
            }
        }
        col.push(eq as u32);
        val.push(diag);
        row_ptr.push(col.len() as u32);
    }

    let matrix = Csr {
        n: solved.len(),
        row_ptr,
        col,
        val,
    };
    let mut solution = vec![0.0; solved.len()];
    bicgstab(&matrix, &rhs, &mut solution, 1e-10, 200_000)?;

    let mut values = vec![0.0; total];
    for (eq, &flat) in solved.iter().enumerate() {
        values[flat] = solution[eq];
    }
    Ok(HarmonicSolution {
        h,
        dims,
        origin,
        values,
        solved_mask,
        solved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Polynomial;

    fn ball_setup() -> (ConvexDomain, [f64; 3], f64) {
        let domain = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let cstar = 0.5773502691896258;
        (domain, [cstar; 3], 2.0 * 0.5 * cstar) // sbar at twice the wall level
    }

    #[test]
    fn constant_data_gives_constant_field() {
        let (domain, a, sbar) = ball_setup();
        let c = 3.0;
        // phi equal to the shell constant: the solution is that constant
        let phi = BoundaryData::from_polynomial(Polynomial::constant(3, sbar + c), &domain)
            .unwrap();
        let sol = harmonic_upper_barrier(&domain, &phi, &a, sbar, c, 0.08).unwrap();
        for (_, _, v) in sol.solved_nodes() {
            assert!((v - (sbar + c)).abs() < 1e-8);
        }
    }

    #[test]
    fn discrete_maximum_principle() {
        let (domain, a, sbar) = ball_setup();
        let c = 3.0;
        let phi =
            BoundaryData::from_polynomial(Polynomial::constant(3, 1.0), &domain).unwrap();
        let sol = harmonic_upper_barrier(&domain, &phi, &a, sbar, c, 0.08).unwrap();
        let (lo, hi) = (1.0_f64.min(sbar + c), 1.0_f64.max(sbar + c));
        for (_, _, v) in sol.solved_nodes() {
            assert!(v >= lo - 1e-8 && v <= hi + 1e-8, "{v} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn ball_matches_radial_harmonic_to_second_order() {
        let (domain, a, sbar) = ball_setup();
        let c = 3.0;
        let phi0 = 1.0;
        let phi =
            BoundaryData::from_polynomial(Polynomial::constant(3, phi0), &domain).unwrap();
        // exact radial harmonic A + B/r through the two boundary values
        let r2 = (2.0 * sbar / a[0]).sqrt();
        let outer_value = sbar + c;
        let bb = (phi0 - outer_value) / (1.0 - 1.0 / r2);
        let aa = phi0 - bb;
        let exact = |r: f64| aa + bb / r;

        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let sol = harmonic_upper_barrier(&domain, &phi, &a, sbar, c, h).unwrap();
            let mut worst = 0.0_f64;
            for (_, pos, v) in sol.solved_nodes() {
                let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
                worst = worst.max((v - exact(r)).abs());
            }
            errs.push(worst);
        }
        assert!(
            errs[1] <= errs[0] / 2.5,
            "expected near-quadratic decay, got {errs:?}"
        );
        assert!(errs[1] < 5e-3, "{errs:?}");
    }
}
