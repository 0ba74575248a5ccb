//! Discrete Hessians on the lattice: central second differences on the axes,
//! 4-point cross differences for the mixed terms, the closed-form symmetric
//! 3x3 eigenvalue solver, and the derivative of `sigma_k` with respect to the
//! 19 stencil values.

use super::grid::{AnnularGrid, GridField, AXIS_OFFSETS, DIAGONAL_OFFSETS};

/// Packed symmetric 3x3: `[H00, H11, H22, H01, H02, H12]`.
pub type Hess3 = [f64; 6];

pub fn hessian_at(grid: &AnnularGrid, u: &GridField, flat: usize) -> Hess3 {
    let idx = grid.unflatten(flat);
    let h2 = grid.h * grid.h;
    let at = |off: &[i64; 3]| -> f64 {
        let f = grid.offset_flat(idx, off).expect("interior stencil in box");
        u.values[f]
    };
    let center = u.values[flat];
    let mut out = [0.0; 6];
    for d in 0..3 {
        let plus = at(&AXIS_OFFSETS[2 * d]);
        let minus = at(&AXIS_OFFSETS[2 * d + 1]);
        out[d] = (plus - 2.0 * center + minus) / h2;
    }
    // H01, H02, H12 by the cross difference
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    for (slot, &(p, q)) in pairs.iter().enumerate() {
        let mut acc = 0.0;
        for (sp, sq) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
            let mut off = [0i64; 3];
            off[p] = sp;
            off[q] = sq;
            acc += (sp * sq) as f64 * at(&off);
        }
        out[3 + slot] = acc / (4.0 * h2);
    }
    out
}

/// Eigenvalues of a packed symmetric 3x3, ascending, by the trigonometric
/// closed form.
pub fn eigen3(m: &Hess3) -> [f64; 3] {
    let [a, b, c, d, e, f] = *m; // diag a,b,c; off d=H01, e=H02, f=H12
    let p1 = d * d + e * e + f * f;
    if p1 == 0.0 {
        let mut out = [a, b, c];
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return out;
    }
    let q = (a + b + c) / 3.0;
    let p2 = (a - q) * (a - q) + (b - q) * (b - q) + (c - q) * (c - q) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let inv = 1.0 / p;
    let ba = inv * (a - q);
    let bb = inv * (b - q);
    let bc = inv * (c - q);
    let bd = inv * d;
    let be = inv * e;
    let bf = inv * f;
    let det_b = ba * (bb * bc - bf * bf) - bd * (bd * bc - bf * be) + be * (bd * bf - bb * be);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

/// `sigma_k` of the eigenvalues of the packed Hessian.
pub fn sigma_k_of_hessian(m: &Hess3, k: usize) -> f64 {
    let [l1, l2, l3] = eigen3(m);
    match k {
        1 => l1 + l2 + l3,
        2 => l1 * l2 + l1 * l3 + l2 * l3,
        3 => l1 * l2 * l3,
        _ => unreachable!("k in 1..=3 on the grid"),
    }
}

/// Derivative of `sigma_k(lambda(H))` with respect to the six packed entries
/// (the composition through the eigenvalues is the matrix invariant, a
/// polynomial in the entries, so the gradient is exact even at eigenvalue
/// coalescence).
pub fn dsigma_dh(m: &Hess3, k: usize) -> [f64; 6] {
    let [a, b, c, d, e, f] = *m;
    match k {
        1 => [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        2 => [b + c, a + c, a + b, -2.0 * d, -2.0 * e, -2.0 * f],
        3 => [
            b * c - f * f,
            a * c - e * e,
            a * b - d * d,
            2.0 * (e * f - d * c),
            2.0 * (d * f - e * b),
            2.0 * (d * e - f * a),
        ],
        _ => unreachable!("k in 1..=3 on the grid"),
    }
}

/// `sigma_k` of the discrete Hessian at an interior node.
pub fn discrete_sigma_k(grid: &AnnularGrid, u: &GridField, flat: usize, k: usize) -> f64 {
    sigma_k_of_hessian(&hessian_at(grid, u, flat), k)
}

/// The 19 stencil flat-indices of an interior node: itself, 6 axis
/// neighbors, 12 diagonal neighbors.
pub fn stencil_indices(grid: &AnnularGrid, flat: usize) -> [usize; 19] {
    let idx = grid.unflatten(flat);
    let mut out = [0usize; 19];
    out[0] = flat;
    for (i, off) in AXIS_OFFSETS.iter().enumerate() {
        out[1 + i] = grid.offset_flat(idx, off).expect("in box");
    }
    for (i, off) in DIAGONAL_OFFSETS.iter().enumerate() {
        out[7 + i] = grid.offset_flat(idx, off).expect("in box");
    }
    out
}

/// Gradient of `sigma_k(lambda(D^2_h u))` at `flat` with respect to the 19
/// stencil values, ordered as in [`stencil_indices`].
pub fn discrete_sigma_k_gradient(
    grid: &AnnularGrid,
    u: &GridField,
    flat: usize,
    k: usize,
) -> [f64; 19] {
    let h2 = grid.h * grid.h;
    let hess = hessian_at(grid, u, flat);
    let ds = dsigma_dh(&hess, k);
    let mut out = [0.0_f64; 19];
    // center couples to all three axis second differences
    out[0] = -2.0 * (ds[0] + ds[1] + ds[2]) / h2;
    for d in 0..3 {
        out[1 + 2 * d] = ds[d] / h2;
        out[2 + 2 * d] = ds[d] / h2;
    }
    // diagonal neighbors carry the mixed terms; DIAGONAL_OFFSETS is grouped
    // in blocks of four per pair (0,1), (0,2), (1,2) with signs (++,+-,-+,--)
    for (block, &ds_off) in [ds[3], ds[4], ds[5]].iter().enumerate() {
        for (j, (sp, sq)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .enumerate()
        {
            out[7 + 4 * block + j] = ds_off * sp * sq / (4.0 * h2);
        }
    }
    out
}
