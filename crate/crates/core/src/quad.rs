//! Adaptive quadrature on finite intervals with an embedded Gauss(7)/
//! Kronrod(15) pair. Panels are bisected until the embedded-rule discrepancy
//! falls below the per-panel tolerance.

/// Kronrod abscissae (positive half, descending), 15-point rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the embedded 7-point rule (nodes are the odd-indexed
/// Kronrod abscissae plus the center).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod panel: returns `(kronrod, |kronrod - gauss|)`.
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let flo = f(center - dx);
        let fhi = f(center + dx);
        kronrod += WGK[j] * (flo + fhi);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (flo + fhi);
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` (either orientation) bisecting panels until
/// each satisfies the per-panel tolerance. Returns `(value, error_estimate)`.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, panel_tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut stack = vec![(lo, hi, 0u32)];
    while let Some((pa, pb, depth)) = stack.pop() {
        let (value, err) = gk15(&mut f, pa, pb);
        if err <= panel_tol || depth >= MAX_DEPTH {
            total += value;
            err_total += err;
        } else {
            let mid = 0.5 * (pa + pb);
            stack.push((pa, mid, depth + 1));
            stack.push((mid, pb, depth + 1));
        }
    }
    (sign * total, err_total)
}

/// Like [`adaptive`] but with seed breakpoints, for integrands living on a
/// wide geometric range.
pub fn adaptive_segmented(
    mut f: impl FnMut(f64) -> f64,
    breakpoints: &[f64],
    panel_tol: f64,
) -> (f64, f64) {
    let mut total = 0.0;
    let mut err = 0.0;
    for pair in breakpoints.windows(2) {
        let (v, e) = adaptive(&mut f, pair[0], pair[1], panel_tol);
        total += v;
        err += e;
    }
    (total, err)
}

/// Geometric breakpoints covering `[a, b]` with the given ratio.
pub fn geometric_breakpoints(a: f64, b: f64, ratio: f64) -> Vec<f64> {
    debug_assert!(a > 0.0 && b > a && ratio > 1.0);
    let mut points = vec![a];
    let mut t = a;
    loop {
        t *= ratio;
        if t >= b {
            break;
        }
        points.push(t);
    }
    points.push(b);
    points
}
