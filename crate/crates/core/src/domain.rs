//! Strictly convex bounded domains (ellipsoids and superquadrics, optionally
//! rotated), with boundary sampling, normals, local graph charts, and
//! polynomial boundary data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sample;

/// Shape in its local axis-aligned frame: `sum |x_i / d_i|^e <= 1` with
/// `e = 2` for an ellipsoid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Shape {
    Ellipsoid { semi_axes: Vec<f64> },
    Superquadric { semi_axes: Vec<f64>, exponent: f64 },
}

impl Shape {
    fn semi_axes(&self) -> &[f64] {
        match self {
            Shape::Ellipsoid { semi_axes } => semi_axes,
            Shape::Superquadric { semi_axes, .. } => semi_axes,
        }
    }

    fn exponent(&self) -> f64 {
        match self {
            Shape::Ellipsoid { .. } => 2.0,
            Shape::Superquadric { exponent, .. } => *exponent,
        }
    }
}

/// A smooth bounded strictly convex open set containing the origin, with a
/// quantified convexity modulus `delta`: near any boundary point, the local
/// graph satisfies `rho(x') >= delta |x'|^2` for `|x'| < delta`.
#[derive(Debug, Clone)]
pub struct ConvexDomain {
    shape: Shape,
    /// frame rows: local = frame * world
    frame: Option<Vec<Vec<f64>>>,
    delta: f64,
    diameter: f64,
    n: usize,
}

impl ConvexDomain {
    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        Self::with_shape(Shape::Ellipsoid { semi_axes })
    }

    pub fn with_shape(shape: Shape) -> Result<Self> {
        let axes = shape.semi_axes();
        let n = axes.len();
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        for (index, &d) in axes.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositive { index, value: d });
            }
        }
        let e = shape.exponent();
        if e < 2.0 {
            return Err(Error::InvalidParameter(format!(
                "superquadric exponent {e} below 2 gives an unbounded-curvature boundary"
            )));
        }
        let d_min = axes.iter().cloned().fold(f64::INFINITY, f64::min);
        let d_max = axes.iter().cloned().fold(0.0_f64, f64::max);
        let delta = if e == 2.0 {
            // the ellipsoid graph obeys rho >= (kappa_min/2) |x'|^2 globally
            // in its chart, with kappa_min = d_min / d_max^2
            0.5 * d_min / (d_max * d_max)
        } else {
            // curvature degenerates at the axis caps; a sampled estimate is
            // the best quantification available (and may legitimately fail
            // the barrier construction)
            let probe = 0.5 * d_min / (d_max * d_max);
            probe * 8.0 / (2.0_f64).powf(e)
        };
        Ok(Self {
            shape,
            frame: None,
            delta,
            diameter: 2.0 * d_max,
            n,
        })
    }

    /// Attaches an orthogonal frame: local coordinates are `frame * world`.
    pub fn with_frame(mut self, frame: Vec<Vec<f64>>) -> Result<Self> {
        let n = self.n;
        if frame.len() != n || frame.iter().any(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: frame.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                let g = linalg::dot(&frame[i], &frame[j]);
                if (g - id).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(
                        "domain frame is not orthogonal".into(),
                    ));
                }
            }
        }
        self.frame = Some(frame);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn contains_origin(&self) -> bool {
        true
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    fn to_local(&self, x: &[f64]) -> Vec<f64> {
        match &self.frame {
            Some(f) => linalg::apply(f, x),
            None => x.to_vec(),
        }
    }

    fn to_world(&self, xl: &[f64]) -> Vec<f64> {
        match &self.frame {
            Some(f) => {
                let n = self.n;
                (0..n).map(|i| (0..n).map(|j| f[j][i] * xl[j]).sum()).collect()
            }
            None => xl.to_vec(),
        }
    }

    /// Minkowski gauge: `< 1` inside, `1` on the boundary.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let xl = self.to_local(x);
        let e = self.shape.exponent();
        let axes = self.shape.semi_axes();
        let s: f64 = xl
            .iter()
            .zip(axes)
            .map(|(&v, &d)| (v.abs() / d).powf(e))
            .sum();
        s.powf(1.0 / e)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) < 1.0
    }

    /// Boundary point along the ray through `v != 0`.
    pub fn boundary_from_direction(&self, v: &[f64]) -> Vec<f64> {
        let g = self.gauge(v);
        v.iter().map(|&vi| vi / g).collect()
    }

    /// Unit outward normal at a boundary point.
    pub fn outward_normal(&self, x: &[f64]) -> Vec<f64> {
        let xl = self.to_local(x);
        let e = self.shape.exponent();
        let axes = self.shape.semi_axes();
        let grad_local: Vec<f64> = xl
            .iter()
            .zip(axes)
            .map(|(&v, &d)| e * (v.abs() / d).powf(e - 1.0) * v.signum() / d)
            .collect();
        let g = self.to_world(&grad_local);
        let norm = linalg::norm(&g);
        g.into_iter().map(|v| v / norm).collect()
    }

    /// Quasi-uniform boundary mesh. In three dimensions a Fibonacci sphere
    /// drives the directions; otherwise the coordinate axes plus seeded
    /// uniform directions.
    pub fn boundary_mesh(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let dirs = if self.n == 3 {
            fibonacci_sphere(count)
        } else {
            let mut rng = sample::rng_from_seed(seed);
            let mut dirs = Vec::with_capacity(count);
            for i in 0..self.n {
                for sign in [1.0, -1.0] {
                    let mut d = vec![0.0; self.n];
                    d[i] = sign;
                    dirs.push(d);
                }
            }
            while dirs.len() < count {
                dirs.push(sample::unit_direction(&mut rng, self.n));
            }
            dirs.truncate(count);
            dirs
        };
        dirs.iter()
            .map(|d| self.boundary_from_direction(d))
            .collect()
    }

    /// Height `rho >= 0` of the boundary graph over the tangent chart at
    /// `xi`: the chart maps `x'` to `xi + R^T (x', rho)` with `R` sending the
    /// outward normal to `-e_n`. Returns `None` past the silhouette.
    pub fn graph_height(&self, xi: &[f64], frame_rows: &[Vec<f64>], xp: &[f64]) -> Option<f64> {
        let n = self.n;
        debug_assert_eq!(xp.len(), n - 1);
        let point_at = |rho: f64| -> Vec<f64> {
            // world point xi + R^T (x', rho); frame_rows is symmetric
            // orthogonal so R^T y = R y
            let mut local = xp.to_vec();
            local.push(rho);
            let shift: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| frame_rows[j][i] * local[j]).sum())
                .collect();
            xi.iter().zip(shift).map(|(&a, b)| a + b).collect()
        };
        let level = |rho: f64| self.gauge(&point_at(rho)) - 1.0;
        // walk inward until the segment enters the body
        let mut lo = 0.0_f64;
        let mut hi = None;
        let steps = 256;
        let reach = self.diameter;
        let mut prev = 0.0_f64;
        for step in 1..=steps {
            let rho = reach * step as f64 / steps as f64;
            if level(rho) < 0.0 {
                lo = prev;
                hi = Some(rho);
                break;
            }
            prev = rho;
        }
        let mut hi = hi?;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if level(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Closest boundary point to an exterior `x`, by sliding a boundary
    /// candidate until the offset `x - y` is parallel to the outward normal.
    /// Returns `(point, distance)`.
    pub fn closest_boundary_point(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut y = self.boundary_from_direction(x);
        for _ in 0..60 {
            let nu = self.outward_normal(&y);
            let d: Vec<f64> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
            let dn = linalg::dot(&d, &nu);
            let tangential: Vec<f64> = d
                .iter()
                .zip(&nu)
                .map(|(&di, &ni)| di - dn * ni)
                .collect();
            let t_norm = linalg::norm(&tangential);
            if t_norm < 1e-13 * self.diameter {
                break;
            }
            let stepped: Vec<f64> = y
                .iter()
                .zip(&tangential)
                .map(|(&yi, &ti)| yi + 0.8 * ti)
                .collect();
            y = self.boundary_from_direction(&stepped);
        }
        let dist = x
            .iter()
            .zip(&y)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        (y, dist)
    }

    /// Samples the modulus inequality `rho(x') >= delta |x'|^2` around mesh
    /// points; returns the worst observed ratio `rho / |x'|^2`.
    pub fn convexity_modulus_check(&self, mesh_count: usize, seed: u64) -> Result<f64> {
        let mesh = self.boundary_mesh(mesh_count, seed);
        let mut worst = f64::INFINITY;
        for xi in &mesh {
            let nu = self.outward_normal(xi);
            let rows = linalg::householder_to_minus_last(&nu);
            for dir in 0..(self.n - 1) {
                for &scale in &[0.25, 0.5, 1.0] {
                    let mut xp = vec![0.0; self.n - 1];
                    xp[dir] = scale * self.delta;
                    if let Some(rho) = self.graph_height(xi, &rows, &xp) {
                        worst = worst.min(rho / (xp[dir] * xp[dir]));
                    }
                }
            }
        }
        if worst < self.delta {
            return Err(Error::InvalidParameter(format!(
                "convexity modulus {} not attained: observed ratio {worst}",
                self.delta
            )));
        }
        Ok(worst)
    }
}

fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// One monomial `coeff * prod x_i^powers_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Multivariate polynomial in the ambient coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polynomial {
    n: usize,
    terms: Vec<PolyTerm>,
}

impl Polynomial {
    pub fn new(n: usize, terms: Vec<PolyTerm>) -> Result<Self> {
        for t in &terms {
            if t.powers.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: t.powers.len(),
                });
            }
        }
        Ok(Self { n, terms })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            n,
            terms: vec![PolyTerm {
                coeff: value,
                powers: vec![0; n],
            }],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.powers.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.powers
                        .iter()
                        .zip(x)
                        .map(|(&p, &xi)| xi.powi(p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.terms
                    .iter()
                    .filter(|t| t.powers[i] > 0)
                    .map(|t| {
                        t.coeff
                            * t.powers[i] as f64
                            * t.powers
                                .iter()
                                .zip(x)
                                .enumerate()
                                .map(|(j, (&p, &xj))| {
                                    let p = if j == i { p - 1 } else { p };
                                    xj.powi(p as i32)
                                })
                                .product::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut h = vec![vec![0.0; self.n]; self.n];
        for t in &self.terms {
            for i in 0..self.n {
                for j in 0..self.n {
                    let pi = t.powers[i];
                    let pj = t.powers[j];
                    let factor = if i == j {
                        if pi < 2 {
                            continue;
                        }
                        (pi * (pi - 1)) as f64
                    } else {
                        if pi < 1 || pj < 1 {
                            continue;
                        }
                        (pi * pj) as f64
                    };
                    let mut prod = t.coeff * factor;
                    for (l, (&p, &xl)) in t.powers.iter().zip(x).enumerate() {
                        let mut p = p;
                        if l == i {
                            p -= 1;
                        }
                        if l == j {
                            p -= 1;
                        }
                        prod *= xl.powi(p as i32);
                    }
                    h[i][j] += prod;
                }
            }
        }
        h
    }

    /// `p(x) - b . x` as a new polynomial.
    pub fn minus_linear(&self, b: &[f64]) -> Result<Self> {
        let mut terms = self.terms.clone();
        for (i, &bi) in b.iter().enumerate() {
            if bi != 0.0 {
                let mut powers = vec![0; self.n];
                powers[i] = 1;
                terms.push(PolyTerm {
                    coeff: -bi,
                    powers,
                });
            }
        }
        Polynomial::new(self.n, terms)
    }
}

/// Boundary data `phi in C^2(boundary)` given as the restriction of a
/// polynomial, with value/gradient/Hessian evaluators and a sampled bound on
/// the C^2 norm.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    poly: Polynomial,
    c2_bound: f64,
}

impl BoundaryData {
    pub fn from_polynomial(poly: Polynomial, domain: &ConvexDomain) -> Result<Self> {
        if poly.n() != domain.n() {
            return Err(Error::LengthMismatch {
                expected: domain.n(),
                got: poly.n(),
            });
        }
        let mesh = domain.boundary_mesh(256, 2);
        let mut c2 = 0.0_f64;
        for x in &mesh {
            let v = poly.eval(x).abs();
            let g = linalg::norm(&poly.gradient(x));
            let h = poly
                .hessian(x)
                .iter()
                .map(|row| row.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                .sqrt();
            c2 = c2.max(v + g + h);
        }
        Ok(Self {
            poly,
            c2_bound: c2,
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    pub fn ambient_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.poly.gradient(x)
    }

    /// Gradient projected onto the tangent plane of the given unit normal.
    pub fn tangential_gradient(&self, x: &[f64], normal: &[f64]) -> Vec<f64> {
        let g = self.poly.gradient(x);
        let gn = linalg::dot(&g, normal);
        g.iter()
            .zip(normal)
            .map(|(&gi, &ni)| gi - gn * ni)
            .collect()
    }

    pub fn ambient_hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.poly.hessian(x)
    }

    pub fn c2_bound(&self) -> f64 {
        self.c2_bound
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_and_boundary() {
        let d = ConvexDomain::ellipsoid(vec![1.0, 2.0, 0.5]).unwrap();
        assert!(d.contains(&[0.0, 0.0, 0.0]));
        assert!(!d.contains(&[1.5, 0.0, 0.0]));
        let b = d.boundary_from_direction(&[3.0, 1.0, -0.2]);
        assert!((d.gauge(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_normal_is_radial() {
        let d = ConvexDomain::ellipsoid(vec![2.0, 2.0, 2.0]).unwrap();
        let x = d.boundary_from_direction(&[1.0, 1.0, 1.0]);
        let nu = d.outward_normal(&x);
        for (xi, ni) in x.iter().zip(&nu) {
            assert!((xi / 2.0 - ni).abs() < 1e-12);
        }
    }

    #[test]
    fn rotated_ellipsoid_matches_unrotated_geometry() {
        let frame = linalg::householder_to_minus_last(&[1.0 / 3f64.sqrt(); 3]);
        let plain = ConvexDomain::ellipsoid(vec![1.0, 2.0, 3.0]).unwrap();
        let rotated = ConvexDomain::ellipsoid(vec![1.0, 2.0, 3.0])
            .unwrap()
            .with_frame(frame.clone())
            .unwrap();
        // gauges agree after mapping through the frame
        let y = [0.4, -0.8, 1.1];
        let y_world: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| frame[j][i] * y[j]).sum())
            .collect();
        assert!((plain.gauge(&y) - rotated.gauge(&y_world)).abs() < 1e-12);
    }

    #[test]
    fn graph_height_on_the_sphere() {
        // unit sphere: rho(x') = 1 - sqrt(1 - |x'|^2)
        let d = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let xi = [0.0, 0.0, 1.0];
        let rows = linalg::householder_to_minus_last(&d.outward_normal(&xi));
        for r in [0.05, 0.2, 0.4] {
            let rho = d.graph_height(&xi, &rows, &[r, 0.0]).unwrap();
            let expect = 1.0 - (1.0 - r * r).sqrt();
            assert!((rho - expect).abs() < 1e-10, "r={r}: {rho} vs {expect}");
        }
    }

    #[test]
    fn ellipsoid_modulus_is_attained() {
        let d = ConvexDomain::ellipsoid(vec![0.8, 1.0, 1.4]).unwrap();
        let worst = d.convexity_modulus_check(64, 3).unwrap();
        assert!(worst >= d.delta());
    }

    #[test]
    fn polynomial_derivatives() {
        // p = 2 x0^2 x1 + 3 x2 - 1
        let p = Polynomial::new(
            3,
            vec![
                PolyTerm {
                    coeff: 2.0,
                    powers: vec![2, 1, 0],
                },
                PolyTerm {
                    coeff: 3.0,
                    powers: vec![0, 0, 1],
                },
                PolyTerm {
                    coeff: -1.0,
                    powers: vec![0, 0, 0],
                },
            ],
        )
        .unwrap();
        let x = [1.5, -0.5, 2.0];
        assert!((p.eval(&x) - (2.0 * 2.25 * -0.5 + 6.0 - 1.0)).abs() < 1e-14);
        let g = p.gradient(&x);
        assert!((g[0] - 4.0 * 1.5 * -0.5).abs() < 1e-14);
        assert!((g[1] - 2.0 * 2.25).abs() < 1e-14);
        assert!((g[2] - 3.0).abs() < 1e-14);
        let h = p.hessian(&x);
        assert!((h[0][0] - 4.0 * -0.5).abs() < 1e-14);
        assert!((h[0][1] - 4.0 * 1.5).abs() < 1e-14);
        assert!((h[1][0] - h[0][1]).abs() < 1e-14);
    }

    #[test]
    fn boundary_gradient_consistency() {
        // finite differences of phi along a boundary curve match the
        // tangential gradient to O(h^2)
        let d = ConvexDomain::ellipsoid(vec![1.0, 1.3, 0.7]).unwrap();
        let p = Polynomial::new(
            3,
            vec![
                PolyTerm {
                    coeff: 1.0,
                    powers: vec![2, 0, 0],
                },
                PolyTerm {
                    coeff: 0.5,
                    powers: vec![0, 1, 1],
                },
            ],
        )
        .unwrap();
        let phi = BoundaryData::from_polynomial(p, &d).unwrap();
        let curve = |t: f64| d.boundary_from_direction(&[t.cos(), t.sin(), 0.4]);
        let t0 = 0.8;
        let mut errors = Vec::new();
        for h in [1e-2, 5e-3] {
            let fd = (phi.value(&curve(t0 + h)) - phi.value(&curve(t0 - h))) / (2.0 * h);
            let x = curve(t0);
            let tangent: Vec<f64> = curve(t0 + 1e-6)
                .iter()
                .zip(curve(t0 - 1e-6))
                .map(|(&a, b)| (a - b) / 2e-6)
                .collect();
            let grad = phi.tangential_gradient(&x, &d.outward_normal(&x));
            errors.push((fd - linalg::dot(&grad, &tangent)).abs());
        }
        assert!(errors[1] <= errors[0] / 3.0 + 1e-12, "{errors:?}");
    }

    #[test]
    fn closest_point_on_ellipsoid() {
        let d = ConvexDomain::ellipsoid(vec![1.0, 2.0, 0.8]).unwrap();
        let x = [1.7, 0.4, -0.3];
        let (y, dist) = d.closest_boundary_point(&x);
        assert!((d.gauge(&y) - 1.0).abs() < 1e-10);
        // offset parallel to the normal
        let nu = d.outward_normal(&y);
        let off: Vec<f64> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
        let cross = linalg::norm(&off) - linalg::dot(&off, &nu);
        assert!(cross.abs() < 1e-9);
        // no boundary sample does better
        for probe in d.boundary_mesh(4000, 7) {
            let probe_dist: f64 = x
                .iter()
                .zip(&probe)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(probe_dist >= dist - 1e-7);
        }
        // ball case is radial
        let ball = ConvexDomain::ellipsoid(vec![1.0; 3]).unwrap();
        let (y, dist) = ball.closest_boundary_point(&[0.0, 0.0, 1.4]);
        assert!((dist - 0.4).abs() < 1e-12);
        assert!((y[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn superquadric_rejects_low_exponent() {
        assert!(ConvexDomain::with_shape(Shape::Superquadric {
            semi_axes: vec![1.0; 3],
            exponent: 1.5
        })
        .is_err());
    }
}
