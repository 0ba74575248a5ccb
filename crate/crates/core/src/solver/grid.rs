//! Uniform Cartesian lattice over the truncated annulus `E(s_out) \ D` in
//! three dimensions, with node tags and the bookkeeping for the inner
//! Dirichlet collar.

use crate::domain::ConvexDomain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    /// outside the computational region (inside `D` or far outside `E(s_out)`)
    Outside,
    /// unknowns of the nonlinear system
    Interior,
    /// collar within `2h` of the domain boundary, Dirichlet from the
    /// boundary-data extension
    DirichletInner,
    /// beyond `E(s_out)`, Dirichlet from the far-field profile
    DirichletOuter,
}

/// One inner-collar node with its boundary projection.
#[derive(Debug, Clone)]
pub struct CollarNode {
    pub flat: usize,
    pub boundary_point: [f64; 3],
    pub distance: f64,
    pub normal: [f64; 3],
}

/// Scalar values on the lattice, indexed by flat node index.
#[derive(Debug, Clone)]
pub struct GridField {
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &AnnularGrid) -> Self {
        Self {
            values: vec![0.0; grid.node_count()],
        }
    }
}

/// The 19-point stencil offsets: center, axis pairs, and the diagonal pairs
/// used by the mixed second differences.
pub const AXIS_OFFSETS: [[i64; 3]; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

pub const DIAGONAL_OFFSETS: [[i64; 3]; 12] = [
    [1, 1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [-1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [-1, 0, 1],
    [-1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [0, -1, 1],
    [0, -1, -1],
];

#[derive(Debug, Clone)]
pub struct AnnularGrid {
    pub h: f64,
    pub s_out: f64,
    a: [f64; 3],
    dims: [usize; 3],
    origin: [f64; 3],
    tags: Vec<NodeTag>,
    interior: Vec<usize>,
    eq_index: Vec<i64>,
    collar: Vec<CollarNode>,
}

impl AnnularGrid {
    /// Builds the lattice for the diagonal quadratic form `a`, outer
    /// truncation level `s_out`, and spacing `h`. The collar thickness is
    /// `2h`.
    pub fn build(domain: &ConvexDomain, a: &[f64], s_out: f64, h: f64) -> Result<Self> {
        if a.len() != 3 || domain.n() != 3 {
            return Err(Error::InvalidParameter(
                "the grid solver is specific to three dimensions".into(),
            ));
        }
        if h <= 0.0 {
            return Err(Error::NonPositiveArgument { name: "h", value: h });
        }
        if s_out <= 0.0 {
            return Err(Error::NonPositiveArgument {
                name: "s_out",
                value: s_out,
            });
        }
        let a3 = [a[0], a[1], a[2]];

        let mut dims = [0usize; 3];
        let mut origin = [0.0_f64; 3];
        for i in 0..3 {
            let extent = (2.0 * s_out / a3[i]).sqrt() + 4.0 * h;
            let half = (extent / h).ceil() as usize;
            dims[i] = 2 * half + 1;
            origin[i] = -(half as f64) * h;
        }
        let total = dims[0] * dims[1] * dims[2];
        if total > 80_000_000 {
            return Err(Error::InvalidParameter(format!(
                "lattice of {total} nodes exceeds the supported desk scale"
            )));
        }

        let mut grid = Self {
            h,
            s_out,
            a: a3,
            dims,
            origin,
            tags: vec![NodeTag::Outside; total],
            interior: Vec::new(),
            eq_index: vec![-1; total],
            collar: Vec::new(),
        };

        let collar_width = 2.0 * h;
        // cheap filter for collar candidacy before the exact projection
        let d_min = match domain.shape() {
            crate::domain::Shape::Ellipsoid { semi_axes } => {
                semi_axes.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            crate::domain::Shape::Superquadric { semi_axes, .. } => {
                semi_axes.iter().cloned().fold(f64::INFINITY, f64::min)
            }
        };
        let gauge_band = 1.0 + 3.0 * collar_width / d_min;

        let mut distances: Vec<f64> = vec![f64::INFINITY; total];
        let mut collar_info: Vec<Option<CollarNode>> = vec![None; total];
        for flat in 0..total {
            let x = grid.position(flat);
            let g = domain.gauge(&x);
            if g <= 1.0 {
                distances[flat] = -1.0;
                continue;
            }
            if g <= gauge_band {
                let (point, dist) = domain.closest_boundary_point(&x);
                distances[flat] = dist;
                if dist <= collar_width {
                    let nu = domain.outward_normal(&point);
                    collar_info[flat] = Some(CollarNode {
                        flat,
                        boundary_point: [point[0], point[1], point[2]],
                        distance: dist,
                        normal: [nu[0], nu[1], nu[2]],
                    });
                }
            }
        }

        // interior nodes
        for flat in 0..total {
            let x = grid.position(flat);
            if grid.level(&x) < s_out && distances[flat] > collar_width {
                grid.tags[flat] = NodeTag::Interior;
            }
        }

        // collar is Dirichlet regardless of stencil use
        for flat in 0..total {
            if collar_info[flat].is_some() {
                grid.tags[flat] = NodeTag::DirichletInner;
            }
        }

        // outer Dirichlet ring: non-interior stencil neighbors beyond E(s_out)
        let mut outer: Vec<usize> = Vec::new();
        for flat in 0..total {
            if grid.tags[flat] != NodeTag::Interior {
                continue;
            }
            let idx = grid.unflatten(flat);
            for off in AXIS_OFFSETS.iter().chain(DIAGONAL_OFFSETS.iter()) {
                let neighbor = grid.offset_flat(idx, off).ok_or_else(|| {
                    Error::InvalidParameter("stencil left the lattice box".into())
                })?;
                if grid.tags[neighbor] == NodeTag::Outside {
                    let x = grid.position(neighbor);
                    if grid.level(&x) >= s_out {
                        outer.push(neighbor);
                    } else {
                        return Err(Error::InvalidParameter(format!(
                            "untagged stencil neighbor at {x:?}"
                        )));
                    }
                }
            }
        }
        for flat in outer {
            grid.tags[flat] = NodeTag::DirichletOuter;
        }

        for flat in 0..total {
            if grid.tags[flat] == NodeTag::Interior {
                grid.eq_index[flat] = grid.interior.len() as i64;
                grid.interior.push(flat);
            }
        }
        grid.collar = collar_info.into_iter().flatten().collect();

        if grid.interior.is_empty() {
            return Err(Error::InvalidParameter(
                "no interior nodes; annulus thinner than the collar".into(),
            ));
        }
        Ok(grid)
    }

    pub fn node_count(&self) -> usize {
        self.tags.len()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn collar(&self) -> &[CollarNode] {
        &self.collar
    }

    pub fn tag(&self, flat: usize) -> NodeTag {
        self.tags[flat]
    }

    pub fn eq_index(&self, flat: usize) -> i64 {
        self.eq_index[flat]
    }

    pub fn a(&self) -> &[f64; 3] {
        &self.a
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn level(&self, x: &[f64; 3]) -> f64 {
        0.5 * (self.a[0] * x[0] * x[0] + self.a[1] * x[1] * x[1] + self.a[2] * x[2] * x[2])
    }

    pub fn position(&self, flat: usize) -> [f64; 3] {
        let [i, j, k] = self.unflatten(flat);
        [
            self.origin[0] + self.h * i as f64,
            self.origin[1] + self.h * j as f64,
            self.origin[2] + self.h * k as f64,
        ]
    }

    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let k = flat % self.dims[2];
        let rest = flat / self.dims[2];
        let j = rest % self.dims[1];
        let i = rest / self.dims[1];
        [i, j, k]
    }

    pub fn offset_flat(&self, idx: [usize; 3], off: &[i64; 3]) -> Option<usize> {
        let mut out = [0usize; 3];
        for d in 0..3 {
            let v = idx[d] as i64 + off[d];
            if v < 0 || v >= self.dims[d] as i64 {
                return None;
            }
            out[d] = v as usize;
        }
        Some(self.flatten(out))
    }

    /// Trilinear interpolation of a field at an arbitrary point inside the
    /// lattice box.
    pub fn sample_trilinear(&self, field: &GridField, x: &[f64; 3]) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0_f64; 3];
        for d in 0..3 {
            let t = (x[d] - self.origin[d]) / self.h;
            let i = t.floor().clamp(0.0, (self.dims[d] - 2) as f64);
            base[d] = i as usize;
            frac[d] = (t - i).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for di in 0..2 {
            for dj in 0..2 {
                for dk in 0..2 {
                    let w = (if di == 0 { 1.0 - frac[0] } else { frac[0] })
                        * (if dj == 0 { 1.0 - frac[1] } else { frac[1] })
                        * (if dk == 0 { 1.0 - frac[2] } else { frac[2] });
                    let flat = self.flatten([base[0] + di, base[1] + dj, base[2] + dk]);
                    acc += w * field.values[flat];
                }
            }
        }
        acc
    }
}
