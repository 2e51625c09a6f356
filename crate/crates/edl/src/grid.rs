//! Truncated exterior-domain grids in polar coordinates, with field storage,
//! differentiation and quadrature.
//!
//! The obstacle is a disk of radius `obstacle_radius`; nodes cover the annulus
//! up to `truncation_radius`. Storage is radial-major, angle-minor.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EdlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialSpacing {
    Log,
    Uniform,
}

/// Geometry and resolution of the truncated exterior domain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Radius of the excluded disk (the obstacle boundary).
    pub obstacle_radius: f64,
    /// Radius R of a circle enclosing the obstacle; level-set machinery works
    /// outside this circle.
    pub enclosing_radius: f64,
    /// Outer artificial boundary radius.
    pub truncation_radius: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    pub radial_spacing: RadialSpacing,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(EdlError::Config(m));
        if !(self.obstacle_radius > 0.0 && self.obstacle_radius.is_finite()) {
            return cfg(format!(
                "obstacle_radius must be positive and finite, got {}",
                self.obstacle_radius
            ));
        }
        if !(self.obstacle_radius < self.enclosing_radius) {
            return cfg(format!(
                "enclosing_radius ({}) must exceed obstacle_radius ({})",
                self.enclosing_radius, self.obstacle_radius
            ));
        }
        if !(self.enclosing_radius < self.truncation_radius) {
            return cfg(format!(
                "truncation_radius ({}) must exceed enclosing_radius ({})",
                self.truncation_radius, self.enclosing_radius
            ));
        }
        if self.n_radial < 3 {
            return cfg(format!("n_radial must be at least 3, got {}", self.n_radial));
        }
        if self.n_angular < 4 {
            return cfg(format!("n_angular must be at least 4, got {}", self.n_angular));
        }
        if self.n_angular % 2 != 0 {
            return cfg(format!("n_angular must be even, got {}", self.n_angular));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.n_radial * self.n_angular
    }

    #[inline]
    pub fn node_index(&self, ir: usize, it: usize) -> usize {
        ir * self.n_angular + it
    }

    pub fn delta_theta(&self) -> f64 {
        2.0 * PI / self.n_angular as f64
    }

    /// Refined copy: multiplies both resolutions by `k` (grid-scale flag).
    pub fn scaled(&self, k: usize) -> DomainSpec {
        DomainSpec {
            n_radial: self.n_radial * k,
            n_angular: self.n_angular * k,
            ..*self
        }
    }
}

/// Node coordinate table built from a [`DomainSpec`].
#[derive(Debug)]
pub struct Grid {
    pub spec: DomainSpec,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
}

impl Grid {
    pub fn build(spec: DomainSpec) -> Result<Arc<Grid>> {
        spec.validate()?;
        let n = spec.n_radial;
        let radii: Vec<f64> = match spec.radial_spacing {
            RadialSpacing::Uniform => (0..n)
                .map(|i| {
                    let s = i as f64 / (n - 1) as f64;
                    spec.obstacle_radius + s * (spec.truncation_radius - spec.obstacle_radius)
                })
                .collect(),
            RadialSpacing::Log => {
                let ratio = spec.truncation_radius / spec.obstacle_radius;
                (0..n)
                    .map(|i| {
                        let s = i as f64 / (n - 1) as f64;
                        spec.obstacle_radius * ratio.powf(s)
                    })
                    .collect()
            }
        };
        let dtheta = spec.delta_theta();
        let angles: Vec<f64> = (0..spec.n_angular).map(|j| j as f64 * dtheta).collect();
        Ok(Arc::new(Grid { spec, radii, angles }))
    }

    #[inline]
    pub fn position(&self, ir: usize, it: usize) -> [f64; 2] {
        let r = self.radii[ir];
        let th = self.angles[it];
        [r * th.cos(), r * th.sin()]
    }

    /// Width of the node-centered radial cell around ring `ir`.
    pub fn radial_width(&self, ir: usize) -> f64 {
        let n = self.radii.len();
        if ir == 0 {
            (self.radii[1] - self.radii[0]) / 2.0
        } else if ir == n - 1 {
            (self.radii[n - 1] - self.radii[n - 2]) / 2.0
        } else {
            (self.radii[ir + 1] - self.radii[ir - 1]) / 2.0
        }
    }

    /// Quadrature weight of node `(ir, *)`: r dr dtheta.
    pub fn node_weight(&self, ir: usize) -> f64 {
        self.radii[ir] * self.radial_width(ir) * self.spec.delta_theta()
    }

    /// Largest ring index `i` with `radii[i] <= r`, clamped to `0..n-2`.
    pub fn ring_below(&self, r: f64) -> usize {
        match self
            .radii
            .binary_search_by(|x| x.partial_cmp(&r).unwrap())
        {
            Ok(i) => i.min(self.radii.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.radii.len() - 2),
        }
    }

    /// Polar coordinates of a Cartesian point, angle in [0, 2pi).
    pub fn to_polar(p: [f64; 2]) -> (f64, f64) {
        let r = p[0].hypot(p[1]);
        let mut th = p[1].atan2(p[0]);
        if th < 0.0 {
            th += 2.0 * PI;
        }
        (r, th)
    }
}

/// Nodal scalar values on a grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl ScalarField {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.spec.node_count() {
            return Err(EdlError::Config(format!(
                "value count {} does not match node count {}",
                values.len(),
                grid.spec.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let (ir, it) = (i / grid.spec.n_angular, i % grid.spec.n_angular);
            return Err(EdlError::Numerical(format!(
                "non-finite value at node (ring {ir}, angle {it})"
            )));
        }
        Ok(ScalarField {
            grid,
            values,
            metadata: BTreeMap::new(),
        })
    }

    pub fn constant(grid: Arc<Grid>, v: f64) -> Self {
        let n = grid.spec.node_count();
        ScalarField {
            grid,
            values: vec![v; n],
            metadata: BTreeMap::new(),
        }
    }

    /// Sample an evaluable function of Cartesian position at every node.
    pub fn sample(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let spec = grid.spec;
        let mut values = Vec::with_capacity(spec.node_count());
        for ir in 0..spec.n_radial {
            for it in 0..spec.n_angular {
                let v = f(grid.position(ir, it));
                if !v.is_finite() {
                    return Err(EdlError::Numerical(format!(
                        "non-finite sample at node (ring {ir}, angle {it}), r={}, theta={}",
                        grid.radii[ir], grid.angles[it]
                    )));
                }
                values.push(v);
            }
        }
        Ok(ScalarField {
            grid,
            values,
            metadata: BTreeMap::new(),
        })
    }

    #[inline]
    pub fn get(&self, ir: usize, it: usize) -> f64 {
        self.values[self.grid.spec.node_index(ir, it)]
    }

    #[inline]
    pub fn set(&mut self, ir: usize, it: usize, v: f64) {
        let i = self.grid.spec.node_index(ir, it);
        self.values[i] = v;
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Bilinear interpolation in (r, theta); r clamped to the annulus.
    pub fn bilinear(&self, p: [f64; 2]) -> f64 {
        let grid = &self.grid;
        let (r, th) = Grid::to_polar(p);
        let r = r.clamp(grid.radii[0], *grid.radii.last().unwrap());
        let ir = grid.ring_below(r);
        let tr = ((r - grid.radii[ir]) / (grid.radii[ir + 1] - grid.radii[ir])).clamp(0.0, 1.0);
        let nt = grid.spec.n_angular;
        let dth = grid.spec.delta_theta();
        let jt = ((th / dth).floor() as usize).min(nt - 1);
        let tt = (th / dth - jt as f64).clamp(0.0, 1.0);
        let jt1 = (jt + 1) % nt;
        let v00 = self.get(ir, jt);
        let v01 = self.get(ir, jt1);
        let v10 = self.get(ir + 1, jt);
        let v11 = self.get(ir + 1, jt1);
        (1.0 - tr) * ((1.0 - tt) * v00 + tt * v01) + tr * ((1.0 - tt) * v10 + tt * v11)
    }

    /// Gradient by second-order differences: non-uniform 3-point stencil in r
    /// (one-sided at the radial boundaries), periodic central in theta, mapped
    /// to Cartesian components.
    pub fn gradient(&self) -> Result<VectorField> {
        let grid = self.grid.clone();
        let spec = grid.spec;
        if spec.n_radial < 3 {
            return Err(EdlError::Precondition(
                "gradient requires at least 3 radial layers".into(),
            ));
        }
        let (nr, nt) = (spec.n_radial, spec.n_angular);
        let dth = spec.delta_theta();
        let mut vx = vec![0.0; spec.node_count()];
        let mut vy = vec![0.0; spec.node_count()];
        for ir in 0..nr {
            let r = grid.radii[ir];
            // radial stencil coefficients (2nd order on non-uniform spacing)
            let (im, i0, ip, cm, c0, cp) = if ir == 0 {
                let h1 = grid.radii[1] - grid.radii[0];
                let h2 = grid.radii[2] - grid.radii[1];
                let cm = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
                let cp = -h1 / (h2 * (h1 + h2));
                (0usize, 1usize, 2usize, cm, -cm - cp, cp)
            } else if ir == nr - 1 {
                let h1 = grid.radii[nr - 2] - grid.radii[nr - 3];
                let h2 = grid.radii[nr - 1] - grid.radii[nr - 2];
                let cp = (2.0 * h2 + h1) / (h2 * (h1 + h2));
                let cm = h2 / (h1 * (h1 + h2));
                (nr - 3, nr - 2, nr - 1, cm, -cm - cp, cp)
            } else {
                let h1 = grid.radii[ir] - grid.radii[ir - 1];
                let h2 = grid.radii[ir + 1] - grid.radii[ir];
                let cm = -h2 / (h1 * (h1 + h2));
                let cp = h1 / (h2 * (h1 + h2));
                (ir - 1, ir, ir + 1, cm, -cm - cp, cp)
            };
            for it in 0..nt {
                let ur = cm * self.get(im, it) + c0 * self.get(i0, it) + cp * self.get(ip, it);
                let itm = (it + nt - 1) % nt;
                let itp = (it + 1) % nt;
                let ut = (self.get(ir, itp) - self.get(ir, itm)) / (2.0 * dth);
                let th = grid.angles[it];
                let (ct, st) = (th.cos(), th.sin());
                let i = spec.node_index(ir, it);
                vx[i] = ur * ct - ut / r * st;
                vy[i] = ur * st + ut / r * ct;
            }
        }
        Ok(VectorField { grid, vx, vy })
    }

    /// Quadrature of the field over masked nodes with polar cell weights.
    pub fn integrate(&self, mask: &[bool]) -> f64 {
        assert_eq!(mask.len(), self.values.len(), "mask length mismatch");
        let spec = self.grid.spec;
        let mut sum = 0.0;
        for ir in 0..spec.n_radial {
            let w = self.grid.node_weight(ir);
            for it in 0..spec.n_angular {
                let i = spec.node_index(ir, it);
                if mask[i] {
                    sum += self.values[i] * w;
                }
            }
        }
        sum
    }

    pub fn integrate_all(&self) -> f64 {
        let mask = vec![true; self.values.len()];
        self.integrate(&mask)
    }
}

/// Nodal vector values (Cartesian components) on a grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VectorField {
    pub fn magnitude(&self) -> ScalarField {
        let values = self
            .vx
            .iter()
            .zip(&self.vy)
            .map(|(x, y)| x.hypot(*y))
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
            metadata: BTreeMap::new(),
        }
    }

    #[inline]
    pub fn get(&self, ir: usize, it: usize) -> [f64; 2] {
        let i = self.grid.spec.node_index(ir, it);
        [self.vx[i], self.vy[i]]
    }

    pub fn bilinear(&self, p: [f64; 2]) -> [f64; 2] {
        // component-wise bilinear interpolation, same scheme as ScalarField
        let fx = ScalarField {
            grid: self.grid.clone(),
            values: self.vx.clone(),
            metadata: BTreeMap::new(),
        };
        let fy = ScalarField {
            grid: self.grid.clone(),
            values: self.vy.clone(),
            metadata: BTreeMap::new(),
        };
        [fx.bilinear(p), fy.bilinear(p)]
    }
}

/// Number of angular sub-strips per cell used by [`integrate_band`].
const SUB_STRIPS: usize = 4;

/// Integrate `f` over the sub-level band `{ lo < u < hi }` with sub-cell
/// resolution: within each cell `u` and `f` are interpolated bilinearly in
/// (r, theta) and the band crossing is located exactly along each radial
/// sub-strip (u is linear in r at fixed theta). `cell_filter(ir, it)` can
/// exclude cells (e.g. pocket regions).
pub fn integrate_band(
    u: &ScalarField,
    lo: f64,
    hi: f64,
    f: &ScalarField,
    cell_filter: Option<&dyn Fn(usize, usize) -> bool>,
) -> f64 {
    let grid = &u.grid;
    let spec = grid.spec;
    let (nr, nt) = (spec.n_radial, spec.n_angular);
    let dth = spec.delta_theta();
    let strip = dth / SUB_STRIPS as f64;
    let mut total = 0.0;
    for ir in 0..nr - 1 {
        let (ra, rb) = (grid.radii[ir], grid.radii[ir + 1]);
        for it in 0..nt {
            if let Some(filt) = cell_filter {
                if !filt(ir, it) {
                    continue;
                }
            }
            let it1 = (it + 1) % nt;
            let u00 = u.get(ir, it);
            let u01 = u.get(ir, it1);
            let u10 = u.get(ir + 1, it);
            let u11 = u.get(ir + 1, it1);
            let umin = u00.min(u01).min(u10).min(u11);
            let umax = u00.max(u01).max(u10).max(u11);
            if umax <= lo || umin >= hi {
                continue;
            }
            let f00 = f.get(ir, it);
            let f01 = f.get(ir, it1);
            let f10 = f.get(ir + 1, it);
            let f11 = f.get(ir + 1, it1);
            for k in 0..SUB_STRIPS {
                let s = (k as f64 + 0.5) / SUB_STRIPS as f64;
                let ua = u00 + s * (u01 - u00);
                let ub = u10 + s * (u11 - u10);
                let fa = f00 + s * (f01 - f00);
                let fb = f10 + s * (f11 - f10);
                // u linear in r between (ra, ua) and (rb, ub): clip to the band
                let (mut p, mut q) = (ra, rb);
                if (ub - ua).abs() < 1e-300 {
                    if !(ua > lo && ua < hi) {
                        continue;
                    }
                } else {
                    let r_of = |v: f64| ra + (v - ua) / (ub - ua) * (rb - ra);
                    let (r_lo, r_hi) = if ub > ua {
                        (r_of(lo), r_of(hi))
                    } else {
                        (r_of(hi), r_of(lo))
                    };
                    p = p.max(r_lo.min(rb).max(ra));
                    q = q.min(r_hi.max(ra).min(rb));
                    if q <= p {
                        continue;
                    }
                }
                // integrate f_lin(r) * r dr over [p, q]
                let c1 = (fb - fa) / (rb - ra);
                let c0 = fa - c1 * ra;
                let part = c0 * (q * q - p * p) / 2.0 + c1 * (q * q * q - p * p * p) / 3.0;
                total += part * strip;
            }
        }
    }
    total
}
