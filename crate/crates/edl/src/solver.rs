//! Discretization and iterative solution of L u = -div(a grad u) + b.grad u
//! + c u = 0 on the truncated annulus, with Dirichlet data on both circles.
//!
//! Assembly is Galerkin with bilinear isoparametric quads on the polar cells
//! (Gauss 2x2), so the diffusion block is exactly symmetric whenever a is.
//! When a cell's Peclet number exceeds 2 a symmetric streamline-diffusion
//! tensor is blended in, which keeps the scheme monotone in the
//! advection-dominated regime without breaking symmetry of the a-part.
//! Reaction is lumped at nodes. Dirichlet rows are eliminated into a
//! boundary contribution vector.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{EdlError, Result};
use crate::grid::{DomainSpec, Grid, ScalarField};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Csr {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_rows];
        for &(i, j, v) in triplets {
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for (&j, &v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.cols[k] == j {
                return self.vals[k];
            }
        }
        0.0
    }

    /// Largest relative asymmetry |A_ij - A_ji| / max|A|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if j > i {
                    worst = worst.max((self.vals[k] - self.get(j, i)).abs());
                }
            }
        }
        worst / scale
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n_rows)
            .map(|i| self.row_ptr[i + 1] - self.row_ptr[i])
            .max()
            .unwrap_or(0)
    }
}

/// Outer artificial boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "exponent")]
pub enum OuterCondition {
    DirichletZero,
    /// Dirichlet data matched to a known decay exponent s:
    /// outer value = inner value * (r0 / R_out)^s.
    DirichletMatched(f64),
}

/// Dirichlet data on the two boundary circles.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    /// One value per angular node on the inner circle; must be >= 0.
    pub inner_values: Vec<f64>,
    pub outer_condition: OuterCondition,
}

impl BoundaryData {
    pub fn new(inner_values: Vec<f64>, outer_condition: OuterCondition) -> Result<Self> {
        if let Some(v) = inner_values.iter().find(|v| !(**v >= 0.0)) {
            return Err(EdlError::Precondition(format!(
                "inner boundary values must be non-negative, got {v}"
            )));
        }
        Ok(BoundaryData {
            inner_values,
            outer_condition,
        })
    }

    pub fn constant_inner(spec: &DomainSpec, value: f64, outer: OuterCondition) -> Result<Self> {
        Self::new(vec![value; spec.n_angular], outer)
    }

    pub fn outer_values(&self, spec: &DomainSpec) -> Vec<f64> {
        match self.outer_condition {
            OuterCondition::DirichletZero => vec![0.0; spec.n_angular],
            OuterCondition::DirichletMatched(s) => {
                let factor = (spec.obstacle_radius / spec.truncation_radius).powf(s);
                self.inner_values.iter().map(|v| v * factor).collect()
            }
        }
    }
}

/// Assembled discrete operator: interior system with eliminated boundary,
/// plus the unconstrained all-node matrix used for residual and flux
/// diagnostics.
#[derive(Debug)]
pub struct DiscreteOperator {
    pub grid: Arc<Grid>,
    /// Interior-by-interior system matrix (rings 1..n_r-2).
    pub interior: Csr,
    /// Right-hand side carrying the eliminated Dirichlet columns.
    pub boundary_rhs: Vec<f64>,
    /// Unconstrained Galerkin matrix over all nodes.
    pub full: Csr,
    /// Lumped mass (integral of each nodal basis function).
    pub mass_lumped: Vec<f64>,
    pub bdata: BoundaryData,
}

impl DiscreteOperator {
    pub fn interior_count(&self) -> usize {
        (self.grid.spec.n_radial - 2) * self.grid.spec.n_angular
    }

    #[inline]
    pub fn interior_index(&self, ir: usize, it: usize) -> usize {
        (ir - 1) * self.grid.spec.n_angular + it
    }

    /// Boundary values as a full nodal vector (zero in the interior).
    pub fn boundary_field(&self) -> Vec<f64> {
        let spec = self.grid.spec;
        let mut g = vec![0.0; spec.node_count()];
        let outer = self.bdata.outer_values(&spec);
        for it in 0..spec.n_angular {
            g[spec.node_index(0, it)] = self.bdata.inner_values[it];
            g[spec.node_index(spec.n_radial - 1, it)] = outer[it];
        }
        g
    }
}

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

#[inline]
fn shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dn = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    (n, dn)
}

fn sym_min_eig(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let disc = ((m[0][0] - m[1][1]).powi(2) + 4.0 * b * b).sqrt();
    0.5 * (tr - disc)
}

/// Assemble the element matrices over all nodes; returns (full matrix,
/// lumped mass).
fn assemble_full(coeffs: &CoefficientSet, grid: &Arc<Grid>) -> Result<(Csr, Vec<f64>)> {
    let spec = grid.spec;
    let (nr, nt) = (spec.n_radial, spec.n_angular);
    let n = spec.node_count();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity((nr - 1) * nt * 16);
    let mut mass = vec![0.0; n];
    let mut reaction = vec![0.0; n];

    for ir in 0..nr - 1 {
        for it in 0..nt {
            let it1 = (it + 1) % nt;
            // counterclockwise corner order
            let nodes = [
                spec.node_index(ir, it),
                spec.node_index(ir + 1, it),
                spec.node_index(ir + 1, it1),
                spec.node_index(ir, it1),
            ];
            let p = [
                grid.position(ir, it),
                grid.position(ir + 1, it),
                grid.position(ir + 1, it1),
                grid.position(ir, it1),
            ];

            // cell-center quantities for the Peclet blend
            let xc = [
                0.25 * (p[0][0] + p[1][0] + p[2][0] + p[3][0]),
                0.25 * (p[0][1] + p[1][1] + p[2][1] + p[3][1]),
            ];
            let bc = (coeffs.b)(xc);
            let bnorm = bc[0].hypot(bc[1]);
            let dr = grid.radii[ir + 1] - grid.radii[ir];
            let dth_len = 0.5 * (grid.radii[ir] + grid.radii[ir + 1]) * spec.delta_theta();
            let h = (dr * dth_len).sqrt();
            let lam = sym_min_eig((coeffs.a)(xc)).max(1e-300);
            let peclet = bnorm * h / (2.0 * lam);
            // symmetric streamline-diffusion tensor, active only when the
            // cell is advection-dominated
            let art = if peclet > 2.0 {
                let tau = 0.5 * h * bnorm * (1.0 - 2.0 / peclet) / (bnorm * bnorm);
                Some([
                    [tau * bc[0] * bc[0], tau * bc[0] * bc[1]],
                    [tau * bc[0] * bc[1], tau * bc[1] * bc[1]],
                ])
            } else {
                None
            };

            let mut ke = [[0.0f64; 4]; 4];
            let mut me = [0.0f64; 4];
            let mut ce = [0.0f64; 4];
            for &xi in &GAUSS {
                for &eta in &GAUSS {
                    let (nsh, dn) = shape(xi, eta);
                    // Jacobian of the isoparametric map
                    let mut j = [[0.0f64; 2]; 2];
                    for k in 0..4 {
                        j[0][0] += dn[k][0] * p[k][0];
                        j[0][1] += dn[k][0] * p[k][1];
                        j[1][0] += dn[k][1] * p[k][0];
                        j[1][1] += dn[k][1] * p[k][1];
                    }
                    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                    if !(det > 0.0) {
                        return Err(EdlError::Numerical(format!(
                            "degenerate cell metric at cell (ring {ir}, angle {it}): det J = {det}"
                        )));
                    }
                    let inv = [
                        [j[1][1] / det, -j[0][1] / det],
                        [-j[1][0] / det, j[0][0] / det],
                    ];
                    // physical gradients: grad N_k = J^{-T} dN_k
                    let mut g = [[0.0f64; 2]; 4];
                    for k in 0..4 {
                        g[k][0] = inv[0][0] * dn[k][0] + inv[0][1] * dn[k][1];
                        g[k][1] = inv[1][0] * dn[k][0] + inv[1][1] * dn[k][1];
                    }
                    let mut x = [0.0f64; 2];
                    for k in 0..4 {
                        x[0] += nsh[k] * p[k][0];
                        x[1] += nsh[k] * p[k][1];
                    }
                    let mut a = (coeffs.a)(x);
                    if let Some(t) = art {
                        for i in 0..2 {
                            for jj in 0..2 {
                                a[i][jj] += t[i][jj];
                            }
                        }
                    }
                    let b = (coeffs.b)(x);
                    let c = (coeffs.c)(x);
                    for i in 0..4 {
                        for k in 0..4 {
                            let flux = [
                                a[0][0] * g[k][0] + a[0][1] * g[k][1],
                                a[1][0] * g[k][0] + a[1][1] * g[k][1],
                            ];
                            ke[i][k] += det
                                * (flux[0] * g[i][0]
                                    + flux[1] * g[i][1]
                                    + (b[0] * g[k][0] + b[1] * g[k][1]) * nsh[i]);
                        }
                        me[i] += det * nsh[i];
                        ce[i] += det * nsh[i] * c;
                    }
                }
            }
            for i in 0..4 {
                for k in 0..4 {
                    triplets.push((nodes[i], nodes[k], ke[i][k]));
                }
                mass[nodes[i]] += me[i];
                reaction[nodes[i]] += ce[i];
            }
        }
    }
    // lumped reaction on the diagonal
    for (i, &c) in reaction.iter().enumerate() {
        if c != 0.0 {
            triplets.push((i, i, c));
        }
    }
    Ok((Csr::from_triplets(n, n, &triplets), mass))
}

/// Assemble the discrete operator with Dirichlet elimination.
pub fn assemble(
    coeffs: &CoefficientSet,
    spec: &DomainSpec,
    bdata: BoundaryData,
) -> Result<DiscreteOperator> {
    let grid = Grid::build(*spec)?;
    if bdata.inner_values.len() != spec.n_angular {
        return Err(EdlError::Config(format!(
            "inner boundary needs {} values, got {}",
            spec.n_angular,
            bdata.inner_values.len()
        )));
    }
    let (full, mass_lumped) = assemble_full(coeffs, &grid)?;

    let (nr, nt) = (spec.n_radial, spec.n_angular);
    let n_int = (nr - 2) * nt;
    let outer = bdata.outer_values(spec);
    let boundary_value = |node: usize| -> Option<f64> {
        let ir = node / nt;
        let it = node % nt;
        if ir == 0 {
            Some(bdata.inner_values[it])
        } else if ir == nr - 1 {
            Some(outer[it])
        } else {
            None
        }
    };

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n_int];
    for ir in 1..nr - 1 {
        for it in 0..nt {
            let row = spec.node_index(ir, it);
            let irow = (ir - 1) * nt + it;
            for k in full.row_ptr[row]..full.row_ptr[row + 1] {
                let col = full.cols[k];
                let v = full.vals[k];
                match boundary_value(col) {
                    Some(g) => rhs[irow] -= v * g,
                    None => {
                        let icol = (col / nt - 1) * nt + col % nt;
                        triplets.push((irow, icol, v));
                    }
                }
            }
        }
    }
    let interior = Csr::from_triplets(n_int, n_int, &triplets);
    Ok(DiscreteOperator {
        grid,
        interior,
        boundary_rhs: rhs,
        full,
        mass_lumped,
        bdata,
    })
}

/// Iteration record from the Krylov solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub final_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// BiCGStab with Jacobi preconditioning. Returns the solution vector and the
/// relative-residual history.
pub fn bicgstab(a: &Csr, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, ConvergenceLog)> {
    if !(tol > 0.0) {
        return Err(EdlError::Precondition(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    let n = a.n_rows;
    let bnorm = norm(rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            ConvergenceLog {
                iterations: 0,
                residuals: vec![],
                final_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = rhs.to_vec(); // x = 0 initially
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut history = Vec::new();
    let mut t = vec![0.0; n];

    for iter in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            return Err(EdlError::NonConvergence {
                final_residual: norm(&r) / bnorm,
                iterations: iter,
                history,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat: Vec<f64> = p.iter().zip(&inv_diag).map(|(x, d)| x * d).collect();
        a.matvec(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        let snorm = norm(&s);
        if snorm / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            history.push(snorm / bnorm);
            return Ok((
                x,
                ConvergenceLog {
                    iterations: iter,
                    final_residual: snorm / bnorm,
                    residuals: history,
                },
            ));
        }
        let s_hat: Vec<f64> = s.iter().zip(&inv_diag).map(|(x, d)| x * d).collect();
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        if omega.abs() < 1e-300 {
            return Err(EdlError::NonConvergence {
                final_residual: snorm / bnorm,
                iterations: iter,
                history,
            });
        }
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok((
                x,
                ConvergenceLog {
                    iterations: iter,
                    final_residual: rel,
                    residuals: history,
                },
            ));
        }
    }
    Err(EdlError::NonConvergence {
        final_residual: *history.last().unwrap_or(&1.0),
        iterations: max_iter,
        history,
    })
}

/// Solve the eliminated interior system and reattach boundary values.
pub fn solve(op: &DiscreteOperator, tol: f64, max_iter: usize) -> Result<(ScalarField, ConvergenceLog)> {
    let (x, log) = bicgstab(&op.interior, &op.boundary_rhs, tol, max_iter)?;
    let spec = op.grid.spec;
    let mut values = op.boundary_field();
    for ir in 1..spec.n_radial - 1 {
        for it in 0..spec.n_angular {
            values[spec.node_index(ir, it)] = x[(ir - 1) * spec.n_angular + it];
        }
    }
    let mut field = ScalarField::from_values(op.grid.clone(), values)?;
    field
        .metadata
        .insert("solver_iterations".into(), log.iterations.to_string());
    field
        .metadata
        .insert("solver_residual".into(), format!("{:e}", log.final_residual));
    Ok((field, log))
}

/// Pointwise residual L u at the nodes (unconstrained stencil applied to an
/// arbitrary field, scaled by the lumped mass) and its max norm over interior
/// rings.
pub fn residual(
    coeffs: &CoefficientSet,
    spec: &DomainSpec,
    u: &ScalarField,
) -> Result<(ScalarField, f64)> {
    if u.values.len() != spec.node_count() {
        return Err(EdlError::Precondition(
            "field does not live on the given domain".into(),
        ));
    }
    let grid = Grid::build(*spec)?;
    let (full, mass) = assemble_full(coeffs, &grid)?;
    let mut lu = vec![0.0; spec.node_count()];
    full.matvec(&u.values, &mut lu);
    for (v, m) in lu.iter_mut().zip(&mass) {
        *v /= m;
    }
    let mut max_int: f64 = 0.0;
    for ir in 1..spec.n_radial - 1 {
        for it in 0..spec.n_angular {
            max_int = max_int.max(lu[spec.node_index(ir, it)].abs());
        }
    }
    let field = ScalarField::from_values(grid, lu)?;
    Ok((field, max_int))
}

/// Maximum-principle diagnostics for a solved field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub interior_max: f64,
    pub interior_max_location: (usize, usize),
    pub interior_min: f64,
    pub interior_min_location: (usize, usize),
    pub boundary_max: f64,
    pub verdict: bool,
}

/// Check that the interior maximum does not exceed the boundary maximum and
/// that the field is non-negative, both up to 1e-8 of the field scale.
pub fn maximum_principle_check(u: &ScalarField) -> MaxPrincipleReport {
    let spec = u.grid.spec;
    let (nr, nt) = (spec.n_radial, spec.n_angular);
    let mut imax = f64::NEG_INFINITY;
    let mut imin = f64::INFINITY;
    let mut loc_max = (0, 0);
    let mut loc_min = (0, 0);
    for ir in 1..nr - 1 {
        for it in 0..nt {
            let v = u.get(ir, it);
            if v > imax {
                imax = v;
                loc_max = (ir, it);
            }
            if v < imin {
                imin = v;
                loc_min = (ir, it);
            }
        }
    }
    let mut bmax = f64::NEG_INFINITY;
    for it in 0..nt {
        bmax = bmax.max(u.get(0, it)).max(u.get(nr - 1, it));
    }
    let scale = u.max_value().abs().max(u.min_value().abs()).max(1e-30);
    let tol = 1e-8 * scale;
    MaxPrincipleReport {
        interior_max: imax,
        interior_max_location: loc_max,
        interior_min: imin,
        interior_min_location: loc_min,
        boundary_max: bmax,
        verdict: imax <= bmax + tol && imin >= -tol,
    }
}
