//! Level-set extraction and planar topology on polar grids: marching squares
//! over the quad cells, chaining into closed polylines, designation of the
//! outermost obstacle-enclosing component gamma(t), regular-value flags, and
//! the band region E_t between gamma(t) and gamma(t/2) with pocket removal.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EdlError, Result};
use crate::grid::{integrate_band, Grid, ScalarField};

/// One connected component of a level set, as a polyline in the plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: f64,
    /// Ordered vertices; for closed curves the first vertex is repeated at
    /// the end.
    pub vertices: Vec<[f64; 2]>,
    /// Minimum of |grad u| interpolated along the curve.
    pub min_grad: f64,
    /// Whether the curve encloses the ball B_R around the obstacle.
    pub encloses_ball: bool,
    pub signed_area: f64,
    /// Open chains ending on the inner/outer truncation circles; these are
    /// artifacts of the domain cut and never gamma candidates.
    pub touches_boundary: bool,
}

impl LevelCurve {
    pub fn is_closed(&self) -> bool {
        !self.touches_boundary
    }

    /// Polyline length (the H^1 measure of the curve).
    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    pub fn max_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Even-odd ray-casting point-in-polygon test (ray along +x).
pub fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (poly[i][0], poly[i][1]);
        let (xj, yj) = (poly[j][0], poly[j][1]);
        if (yi > p[1]) != (yj > p[1]) {
            let x_cross = xi + (p[1] - yi) / (yj - yi) * (xj - xi);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    let n = poly.len();
    for i in 0..n {
        let j = (i + 1) % n;
        s += poly[i][0] * poly[j][1] - poly[j][0] * poly[i][1];
    }
    0.5 * s
}

/// Minimum of u interpolated on the circle |x| = R (the level ceiling t_*).
pub fn t_star(u: &ScalarField, r_ball: f64) -> Result<f64> {
    let n = 4 * u.grid.spec.n_angular;
    let mut min = f64::INFINITY;
    for j in 0..n {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        min = min.min(u.bilinear([r_ball * th.cos(), r_ball * th.sin()]));
    }
    if !(min > 0.0) {
        return Err(EdlError::Precondition(format!(
            "u is not positive on the circle |x| = {r_ball} (min {min})"
        )));
    }
    Ok(min)
}

// Edge indexing: radial edge (ir, it) joins rings ir and ir+1 at angle it;
// arc edge (ir, it) joins angles it and it+1 on ring ir.
struct EdgeIds {
    nr: usize,
    nt: usize,
}

impl EdgeIds {
    #[inline]
    fn radial(&self, ir: usize, it: usize) -> usize {
        ir * self.nt + it
    }
    #[inline]
    fn arc(&self, ir: usize, it: usize) -> usize {
        (self.nr - 1) * self.nt + ir * self.nt + it
    }
    fn is_boundary_arc(&self, edge: usize) -> bool {
        let base = (self.nr - 1) * self.nt;
        if edge < base {
            return false;
        }
        let ir = (edge - base) / self.nt;
        ir == 0 || ir == self.nr - 1
    }
}

/// Extract the level set u^{-1}(t) as polylines: marching squares with linear
/// interpolation along cell edges, saddle cells resolved by the cell-average
/// rule, segments chained through shared edges. Open chains must terminate on
/// the inner/outer circles, otherwise the extraction is inconsistent.
pub fn extract_level_set(u: &ScalarField, t: f64) -> Result<Vec<LevelCurve>> {
    if !(t > 0.0 && t < u.max_value()) {
        return Ok(vec![]);
    }
    let grid = &u.grid;
    let spec = grid.spec;
    let (nr, nt) = (spec.n_radial, spec.n_angular);
    let ids = EdgeIds { nr, nt };
    let dth = spec.delta_theta();

    // vertex position on a crossed edge
    let mut vertex_of: HashMap<usize, [f64; 2]> = HashMap::new();
    let cross_radial = |ir: usize, it: usize, vertex_of: &mut HashMap<usize, [f64; 2]>| {
        let e = ids.radial(ir, it);
        vertex_of.entry(e).or_insert_with(|| {
            let (ua, ub) = (u.get(ir, it), u.get(ir + 1, it));
            let s = ((t - ua) / (ub - ua)).clamp(0.0, 1.0);
            let r = grid.radii[ir] + s * (grid.radii[ir + 1] - grid.radii[ir]);
            let th = grid.angles[it];
            [r * th.cos(), r * th.sin()]
        });
        e
    };
    let cross_arc = |ir: usize, it: usize, vertex_of: &mut HashMap<usize, [f64; 2]>| {
        let e = ids.arc(ir, it);
        vertex_of.entry(e).or_insert_with(|| {
            let it1 = (it + 1) % nt;
            let (ua, ub) = (u.get(ir, it), u.get(ir, it1));
            let s = ((t - ua) / (ub - ua)).clamp(0.0, 1.0);
            let th = grid.angles[it] + s * dth;
            let r = grid.radii[ir];
            [r * th.cos(), r * th.sin()]
        });
        e
    };

    // per-cell segments as (edge, edge) pairs
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for ir in 0..nr - 1 {
        for it in 0..nt {
            let it1 = (it + 1) % nt;
            // corners counterclockwise: c0 inner-left, c1 inner-right,
            // c2 outer-right, c3 outer-left
            let c = [
                u.get(ir, it),
                u.get(ir, it1),
                u.get(ir + 1, it1),
                u.get(ir + 1, it),
            ];
            let mut case = 0usize;
            for (k, v) in c.iter().enumerate() {
                if *v > t {
                    case |= 1 << k;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // cell edges: e0 inner arc, e1 right radial, e2 outer arc,
            // e3 left radial
            let ea = |which: usize, vo: &mut HashMap<usize, [f64; 2]>| -> usize {
                match which {
                    0 => cross_arc(ir, it, vo),
                    1 => cross_radial(ir, it1, vo),
                    2 => cross_arc(ir + 1, it, vo),
                    _ => cross_radial(ir, it, vo),
                }
            };
            let mut push = |a: usize, b: usize, vo: &mut HashMap<usize, [f64; 2]>| {
                let ea_id = ea(a, vo);
                let eb_id = ea(b, vo);
                segments.push((ea_id, eb_id));
            };
            match case {
                1 => push(0, 3, &mut vertex_of),
                2 => push(0, 1, &mut vertex_of),
                3 => push(1, 3, &mut vertex_of),
                4 => push(1, 2, &mut vertex_of),
                5 => {
                    // saddle: corners c0, c2 above
                    let avg = 0.25 * (c[0] + c[1] + c[2] + c[3]);
                    if avg > t {
                        push(0, 1, &mut vertex_of);
                        push(2, 3, &mut vertex_of);
                    } else {
                        push(0, 3, &mut vertex_of);
                        push(1, 2, &mut vertex_of);
                    }
                }
                6 => push(0, 2, &mut vertex_of),
                7 => push(2, 3, &mut vertex_of),
                8 => push(2, 3, &mut vertex_of),
                9 => push(0, 2, &mut vertex_of),
                10 => {
                    // saddle: corners c1, c3 above
                    let avg = 0.25 * (c[0] + c[1] + c[2] + c[3]);
                    if avg > t {
                        push(0, 3, &mut vertex_of);
                        push(1, 2, &mut vertex_of);
                    } else {
                        push(0, 1, &mut vertex_of);
                        push(2, 3, &mut vertex_of);
                    }
                }
                11 => push(1, 2, &mut vertex_of),
                12 => push(1, 3, &mut vertex_of),
                13 => push(0, 1, &mut vertex_of),
                14 => push(0, 3, &mut vertex_of),
                _ => unreachable!(),
            }
        }
    }

    // chain segments through shared edges
    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (si, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(si);
        by_edge.entry(b).or_default().push(si);
    }
    for (e, ss) in &by_edge {
        if ss.len() > 2 {
            return Err(EdlError::Extraction(format!(
                "edge {e} shared by {} segments",
                ss.len()
            )));
        }
    }

    let grad_mag = u.gradient()?.magnitude();
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a0, b0) = segments[start];
        let mut chain = vec![a0, b0];
        // walk forward from b0, then (if open) backward from a0
        let mut closed = false;
        loop {
            let tail = *chain.last().unwrap();
            let next = by_edge[&tail].iter().find(|&&si| !used[si]).copied();
            match next {
                Some(si) => {
                    used[si] = true;
                    let (a, b) = segments[si];
                    let nxt = if a == tail { b } else { a };
                    if nxt == chain[0] {
                        closed = true;
                        break;
                    }
                    chain.push(nxt);
                }
                None => break,
            }
        }
        if !closed {
            loop {
                let head = chain[0];
                let next = by_edge[&head].iter().find(|&&si| !used[si]).copied();
                match next {
                    Some(si) => {
                        used[si] = true;
                        let (a, b) = segments[si];
                        let nxt = if a == head { b } else { a };
                        chain.insert(0, nxt);
                    }
                    None => break,
                }
            }
            // open chains are legitimate only when both ends sit on the
            // truncation circles
            for &end in [chain[0], *chain.last().unwrap()].iter() {
                if !ids.is_boundary_arc(end) {
                    return Err(EdlError::Extraction(format!(
                        "open level-set chain at t = {t} ends on interior edge {end}"
                    )));
                }
            }
        }

        let mut vertices: Vec<[f64; 2]> = chain.iter().map(|e| vertex_of[e]).collect();
        let area = shoelace(&vertices);
        let min_grad = vertices
            .iter()
            .map(|v| grad_mag.bilinear(*v))
            .fold(f64::INFINITY, f64::min);
        let encloses = closed
            && point_in_polygon(&vertices, [0.0, 0.0])
            && vertices
                .iter()
                .all(|v| v[0].hypot(v[1]) >= spec.enclosing_radius * (1.0 - 1e-12));
        if closed {
            vertices.push(vertices[0]);
        }
        curves.push(LevelCurve {
            level: t,
            vertices,
            min_grad,
            encloses_ball: encloses,
            signed_area: area,
            touches_boundary: !closed,
        });
    }
    Ok(curves)
}

/// Topology verdict for one level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    /// Index of the designated gamma(t) curve, if unique.
    pub gamma: Option<usize>,
    pub n_enclosing: usize,
    /// Closed components whose representative vertex lies outside gamma(t).
    pub exterior_components: Vec<usize>,
    /// Pass iff exactly one component encloses B_R and none lies in its
    /// exterior.
    pub verdict: bool,
}

/// Designate gamma(t) and check the unique-enclosure topology statement.
pub fn classify(curves: &[LevelCurve], r_ball: f64) -> Classification {
    let enclosing: Vec<usize> = curves
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.is_closed()
                && point_in_polygon(&c.vertices, [0.0, 0.0])
                && c.min_radius() >= r_ball * (1.0 - 1e-12)
        })
        .map(|(i, _)| i)
        .collect();
    let gamma = if enclosing.len() == 1 {
        Some(enclosing[0])
    } else {
        None
    };
    let mut exterior = Vec::new();
    if let Some(gi) = gamma {
        for (i, c) in curves.iter().enumerate() {
            if i == gi || !c.is_closed() {
                continue;
            }
            if !point_in_polygon(&curves[gi].vertices, c.vertices[0]) {
                exterior.push(i);
            }
        }
    }
    Classification {
        gamma,
        n_enclosing: enclosing.len(),
        verdict: enclosing.len() == 1 && exterior.is_empty(),
        exterior_components: exterior,
    }
}

/// Largest distance from the origin attained on the curve.
pub fn g_of_t(gamma: &LevelCurve) -> f64 {
    gamma.max_radius()
}

/// Default regularity floor: 1e-3 of the largest gradient magnitude.
pub fn default_grad_floor(u: &ScalarField) -> Result<f64> {
    Ok(1e-3 * u.gradient()?.magnitude().max_value())
}

/// Per-level regularity: t is regular iff |grad u| stays above `grad_floor`
/// on every component of u^{-1}(t); tilde-regular iff t and t/2 both are.
pub fn regular_flags(
    u: &ScalarField,
    levels: &[f64],
    grad_floor: f64,
) -> Result<Vec<(bool, bool)>> {
    let is_regular = |t: f64| -> Result<bool> {
        let curves = extract_level_set(u, t)?;
        Ok(!curves.is_empty() && curves.iter().all(|c| c.min_grad > grad_floor))
    };
    levels
        .iter()
        .map(|&t| {
            let r = is_regular(t)?;
            let rh = is_regular(t / 2.0)?;
            Ok((r, r && rh))
        })
        .collect()
}

/// One sampled level with its extracted topology.
#[derive(Debug, Clone)]
pub struct LevelEntry {
    pub t: f64,
    pub curves: Vec<LevelCurve>,
    pub classification: Classification,
    /// gamma(t/2), needed for the band region E_t.
    pub gamma_half: Option<LevelCurve>,
    pub regular: bool,
    pub tilde_regular: bool,
}

impl LevelEntry {
    pub fn gamma(&self) -> Option<&LevelCurve> {
        self.classification.gamma.map(|i| &self.curves[i])
    }
}

/// Sampled levels of a solved field with per-level flags.
#[derive(Debug, Clone)]
pub struct LevelSetFamily {
    pub t_star: f64,
    pub grad_floor: f64,
    pub levels: Vec<LevelEntry>,
}

/// Geometrically spaced levels such that both t and t/2 admit closed level
/// curves strictly inside the truncated domain: the ceiling is 0.9 t_*, the
/// floor is set so gamma(t/2) stays inside 0.85 R_out.
pub fn auto_levels(u: &ScalarField, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(EdlError::Precondition("need at least 2 levels".into()));
    }
    let spec = u.grid.spec;
    let ts = t_star(u, spec.enclosing_radius)?;
    let t_hi = 0.9 * ts;
    let r_probe = 0.85 * spec.truncation_radius;
    let m = 4 * spec.n_angular;
    let mut u_probe: f64 = 0.0;
    for j in 0..m {
        let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        u_probe = u_probe.max(u.bilinear([r_probe * th.cos(), r_probe * th.sin()]));
    }
    let t_lo = 2.2 * u_probe;
    if !(t_lo < t_hi) {
        return Err(EdlError::Precondition(format!(
            "domain too shallow for level sampling: floor {t_lo} >= ceiling {t_hi}"
        )));
    }
    Ok((0..n)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (n - 1) as f64))
        .collect())
}

/// Extract, classify and flag a whole family of levels.
pub fn build_family(u: &ScalarField, levels: &[f64], grad_floor: f64) -> Result<LevelSetFamily> {
    let ts = t_star(u, u.grid.spec.enclosing_radius)?;
    let mut sorted: Vec<f64> = levels.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    if sorted.iter().any(|&t| !(t > 0.0 && t < ts)) {
        return Err(EdlError::Precondition(format!(
            "levels must lie strictly inside (0, t_* = {ts})"
        )));
    }
    let r_ball = u.grid.spec.enclosing_radius;
    let mut entries = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        let curves = extract_level_set(u, t)?;
        let classification = classify(&curves, r_ball);
        let half_curves = extract_level_set(u, t / 2.0)?;
        let half_class = classify(&half_curves, r_ball);
        let gamma_half = half_class.gamma.map(|i| half_curves[i].clone());
        let regular = !curves.is_empty() && curves.iter().all(|c| c.min_grad > grad_floor);
        let half_regular =
            !half_curves.is_empty() && half_curves.iter().all(|c| c.min_grad > grad_floor);
        entries.push(LevelEntry {
            t,
            curves,
            classification,
            gamma_half,
            regular,
            tilde_regular: regular && half_regular,
        });
    }
    Ok(LevelSetFamily {
        t_star: ts,
        grad_floor,
        levels: entries,
    })
}

/// The band region between gamma(t) and gamma(t/2).
#[derive(Debug, Clone)]
pub struct RegionEt {
    pub t: f64,
    /// Nodes of E_t: t/2 < u < t, between the two curves, pockets removed.
    pub mask: Vec<bool>,
    /// Pocket nodes: in the value band but separated from the annular band.
    pub omega_mask: Vec<bool>,
    /// |E_t| by sub-cell quadrature of the indicator.
    pub measure: f64,
    pub gamma_t: LevelCurve,
    pub gamma_half: LevelCurve,
}

impl RegionEt {
    /// Integrate a nodal integrand over E_t with sub-cell band resolution.
    pub fn integrate(&self, u: &ScalarField, f: &ScalarField) -> f64 {
        let grid = &u.grid;
        let spec = grid.spec;
        let filter = |ir: usize, it: usize| -> bool {
            let it1 = (it + 1) % spec.n_angular;
            let corners = [
                spec.node_index(ir, it),
                spec.node_index(ir, it1),
                spec.node_index(ir + 1, it),
                spec.node_index(ir + 1, it1),
            ];
            if corners.iter().any(|&c| self.omega_mask[c]) {
                return false;
            }
            if corners.iter().any(|&c| self.mask[c]) {
                return true;
            }
            let rc = 0.5 * (grid.radii[ir] + grid.radii[ir + 1]);
            let tc = grid.angles[it] + 0.5 * spec.delta_theta();
            let p = [rc * tc.cos(), rc * tc.sin()];
            point_in_polygon(&self.gamma_half.vertices, p)
                && !point_in_polygon(&self.gamma_t.vertices, p)
        };
        integrate_band(u, self.t / 2.0, self.t, f, Some(&filter))
    }
}

/// Connected components (4-adjacency, periodic in the angle) of a node set.
fn label_components(grid: &Grid, set: &[bool]) -> Vec<Vec<usize>> {
    let spec = grid.spec;
    let (nr, nt) = (spec.n_radial, spec.n_angular);
    let mut seen = vec![false; set.len()];
    let mut comps = Vec::new();
    for start in 0..set.len() {
        if !set[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            let (ir, it) = (i / nt, i % nt);
            let mut neighbors = Vec::with_capacity(4);
            if ir > 0 {
                neighbors.push(spec.node_index(ir - 1, it));
            }
            if ir + 1 < nr {
                neighbors.push(spec.node_index(ir + 1, it));
            }
            neighbors.push(spec.node_index(ir, (it + 1) % nt));
            neighbors.push(spec.node_index(ir, (it + nt - 1) % nt));
            for j in neighbors {
                if set[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Build E_t from gamma(t) and gamma(t/2): value-band nodes whose connected
/// component lies in the annulus Ext gamma(t) ∩ Int gamma(t/2); all other
/// band components are pockets (omega) and are removed.
pub fn region_et(
    u: &ScalarField,
    t: f64,
    gamma_t: &LevelCurve,
    gamma_half: &LevelCurve,
) -> Result<RegionEt> {
    if !(gamma_t.is_closed() && gamma_half.is_closed()) {
        return Err(EdlError::Precondition(
            "E_t requires closed gamma(t) and gamma(t/2)".into(),
        ));
    }
    let grid = &u.grid;
    let spec = grid.spec;
    let n = spec.node_count();
    let band: Vec<bool> = u.values.iter().map(|&v| v > t / 2.0 && v < t).collect();
    let in_annulus = |p: [f64; 2]| -> bool {
        point_in_polygon(&gamma_half.vertices, p) && !point_in_polygon(&gamma_t.vertices, p)
    };
    let mut mask = vec![false; n];
    let mut omega = vec![false; n];
    for comp in label_components(grid, &band) {
        let rep = comp[0];
        let pos = grid.position(rep / spec.n_angular, rep % spec.n_angular);
        let target = if in_annulus(pos) { &mut mask } else { &mut omega };
        for i in comp {
            target[i] = true;
        }
    }
    let mut region = RegionEt {
        t,
        mask,
        omega_mask: omega,
        measure: 0.0,
        gamma_t: gamma_t.clone(),
        gamma_half: gamma_half.clone(),
    };
    let one = ScalarField::constant(grid.clone(), 1.0);
    region.measure = region.integrate(u, &one);
    Ok(region)
}

pub type ArcGrid = Arc<Grid>;
