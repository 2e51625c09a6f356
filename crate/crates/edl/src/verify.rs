//! Integral identities and inequalities on level sets: the integrated cutoff
//! identity, the gradient line-integral bound, the coarea formula over the
//! band E_t, the mean-value level selection, the planar length bound
//! 2 g(t) <= H^1(gamma(tau)), and the pointwise bound behind the decay
//! estimate, with its empirical constant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{EdlError, Result};
use crate::grid::ScalarField;
use crate::levelset::{
    classify, default_grad_floor, extract_level_set, g_of_t, point_in_polygon, region_et,
    LevelCurve, LevelSetFamily,
};

/// Smooth radial cutoff: 1 on B_rho, 0 outside B_2rho, quintic-smoothstep
/// transition (C^2 across the junctions, so both eta' and eta'' vanish at
/// |x| = rho and 2 rho).
#[derive(Debug, Clone, Copy)]
pub struct CutoffFunction {
    pub rho: f64,
}

impl CutoffFunction {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(EdlError::Precondition(format!(
                "cutoff scale must be positive, got {rho}"
            )));
        }
        Ok(CutoffFunction { rho })
    }

    /// Transition coordinate q in [0, 1] for radius s.
    #[inline]
    fn q(&self, s: f64) -> f64 {
        ((s - self.rho) / self.rho).clamp(0.0, 1.0)
    }

    pub fn eta(&self, x: [f64; 2]) -> f64 {
        let q = self.q(x[0].hypot(x[1]));
        let smooth = q * q * q * (10.0 - 15.0 * q + 6.0 * q * q);
        1.0 - smooth
    }

    /// Radial derivative d eta / ds.
    pub fn eta_prime(&self, s: f64) -> f64 {
        let q = self.q(s);
        -30.0 * q * q * (1.0 - q) * (1.0 - q) / self.rho
    }

    /// Second radial derivative.
    pub fn eta_second(&self, s: f64) -> f64 {
        let q = self.q(s);
        -60.0 * q * (1.0 - q) * (1.0 - 2.0 * q) / (self.rho * self.rho)
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let s = x[0].hypot(x[1]);
        if s == 0.0 {
            return [0.0, 0.0];
        }
        let d = self.eta_prime(s);
        [d * x[0] / s, d * x[1] / s]
    }

    /// Hessian of the radial profile: eta'' e⊗e + (eta'/s)(I − e⊗e).
    pub fn hessian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let s = x[0].hypot(x[1]);
        let e = [x[0] / s, x[1] / s];
        let d1 = self.eta_prime(s);
        let d2 = self.eta_second(s);
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let eij = e[i] * e[j];
                let dij = if i == j { 1.0 } else { 0.0 };
                h[i][j] = d2 * eij + d1 / s * (dij - eij);
            }
        }
        h
    }

    /// Measured sup of rho |grad eta| and rho^2 |eta''| over the grid nodes
    /// falling in the transition annulus.
    pub fn measured_bounds(&self, u: &ScalarField) -> (f64, f64) {
        let grid = &u.grid;
        let mut b1: f64 = 0.0;
        let mut b2: f64 = 0.0;
        for ir in 0..grid.spec.n_radial {
            let r = grid.radii[ir];
            if r < self.rho || r > 2.0 * self.rho {
                continue;
            }
            b1 = b1.max(self.rho * self.eta_prime(r).abs());
            b2 = b2.max(self.rho * self.rho * self.eta_second(r).abs());
        }
        (b1, b2)
    }
}

/// Outcome of one verification check, with raw numbers for the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub check: String,
    pub inputs: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub tolerance: f64,
    pub verdict: bool,
    pub details: BTreeMap<String, f64>,
}

impl VerificationRecord {
    fn new(check: &str) -> Self {
        VerificationRecord {
            check: check.into(),
            inputs: BTreeMap::new(),
            lhs: 0.0,
            rhs: 0.0,
            constant: 0.0,
            tolerance: 0.0,
            verdict: false,
            details: BTreeMap::new(),
        }
    }
}

/// Midpoint-rule line integral of f along a closed polyline.
pub fn line_integral(curve: &LevelCurve, f: &dyn Fn([f64; 2]) -> f64) -> Result<f64> {
    if !curve.is_closed() {
        return Err(EdlError::Precondition(
            "line integral requires a closed curve".into(),
        ));
    }
    let mut total = 0.0;
    for w in curve.vertices.windows(2) {
        let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])];
        total += f(mid) * len;
    }
    Ok(total)
}

fn designated_gamma(u: &ScalarField, t: f64) -> Result<LevelCurve> {
    let curves = extract_level_set(u, t)?;
    let cl = classify(&curves, u.grid.spec.enclosing_radius);
    cl.gamma
        .map(|i| curves[i].clone())
        .ok_or_else(|| EdlError::Precondition(format!("no designated gamma at level {t}")))
}

/// Evaluate the six terms of the integrated identity 0 = sum(T1..T6):
/// T1 flux through gamma(t), T2 the grad-eta boundary term (identically zero
/// because eta is constant on gamma(t)), T3 the cutoff diffusion term,
/// T4 the drift line term, T5 the drift cutoff term, T6 the divergence and
/// reaction term over the sub-level region. Pass iff |sum| is below the
/// tolerance times the largest term magnitude.
pub fn cutoff_identity_check(
    u: &ScalarField,
    coeffs: &CoefficientSet,
    t: f64,
    rho: f64,
) -> Result<VerificationRecord> {
    let spec = u.grid.spec;
    let cutoff = CutoffFunction::new(rho)?;
    if 2.0 * rho > spec.truncation_radius {
        return Err(EdlError::Precondition(format!(
            "cutoff support 2 rho = {} exceeds the domain radius {}",
            2.0 * rho,
            spec.truncation_radius
        )));
    }
    let gamma = designated_gamma(u, t)?;
    if gamma.max_radius() > rho {
        return Err(EdlError::Precondition(format!(
            "gamma(t) reaches radius {} outside B_rho (rho = {rho})",
            gamma.max_radius()
        )));
    }
    let grad = u.gradient()?;

    // line terms; eta = 1 on gamma(t)
    let t1 = -line_integral(&gamma, &|x| {
        let g = grad.bilinear(x);
        let a = (coeffs.a)(x);
        let agg = a[0][0] * g[0] * g[0]
            + (a[0][1] + a[1][0]) * g[0] * g[1]
            + a[1][1] * g[1] * g[1];
        agg / g[0].hypot(g[1]).max(1e-300)
    })?;
    let t2 = 0.0; // grad eta vanishes on gamma(t) by the precondition above
    let t4 = line_integral(&gamma, &|x| {
        let g = grad.bilinear(x);
        let b = (coeffs.b)(x);
        let n = g[0].hypot(g[1]).max(1e-300);
        (g[0] * b[0] + g[1] * b[1]) / n * t
    })?;

    // volume terms over the sub-level proxy {u < t}; T3 and T5 are supported
    // in the transition annulus, where their integrands vanish to first
    // order at both edges
    let mut t3 = 0.0;
    let mut t5 = 0.0;
    let mut t6 = 0.0;
    for ir in 0..spec.n_radial {
        let r = u.grid.radii[ir];
        let w = u.grid.node_weight(ir);
        let in_transition = r > rho && r < 2.0 * rho;
        for it in 0..spec.n_angular {
            let uv = u.get(ir, it);
            if uv >= t {
                continue;
            }
            let x = u.grid.position(ir, it);
            if in_transition {
                let ge = cutoff.gradient(x);
                let he = cutoff.hessian(x);
                let a = (coeffs.a)(x);
                let da = (coeffs.grad_a)(x);
                let mut div_a_grad_eta = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        div_a_grad_eta += da[j][i][j] * ge[i] + a[i][j] * he[i][j];
                    }
                }
                t3 -= div_a_grad_eta * uv * w;
                let b = (coeffs.b)(x);
                t5 -= uv * (b[0] * ge[0] + b[1] * ge[1]) * w;
            }
            let eta = cutoff.eta(x);
            if eta > 0.0 {
                t6 += (-(coeffs.div_b)(x) + (coeffs.c)(x)) * uv * eta * w;
            }
        }
    }

    let terms = [t1, t2, t3, t4, t5, t6];
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rec = VerificationRecord::new("cutoff_identity");
    rec.inputs.insert("t".into(), t);
    rec.inputs.insert("rho".into(), rho);
    rec.lhs = sum;
    rec.rhs = 0.0;
    rec.constant = scale;
    rec.tolerance = 5e-2;
    rec.verdict = sum.abs() <= rec.tolerance * scale;
    for (k, v) in terms.iter().enumerate() {
        rec.details.insert(format!("term{}", k + 1), *v);
    }
    Ok(rec)
}

/// Measured C_* = sup over tilde-regular levels of (1/t) int_{gamma(t)}
/// |grad u| dS, with the per-level sequence. Pass iff the sequence does not
/// grow as t decreases through its smallest decade.
pub fn gradient_flux_bound(u: &ScalarField, family: &LevelSetFamily) -> Result<VerificationRecord> {
    let grad_mag = u.gradient()?.magnitude();
    let mut seq: Vec<(f64, f64)> = Vec::new();
    for entry in &family.levels {
        if !entry.tilde_regular {
            continue;
        }
        if let Some(gamma) = entry.gamma() {
            let flux = line_integral(gamma, &|x| grad_mag.bilinear(x))?;
            seq.push((entry.t, flux / entry.t));
        }
    }
    if seq.len() < 10 {
        return Err(EdlError::Precondition(format!(
            "gradient flux bound needs >= 10 tilde-regular levels, have {}",
            seq.len()
        )));
    }
    seq.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let c_star = seq.iter().map(|x| x.1).fold(0.0, f64::max);
    // boundedness proxy: within the smallest decade of t, the ratio at the
    // smallest level must not exceed the ratio at the decade top by > 15%
    let t_min = seq[0].0;
    let decade: Vec<f64> = seq
        .iter()
        .filter(|(t, _)| *t <= 10.0 * t_min)
        .map(|x| x.1)
        .collect();
    let verdict = decade[0] <= 1.15 * decade[decade.len() - 1];
    let mut rec = VerificationRecord::new("gradient_flux_bound");
    rec.constant = c_star;
    rec.lhs = decade[0];
    rec.rhs = decade[decade.len() - 1];
    rec.tolerance = 0.15;
    rec.verdict = verdict;
    for (t, v) in &seq {
        rec.details.insert(format!("C(t={t:.6e})"), *v);
    }
    Ok(rec)
}

/// Which weight to compare in the coarea identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoareaWeight {
    One,
    Grad,
}

/// Compare the band integral of f |grad u| over E_t against the iterated
/// level integral of f over gamma(tau), tau in [t/2, t].
pub fn coarea_check(u: &ScalarField, t: f64, f_choice: CoareaWeight) -> Result<VerificationRecord> {
    let gamma_t = designated_gamma(u, t)?;
    let gamma_half = designated_gamma(u, t / 2.0)?;
    let region = region_et(u, t, &gamma_t, &gamma_half)?;
    let grad_mag = u.gradient()?.magnitude();

    // area side: integrand f |grad u| at the nodes
    let f_values: Vec<f64> = match f_choice {
        CoareaWeight::One => grad_mag.values.clone(),
        CoareaWeight::Grad => grad_mag.values.iter().map(|g| g * g).collect(),
    };
    let f_field = ScalarField::from_values(u.grid.clone(), f_values)?;
    let lhs = region.integrate(u, &f_field);

    // level side: trapezoid over regular tau samples
    let floor = default_grad_floor(u)?;
    let n_tau = 17;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for i in 0..n_tau {
        let tau = t / 2.0 + (t / 2.0) * i as f64 / (n_tau - 1) as f64;
        let curves = extract_level_set(u, tau)?;
        let cl = classify(&curves, u.grid.spec.enclosing_radius);
        let Some(gi) = cl.gamma else { continue };
        if curves[gi].min_grad <= floor {
            continue;
        }
        let f_line = line_integral(&curves[gi], &|x| match f_choice {
            CoareaWeight::One => 1.0,
            CoareaWeight::Grad => grad_mag.bilinear(x),
        })?;
        samples.push((tau, f_line));
    }
    let mut rec = VerificationRecord::new(match f_choice {
        CoareaWeight::One => "coarea_one",
        CoareaWeight::Grad => "coarea_grad",
    });
    rec.inputs.insert("t".into(), t);
    rec.tolerance = 2e-2;
    if samples.len() < 4 {
        rec.details.insert("inconclusive".into(), 1.0);
        rec.lhs = lhs;
        return Ok(rec);
    }
    let mut rhs = 0.0;
    for w in samples.windows(2) {
        rhs += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    rec.lhs = lhs;
    rec.rhs = rhs;
    rec.constant = (lhs - rhs).abs() / rhs.abs().max(1e-300);
    rec.verdict = rec.constant <= rec.tolerance;
    rec.details.insert("tau_samples".into(), samples.len() as f64);
    Ok(rec)
}

/// Pick the sampled regular tau in [t/2, t] with the shortest gamma(tau) and
/// check the mean-value inequality
/// (t/2) H^1(gamma(tau)) <= sqrt(2^p C_* t^{2-p} int_{E_t} u^p).
pub fn mean_value_tau(
    u: &ScalarField,
    t: f64,
    p: f64,
    c_star: f64,
) -> Result<(f64, VerificationRecord)> {
    let gamma_t = designated_gamma(u, t)?;
    let gamma_half = designated_gamma(u, t / 2.0)?;
    let region = region_et(u, t, &gamma_t, &gamma_half)?;
    let up = ScalarField::from_values(
        u.grid.clone(),
        u.values.iter().map(|v| v.abs().powf(p)).collect(),
    )?;
    let int_up = region.integrate(u, &up);

    let floor = default_grad_floor(u)?;
    let n_tau = 17;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n_tau {
        let tau = t / 2.0 + (t / 2.0) * i as f64 / (n_tau - 1) as f64;
        let curves = extract_level_set(u, tau)?;
        let cl = classify(&curves, u.grid.spec.enclosing_radius);
        let Some(gi) = cl.gamma else { continue };
        if curves[gi].min_grad <= floor {
            continue;
        }
        let len = curves[gi].length();
        if best.map_or(true, |(_, l)| len < l) {
            best = Some((tau, len));
        }
    }
    let (tau, len) = best.ok_or_else(|| {
        EdlError::Precondition(format!("no regular tau sample available in [{}, {t}]", t / 2.0))
    })?;
    let lhs = 0.5 * t * len;
    let rhs = (2.0f64.powf(p) * c_star * t.powf(2.0 - p) * int_up).sqrt();
    let mut rec = VerificationRecord::new("mean_value_tau");
    rec.inputs.insert("t".into(), t);
    rec.inputs.insert("p".into(), p);
    rec.inputs.insert("tau".into(), tau);
    rec.lhs = lhs;
    rec.rhs = rhs;
    rec.tolerance = 0.0;
    rec.verdict = lhs <= rhs;
    rec.details.insert("length".into(), len);
    rec.details.insert("int_up".into(), int_up);
    Ok((tau, rec))
}

/// Planar length bound 2 g(t) <= H^1(gamma(tau)) for nested curves.
pub fn geometric_bound_check(
    gamma_t: &LevelCurve,
    gamma_tau: &LevelCurve,
    slack: f64,
) -> Result<VerificationRecord> {
    // nesting precondition: gamma(t) inside the closure of Int gamma(tau)
    let inside = gamma_t
        .vertices
        .iter()
        .filter(|v| point_in_polygon(&gamma_tau.vertices, **v))
        .count();
    if inside * 2 < gamma_t.vertices.len() {
        return Err(EdlError::Precondition(
            "gamma(t) is not nested inside gamma(tau)".into(),
        ));
    }
    let mut rec = VerificationRecord::new("geometric_bound");
    rec.lhs = 2.0 * g_of_t(gamma_t);
    rec.rhs = gamma_tau.length();
    rec.tolerance = slack;
    rec.verdict = rec.lhs <= rec.rhs + slack;
    Ok(rec)
}

/// Empirical constant in u(x) <= C |x|^{-2/p} (int_{E_t} u^p)^{1/p} on
/// gamma(t): per-level sup of the ratio, overall sup, and a stability verdict
/// over the smallest available decade of t.
pub fn key_lemma_check(
    u: &ScalarField,
    family: &LevelSetFamily,
    p: f64,
) -> Result<VerificationRecord> {
    let mut per_level: Vec<(f64, f64)> = Vec::new();
    for entry in &family.levels {
        if !entry.tilde_regular {
            continue;
        }
        let (Some(gamma), Some(gamma_half)) = (entry.gamma(), entry.gamma_half.as_ref()) else {
            continue;
        };
        let region = region_et(u, entry.t, gamma, gamma_half)?;
        if region.mask.iter().all(|&m| !m) {
            continue; // empty band: inconclusive at this level
        }
        let up = ScalarField::from_values(
            u.grid.clone(),
            u.values.iter().map(|v| v.abs().powf(p)).collect(),
        )?;
        let int_up = region.integrate(u, &up);
        if !(int_up > 0.0) {
            continue;
        }
        // on gamma(t) the field value is t, so the vertex ratio is maximized
        // at the largest radius
        let c_level = entry.t * g_of_t(gamma).powf(2.0 / p) / int_up.powf(1.0 / p);
        per_level.push((entry.t, c_level));
    }
    if per_level.is_empty() {
        return Err(EdlError::Precondition(
            "key lemma check needs at least one usable tilde-regular level".into(),
        ));
    }
    per_level.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let sup = per_level.iter().map(|x| x.1).fold(0.0, f64::max);
    let t_min = per_level[0].0;
    let decade: Vec<f64> = per_level
        .iter()
        .filter(|(t, _)| *t <= 10.0 * t_min)
        .map(|x| x.1)
        .collect();
    let lo = decade.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = decade.iter().cloned().fold(0.0f64, f64::max);
    let mut rec = VerificationRecord::new("key_lemma");
    rec.inputs.insert("p".into(), p);
    rec.constant = sup;
    rec.lhs = lo;
    rec.rhs = hi;
    rec.tolerance = 2e-2;
    rec.verdict = (hi - lo) / lo <= rec.tolerance;
    for (t, c) in &per_level {
        rec.details.insert(format!("C(t={t:.6e})"), *c);
    }
    Ok(rec)
}
