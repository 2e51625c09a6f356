//! Distribution function, weak Lorentz norms, and empirical decay exponents
//! for solution fields on the annular grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{EdlError, Result};
use crate::grid::{integrate_band, ScalarField};

/// Lebesgue measure of the super-level set {u > t}, via the same sub-cell
/// strip quadrature used for band integrals.
pub fn distribution_function(u: &ScalarField, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(EdlError::Precondition(format!(
            "distribution function needs a positive level, got {t}"
        )));
    }
    let one = ScalarField::constant(u.grid.clone(), 1.0);
    let hi = u.max_value() * 2.0 + 1.0;
    Ok(integrate_band(u, t, hi, &one, None))
}

/// Weak Lorentz functional of a nonnegative field: for q = None (that is,
/// q = infinity) the value is sup_t t mu(t)^{1/p} over a geometric ladder of
/// levels; finite q is reported through the same ladder with a trapezoid in
/// log t.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LorentzNorm {
    pub p: f64,
    pub q: Option<f64>,
    pub value: f64,
    /// (t, t mu(t)^{1/p}) along the ladder, largest t first.
    pub tail_profile: Vec<(f64, f64)>,
}

const LORENTZ_LEVELS: usize = 64;
const LORENTZ_SPAN: f64 = 1e-4;

pub fn lorentz_norm(u: &ScalarField, p: f64, q: Option<f64>) -> Result<LorentzNorm> {
    if !(p > 0.0) {
        return Err(EdlError::Precondition(format!("p must be positive, got {p}")));
    }
    let t_max = u.max_value();
    if !(t_max > 0.0) {
        return Err(EdlError::Precondition(
            "Lorentz norm needs a field with a positive maximum".into(),
        ));
    }
    let ratio = LORENTZ_SPAN.powf(1.0 / (LORENTZ_LEVELS - 1) as f64);
    let mut profile = Vec::with_capacity(LORENTZ_LEVELS);
    for k in 0..LORENTZ_LEVELS {
        let t = t_max * ratio.powi(k as i32);
        let mu = distribution_function(u, t)?;
        profile.push((t, t * mu.powf(1.0 / p)));
    }
    let value = match q {
        None => profile.iter().map(|x| x.1).fold(0.0, f64::max),
        Some(q) => {
            if !(q > 0.0) {
                return Err(EdlError::Precondition(format!(
                    "q must be positive, got {q}"
                )));
            }
            // int (t mu^{1/p})^q dt/t over the ladder, trapezoid in log t
            let mut acc = 0.0;
            for w in profile.windows(2) {
                let f0 = w[0].1.powf(q);
                let f1 = w[1].1.powf(q);
                acc += 0.5 * (f0 + f1) * (w[0].0 / w[1].0).ln();
            }
            acc.powf(1.0 / q)
        }
    };
    Ok(LorentzNorm {
        p,
        q,
        value,
        tail_profile: profile,
    })
}

/// Least-squares fit of the radial decay profile M(r) = max over angles of
/// u on the ring at radius r, in log-log coordinates over a mid-range
/// window, plus prefactor trends used to separate o(r^{-alpha}) from a
/// plain bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    /// Fitted exponent alpha in M(r) ~ r^{-alpha} (positive for decay).
    pub exponent: f64,
    /// Fitted log-prefactor.
    pub log_prefactor: f64,
    /// RMS residual of the log-log fit.
    pub fit_residual: f64,
    /// Prefactors M(r) r^{target} across the window, inner to outer.
    pub prefactors: Vec<(f64, f64)>,
    /// True iff the prefactor against the target rate decreases by at least
    /// 20% across the window (little-o behaviour).
    pub little_o: bool,
    /// True iff the prefactor stays bounded (no growth beyond 5%).
    pub big_o: bool,
    pub details: BTreeMap<String, f64>,
}

/// Fit decay against the target rate r^{-target} over radii in
/// [R_out / 8, 3 R_out / 4].
pub fn decay_fit(u: &ScalarField, target: f64) -> Result<DecayReport> {
    let grid = &u.grid;
    let r_out = grid.spec.truncation_radius;
    let lo = r_out / 8.0;
    let hi = 3.0 * r_out / 4.0;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for ir in 0..grid.spec.n_radial {
        let r = grid.radii[ir];
        if r < lo || r > hi {
            continue;
        }
        let mut m: f64 = 0.0;
        for it in 0..grid.spec.n_angular {
            m = m.max(u.get(ir, it).abs());
        }
        if m > 0.0 {
            pts.push((r, m));
        }
    }
    if pts.len() < 8 {
        return Err(EdlError::Precondition(format!(
            "decay window [{lo}, {hi}] holds only {} usable radii, need >= 8",
            pts.len()
        )));
    }

    // log-log least squares
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (r, m) in &pts {
        let x = r.ln();
        let y = m.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mut rss = 0.0;
    for (r, m) in &pts {
        let e = m.ln() - (slope * r.ln() + intercept);
        rss += e * e;
    }
    let fit_residual = (rss / n).sqrt();

    let prefactors: Vec<(f64, f64)> = pts.iter().map(|(r, m)| (*r, m * r.powf(target))).collect();
    let first = prefactors.first().unwrap().1;
    let last = prefactors.last().unwrap().1;
    let peak = prefactors.iter().map(|x| x.1).fold(0.0, f64::max);
    let little_o = last <= 0.8 * first;
    let big_o = peak <= 1.05 * first.max(last);

    let mut details = BTreeMap::new();
    details.insert("window_lo".into(), lo);
    details.insert("window_hi".into(), hi);
    details.insert("n_radii".into(), n);
    details.insert("prefactor_first".into(), first);
    details.insert("prefactor_last".into(), last);
    details.insert("prefactor_peak".into(), peak);
    Ok(DecayReport {
        exponent: -slope,
        log_prefactor: intercept,
        fit_residual,
        prefactors,
        little_o,
        big_o,
        details,
    })
}
