//! Coefficient families (a_ij, b, c) for the divergence-form operator
//! L u = -div(a grad u) + b . grad u + c u, with numerical validators for the
//! structural assumptions: uniform ellipticity (C1), O(|x|^{-1}) decay of
//! grad a and b (C2), non-negative reaction (C3), and integrability of
//! (div b - c)_- over the domain (C4).

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EdlError, Result};
use crate::grid::DomainSpec;

pub type MatFn = Arc<dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;
/// Derivative tensor: result[k][i][j] = d a_ij / d x_k.
pub type GradMatFn = Arc<dyn Fn([f64; 2]) -> [[[f64; 2]; 2]; 2] + Send + Sync>;
pub type VecFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
pub type ScalFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Evaluable coefficients with analytic derivatives supplied by the family.
///
/// The matrix a is restricted to be symmetric; `lambda_claimed` is the
/// ellipticity constant the family claims to satisfy.
#[derive(Clone)]
pub struct CoefficientSet {
    pub name: String,
    pub a: MatFn,
    pub grad_a: GradMatFn,
    pub b: VecFn,
    pub div_b: ScalFn,
    pub c: ScalFn,
    pub lambda_claimed: f64,
}

impl std::fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CoefficientSet({})", self.name)
    }
}

/// Optional parameters for [`builtin_family`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FamilyParams {
    pub p: Option<f64>,
    pub kappa: Option<f64>,
    pub a11: Option<f64>,
    pub a12: Option<f64>,
    pub a22: Option<f64>,
}

fn identity() -> MatFn {
    Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]])
}

fn zero_grad_a() -> GradMatFn {
    Arc::new(|_| [[[0.0; 2]; 2]; 2])
}

fn zero_vec() -> VecFn {
    Arc::new(|_| [0.0, 0.0])
}

fn zero_scal() -> ScalFn {
    Arc::new(|_| 0.0)
}

/// Construct a named coefficient family.
///
/// `remark_optimal` is the family for which u = |x|^{-2/p} is an exact
/// solution: a = I, b = -(2/p) |x|^{-2} (x1, x2), c = 0 (div b = 0 in 2D).
pub fn builtin_family(name: &str, params: &FamilyParams) -> Result<CoefficientSet> {
    match name {
        "laplace" => Ok(CoefficientSet {
            name: name.into(),
            a: identity(),
            grad_a: zero_grad_a(),
            b: zero_vec(),
            div_b: zero_scal(),
            c: zero_scal(),
            lambda_claimed: 1.0,
        }),
        "remark_optimal" => {
            let p = params.p.unwrap_or(2.0);
            if !(p >= 1.0 && p.is_finite()) {
                return Err(EdlError::Config(format!(
                    "remark_optimal requires p >= 1, got {p}"
                )));
            }
            let s = -2.0 / p;
            Ok(CoefficientSet {
                name: format!("{name}(p={p})"),
                a: identity(),
                grad_a: zero_grad_a(),
                b: Arc::new(move |x| {
                    let r2 = x[0] * x[0] + x[1] * x[1];
                    [s * x[0] / r2, s * x[1] / r2]
                }),
                // div(x / |x|^2) = 0 away from the origin in 2D
                div_b: zero_scal(),
                c: zero_scal(),
                lambda_claimed: 1.0,
            })
        }
        "rotational" => {
            let kappa = params.kappa.unwrap_or(1.0);
            if !kappa.is_finite() {
                return Err(EdlError::Config("rotational requires finite kappa".into()));
            }
            Ok(CoefficientSet {
                name: format!("{name}(kappa={kappa})"),
                a: identity(),
                grad_a: zero_grad_a(),
                b: Arc::new(move |x| {
                    let r2 = x[0] * x[0] + x[1] * x[1];
                    [-kappa * x[1] / r2, kappa * x[0] / r2]
                }),
                div_b: zero_scal(),
                c: zero_scal(),
                lambda_claimed: 1.0,
            })
        }
        "reaction" => Ok(CoefficientSet {
            name: name.into(),
            a: identity(),
            grad_a: zero_grad_a(),
            b: zero_vec(),
            c: Arc::new(|x| x[0].hypot(x[1]).powi(-3)),
            div_b: zero_scal(),
            lambda_claimed: 1.0,
        }),
        "anisotropic" => {
            let a11 = params.a11.unwrap_or(2.0);
            let a12 = params.a12.unwrap_or(0.0);
            let a22 = params.a22.unwrap_or(3.0);
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a12;
            let lam_min = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
            if !(lam_min > 0.0) {
                return Err(EdlError::Config(format!(
                    "anisotropic matrix not positive definite (min eigenvalue {lam_min})"
                )));
            }
            Ok(CoefficientSet {
                name: format!("{name}({a11},{a12},{a22})"),
                a: Arc::new(move |_| [[a11, a12], [a12, a22]]),
                grad_a: zero_grad_a(),
                b: zero_vec(),
                div_b: zero_scal(),
                c: zero_scal(),
                lambda_claimed: lam_min,
            })
        }
        // a = I + 0.5 * (x x^T)/|x|^2: eigenvalues {1.5 radial, 1 tangential}
        "radial_anisotropy" => Ok(CoefficientSet {
            name: name.into(),
            a: Arc::new(|x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                [
                    [1.0 + 0.5 * x[0] * x[0] / r2, 0.5 * x[0] * x[1] / r2],
                    [0.5 * x[0] * x[1] / r2, 1.0 + 0.5 * x[1] * x[1] / r2],
                ]
            }),
            grad_a: Arc::new(|x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let mut g = [[[0.0; 2]; 2]; 2];
                for (k, gk) in g.iter_mut().enumerate() {
                    for (i, gki) in gk.iter_mut().enumerate() {
                        for (j, gkij) in gki.iter_mut().enumerate() {
                            let dik = if i == k { 1.0 } else { 0.0 };
                            let djk = if j == k { 1.0 } else { 0.0 };
                            *gkij = 0.5
                                * ((dik * x[j] + djk * x[i]) / r2
                                    - 2.0 * x[i] * x[j] * x[k] / (r2 * r2));
                        }
                    }
                }
                g
            }),
            b: zero_vec(),
            div_b: zero_scal(),
            c: zero_scal(),
            lambda_claimed: 1.0,
        }),
        // constructed violators for the assumption checks
        "violator_const_b" => Ok(CoefficientSet {
            name: name.into(),
            a: identity(),
            grad_a: zero_grad_a(),
            b: Arc::new(|_| [1.0, 0.0]),
            div_b: zero_scal(),
            c: zero_scal(),
            lambda_claimed: 1.0,
        }),
        "violator_negative_c" => Ok(CoefficientSet {
            name: name.into(),
            a: identity(),
            grad_a: zero_grad_a(),
            b: zero_vec(),
            div_b: zero_scal(),
            c: Arc::new(|_| -1.0),
            lambda_claimed: 1.0,
        }),
        "violator_inward_b" => Ok(CoefficientSet {
            name: name.into(),
            a: identity(),
            grad_a: zero_grad_a(),
            b: Arc::new(|x| [-x[0], -x[1]]),
            div_b: Arc::new(|_| -2.0),
            c: zero_scal(),
            lambda_claimed: 1.0,
        }),
        other => Err(EdlError::Config(format!(
            "unknown coefficient family '{other}'"
        ))),
    }
}

fn sym_min_eigenvalue(m: [[f64; 2]; 2]) -> f64 {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
    0.5 * (tr - disc)
}

fn random_point_in_annulus(rng: &mut impl Rng, r0: f64, r1: f64) -> [f64; 2] {
    // uniform in area
    let u: f64 = rng.gen();
    let r = (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt();
    let th: f64 = rng.gen::<f64>() * 2.0 * PI;
    [r * th.cos(), r * th.sin()]
}

/// Minimum over random sample points of the smallest eigenvalue of the
/// symmetrized coefficient matrix.
pub fn check_c1(coeffs: &CoefficientSet, spec: &DomainSpec, n_samples: usize, seed: u64) -> f64 {
    let n = n_samples.max(100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min = f64::INFINITY;
    for _ in 0..n {
        let x = random_point_in_annulus(&mut rng, spec.obstacle_radius, spec.truncation_radius);
        min = min.min(sym_min_eigenvalue((coeffs.a)(x)));
    }
    min
}

/// Per-radius suprema of |x| * max_ij |d_k a_ij| and |x| * |b(x)| over the
/// outer region [R, R_out].
pub fn check_c2(coeffs: &CoefficientSet, spec: &DomainSpec) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let n_radii = 64;
    let n_angles = 16;
    let ratio = spec.truncation_radius / spec.enclosing_radius;
    let mut seq_a = Vec::with_capacity(n_radii);
    let mut seq_b = Vec::with_capacity(n_radii);
    for i in 0..n_radii {
        let r = spec.enclosing_radius * ratio.powf(i as f64 / (n_radii - 1) as f64);
        let mut sup_a: f64 = 0.0;
        let mut sup_b: f64 = 0.0;
        for j in 0..n_angles {
            let th = 2.0 * PI * j as f64 / n_angles as f64;
            let x = [r * th.cos(), r * th.sin()];
            let g = (coeffs.grad_a)(x);
            let mut m: f64 = 0.0;
            for gk in &g {
                for gki in gk {
                    for v in gki {
                        m = m.max(v.abs());
                    }
                }
            }
            sup_a = sup_a.max(r * m);
            let b = (coeffs.b)(x);
            sup_b = sup_b.max(r * b[0].hypot(b[1]));
        }
        seq_a.push((r, sup_a));
        seq_b.push((r, sup_b));
    }
    (seq_a, seq_b)
}

/// Boundedness verdict for a per-radius sequence: the value at the outermost
/// radius must not exceed the value one radius-doubling earlier by more than
/// the relative tolerance.
pub fn bounded_sequence(seq: &[(f64, f64)], rel_tol: f64) -> bool {
    let (r_last, v_last) = *seq.last().unwrap();
    let half = r_last / 2.0;
    let (_, v_half) = seq
        .iter()
        .min_by(|a, b| {
            (a.0 - half)
                .abs()
                .partial_cmp(&(b.0 - half).abs())
                .unwrap()
        })
        .copied()
        .unwrap();
    v_last <= v_half * (1.0 + rel_tol) + 1e-12
}

/// Minimum of c over random sample points.
pub fn check_c3(coeffs: &CoefficientSet, spec: &DomainSpec, n_samples: usize, seed: u64) -> f64 {
    let n = n_samples.max(100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut min = f64::INFINITY;
    for _ in 0..n {
        let x = random_point_in_annulus(&mut rng, spec.obstacle_radius, spec.truncation_radius);
        min = min.min((coeffs.c)(x));
    }
    min
}

/// Partial integrals of (div b - c)_- over r0 <= |x| <= R_k for an increasing
/// radius sequence (dense polar quadrature, independent of the field grid).
pub fn check_c4(coeffs: &CoefficientSet, spec: &DomainSpec, radii: &[f64]) -> Result<Vec<f64>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EdlError::Precondition(
            "check_c4 radius sequence must be strictly increasing".into(),
        ));
    }
    let n_r = 256;
    let n_th = 64;
    let r0 = spec.obstacle_radius;
    let r_max = *radii.last().unwrap();
    let dth = 2.0 * PI / n_th as f64;
    // geometric radial quadrature out to the largest requested radius
    let ratio = r_max / r0;
    let mut partials = vec![0.0; radii.len()];
    let mut acc = 0.0;
    for i in 0..n_r {
        let s0 = i as f64 / n_r as f64;
        let s1 = (i + 1) as f64 / n_r as f64;
        let ra = r0 * ratio.powf(s0);
        let rb = r0 * ratio.powf(s1);
        let rc = 0.5 * (ra + rb);
        let mut ring = 0.0;
        for j in 0..n_th {
            let th = (j as f64 + 0.5) * dth;
            let x = [rc * th.cos(), rc * th.sin()];
            let f = (coeffs.div_b)(x) - (coeffs.c)(x);
            ring += (-f).max(0.0);
        }
        acc += ring * rc * (rb - ra) * dth;
        for (k, &rk) in radii.iter().enumerate() {
            if rb <= rk {
                partials[k] = acc;
            }
        }
    }
    Ok(partials)
}

/// Cauchy verdict on a partial-integral sequence: the last increment must be
/// below `rel_tol` times the first, or the whole integral negligible.
pub fn cauchy_sequence(partials: &[f64], rel_tol: f64) -> bool {
    if partials.len() < 2 {
        return true;
    }
    let last = *partials.last().unwrap();
    if last.abs() < 1e-12 {
        return true;
    }
    let d_first = partials[1] - partials[0];
    let d_last = last - partials[partials.len() - 2];
    d_last <= rel_tol * d_first.max(1e-12 * last)
}

/// Aggregated assumption-check results with raw numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub family: String,
    pub c1_min_eigenvalue: f64,
    pub c1_pass: bool,
    pub c2_sup_x_grad_a: f64,
    pub c2_sup_x_b: f64,
    pub c2_pass: bool,
    pub c3_min_c: f64,
    pub c3_pass: bool,
    pub c4_integral: f64,
    pub c4_tail_trend: Vec<f64>,
    pub c4_pass: bool,
    pub all_pass: bool,
}

pub const C1_TOL: f64 = 1e-9;
pub const C3_TOL: f64 = 1e-9;
/// Relative-increment tolerance for the boundedness / Cauchy tests over the
/// last radius doubling.
pub const TAIL_REL_TOL: f64 = 1e-2;

/// Run all four assumption checks.
pub fn check_assumptions(
    coeffs: &CoefficientSet,
    spec: &DomainSpec,
    seed: u64,
) -> Result<AssumptionReport> {
    let c1 = check_c1(coeffs, spec, 400, seed);
    let c1_pass = c1 >= coeffs.lambda_claimed - C1_TOL;

    let (seq_a, seq_b) = check_c2(coeffs, spec);
    let sup_a = seq_a.iter().map(|x| x.1).fold(0.0, f64::max);
    let sup_b = seq_b.iter().map(|x| x.1).fold(0.0, f64::max);
    let c2_pass = bounded_sequence(&seq_a, TAIL_REL_TOL) && bounded_sequence(&seq_b, TAIL_REL_TOL);

    let c3 = check_c3(coeffs, spec, 400, seed);
    let c3_pass = c3 >= -C3_TOL;

    let n_k = 8;
    let radii: Vec<f64> = (1..=n_k)
        .map(|k| {
            spec.enclosing_radius
                * (spec.truncation_radius / spec.enclosing_radius)
                    .powf(k as f64 / n_k as f64)
        })
        .collect();
    let partials = check_c4(coeffs, spec, &radii)?;
    let c4_pass = cauchy_sequence(&partials, TAIL_REL_TOL);

    let all_pass = c1_pass && c2_pass && c3_pass && c4_pass;
    Ok(AssumptionReport {
        family: coeffs.name.clone(),
        c1_min_eigenvalue: c1,
        c1_pass,
        c2_sup_x_grad_a: sup_a,
        c2_sup_x_b: sup_b,
        c2_pass,
        c3_min_c: c3,
        c3_pass,
        c4_integral: *partials.last().unwrap(),
        c4_tail_trend: partials,
        c4_pass,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialSpacing;

    fn spec() -> DomainSpec {
        DomainSpec {
            obstacle_radius: 1.0,
            enclosing_radius: 2.0,
            truncation_radius: 32.0,
            n_radial: 16,
            n_angular: 16,
            radial_spacing: RadialSpacing::Log,
        }
    }

    #[test]
    fn remark_optimal_b_value() {
        // b points inward so that |x|^{-2/p} solves the equation:
        // at (2, 0) with p = 2, b = -(2/2) * (1/4) * (2, 0) = (-1/2, 0)
        let c = builtin_family("remark_optimal", &FamilyParams {
            p: Some(2.0),
            ..Default::default()
        })
        .unwrap();
        let b = (c.b)([2.0, 0.0]);
        assert!((b[0] + 0.5).abs() < 1e-15 && b[1].abs() < 1e-15, "b = {b:?}");
        assert!(((c.div_b)([2.0, 0.0])).abs() < 1e-15);
    }

    #[test]
    fn laplace_family_trivial() {
        let c = builtin_family("laplace", &FamilyParams::default()).unwrap();
        assert_eq!((c.a)([3.0, 1.0]), [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!((c.b)([3.0, 1.0]), [0.0, 0.0]);
        assert_eq!((c.c)([3.0, 1.0]), 0.0);
    }

    #[test]
    fn unknown_family_errors() {
        assert!(builtin_family("nope", &FamilyParams::default()).is_err());
    }

    #[test]
    fn c1_identity_is_exactly_one() {
        let c = builtin_family("laplace", &FamilyParams::default()).unwrap();
        for n in [100, 500, 2000] {
            assert_eq!(check_c1(&c, &spec(), n, 7), 1.0);
        }
    }

    #[test]
    fn c1_diagonal_and_radial() {
        let c = builtin_family("anisotropic", &FamilyParams {
            a11: Some(2.0),
            a22: Some(3.0),
            a12: Some(0.0),
            ..Default::default()
        })
        .unwrap();
        assert!((check_c1(&c, &spec(), 200, 1) - 2.0).abs() < 1e-12);

        // a = I + 0.5 e_r e_r^T has eigenvalues {1.5, 1}
        let c = builtin_family("radial_anisotropy", &FamilyParams::default()).unwrap();
        assert!((check_c1(&c, &spec(), 200, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c2_remark_family_constant_one() {
        let p = 2.0;
        let c = builtin_family("remark_optimal", &FamilyParams {
            p: Some(p),
            ..Default::default()
        })
        .unwrap();
        let (_, seq_b) = check_c2(&c, &spec());
        for (_, v) in &seq_b {
            assert!((v - 2.0 / p).abs() < 1e-12, "|x||b| = {v}");
        }
        assert!(bounded_sequence(&seq_b, TAIL_REL_TOL));
    }

    #[test]
    fn c2_constant_b_fails() {
        let c = builtin_family("violator_const_b", &FamilyParams::default()).unwrap();
        let (_, seq_b) = check_c2(&c, &spec());
        assert!(!bounded_sequence(&seq_b, TAIL_REL_TOL));
    }

    #[test]
    fn c3_values() {
        let c = builtin_family("laplace", &FamilyParams::default()).unwrap();
        assert_eq!(check_c3(&c, &spec(), 100, 3), 0.0);
        let c = builtin_family("reaction", &FamilyParams::default()).unwrap();
        assert!(check_c3(&c, &spec(), 100, 3) > 0.0);
        let c = builtin_family("violator_negative_c", &FamilyParams::default()).unwrap();
        assert_eq!(check_c3(&c, &spec(), 100, 3), -1.0);
    }

    #[test]
    fn c4_zero_and_violator() {
        let s = spec();
        let radii = [4.0, 8.0, 16.0, 32.0];
        let c = builtin_family("laplace", &FamilyParams::default()).unwrap();
        let partials = check_c4(&c, &s, &radii).unwrap();
        assert!(partials.iter().all(|&v| v == 0.0));
        assert!(cauchy_sequence(&partials, TAIL_REL_TOL));

        let c = builtin_family("remark_optimal", &FamilyParams {
            p: Some(2.0),
            ..Default::default()
        })
        .unwrap();
        let partials = check_c4(&c, &s, &radii).unwrap();
        assert!(partials.iter().all(|&v| v == 0.0));

        // b = -x has (div b - c)_- = 2: partial integrals grow like area
        let c = builtin_family("violator_inward_b", &FamilyParams::default()).unwrap();
        let partials = check_c4(&c, &s, &radii).unwrap();
        let expect = 2.0 * PI * (16.0 * 16.0 - 1.0); // 2 * area inside r=16
        assert!((partials[2] - expect).abs() / expect < 0.03, "{partials:?}");
        assert!(!cauchy_sequence(&partials, TAIL_REL_TOL));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        // grad_a and div_b agree with central differences at random points
        let h = f64::EPSILON.cbrt();
        let families: Vec<CoefficientSet> = [
            ("laplace", FamilyParams::default()),
            ("remark_optimal", FamilyParams { p: Some(3.0), ..Default::default() }),
            ("rotational", FamilyParams { kappa: Some(0.7), ..Default::default() }),
            ("reaction", FamilyParams::default()),
            ("anisotropic", FamilyParams::default()),
            ("radial_anisotropy", FamilyParams::default()),
        ]
        .iter()
        .map(|(n, p)| builtin_family(n, p).unwrap())
        .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for fam in &families {
            for _ in 0..100 {
                let x = random_point_in_annulus(&mut rng, 1.0, 32.0);
                let step = h * x[0].hypot(x[1]);
                let g = (fam.grad_a)(x);
                for k in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += step;
                    xm[k] -= step;
                    let ap = (fam.a)(xp);
                    let am = (fam.a)(xm);
                    for i in 0..2 {
                        for j in 0..2 {
                            let fd = (ap[i][j] - am[i][j]) / (2.0 * step);
                            let scale = 1.0 + g[k][i][j].abs();
                            assert!(
                                (fd - g[k][i][j]).abs() / scale < 1e-6,
                                "{}: grad_a[{k}][{i}][{j}] fd {fd} vs {}",
                                fam.name,
                                g[k][i][j]
                            );
                        }
                    }
                }
                // div b by central differences
                let mut fd_div = 0.0;
                for k in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += step;
                    xm[k] -= step;
                    fd_div += ((fam.b)(xp)[k] - (fam.b)(xm)[k]) / (2.0 * step);
                }
                let d = (fam.div_b)(x);
                assert!(
                    (fd_div - d).abs() / (1.0 + d.abs()) < 1e-6,
                    "{}: div_b fd {fd_div} vs {d}",
                    fam.name
                );
            }
        }
    }

    #[test]
    fn assumption_report_verdicts() {
        let s = spec();
        let c = builtin_family("remark_optimal", &FamilyParams {
            p: Some(2.0),
            ..Default::default()
        })
        .unwrap();
        let rep = check_assumptions(&c, &s, 42).unwrap();
        assert!(rep.all_pass, "{rep:?}");

        for (name, which) in [
            ("violator_const_b", "c2"),
            ("violator_negative_c", "c3"),
            ("violator_inward_b", "c4"),
        ] {
            let c = builtin_family(name, &FamilyParams::default()).unwrap();
            let rep = check_assumptions(&c, &s, 42).unwrap();
            assert!(!rep.all_pass);
            let (c2, c3, c4) = (rep.c2_pass, rep.c3_pass, rep.c4_pass);
            match which {
                "c2" => assert!(!c2 && c3 && rep.c1_pass, "{rep:?}"),
                "c3" => assert!(c2 && !c3 && c4, "{rep:?}"),
                "c4" => assert!(c3 && !c4, "{rep:?}"),
                _ => unreachable!(),
            }
        }
    }
}
