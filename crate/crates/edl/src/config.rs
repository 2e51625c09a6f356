//! Declarative experiment configuration: one TOML file per experiment, with
//! nested sections for the domain, coefficient family, boundary data,
//! solver, verification and analysis settings, plus optional sweep lists.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{builtin_family, CoefficientSet, FamilyParams};
use crate::error::{EdlError, Result};
use crate::grid::DomainSpec;
use crate::solver::{BoundaryData, OuterCondition};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyBlock {
    pub name: String,
    #[serde(flatten)]
    pub params: FamilyParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterKind {
    /// Homogeneous Dirichlet data on the truncation circle.
    Zero,
    /// Dirichlet data matched to the decay rate r^{-s} of the expected
    /// solution; requires `decay_exponent`.
    Matched,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryBlock {
    #[serde(default = "default_inner_value")]
    pub inner_value: f64,
    #[serde(default = "default_outer")]
    pub outer: OuterKind,
    pub decay_exponent: Option<f64>,
}

fn default_inner_value() -> f64 {
    1.0
}

fn default_outer() -> OuterKind {
    OuterKind::Zero
}

impl Default for BoundaryBlock {
    fn default() -> Self {
        BoundaryBlock {
            inner_value: 1.0,
            outer: OuterKind::Zero,
            decay_exponent: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverBlock {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            tol: 1e-10,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerificationBlock {
    /// Number of geometrically spaced sample levels.
    pub n_levels: usize,
    /// Gradient regularity floor; derived from the field when absent.
    pub grad_floor: Option<f64>,
    /// Level for the six-term identity; largest sampled level when absent.
    pub identity_t: Option<f64>,
    /// Cutoff scale rho; truncation_radius / 4 when absent.
    pub identity_rho: Option<f64>,
    /// Level for the coarea and mean-value checks; identity level when
    /// absent.
    pub coarea_t: Option<f64>,
}

impl Default for VerificationBlock {
    fn default() -> Self {
        VerificationBlock {
            n_levels: 12,
            grad_floor: None,
            identity_t: None,
            identity_rho: None,
            coarea_t: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisBlock {
    /// Lebesgue exponent for norms and the decay target 2/p.
    pub p: f64,
    /// Finite secondary exponents to report alongside the weak norm.
    pub q: Vec<f64>,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        AnalysisBlock {
            p: 2.0,
            q: vec![2.0],
        }
    }
}

/// Cross-product sweep lists; absent axes keep the base value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepBlock {
    pub p: Option<Vec<f64>>,
    pub grid_scale: Option<Vec<usize>>,
    pub truncation_radius: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub family: FamilyBlock,
    #[serde(default)]
    pub boundary: BoundaryBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub verification: VerificationBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    /// Default output directory; the --out flag overrides it.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| EdlError::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            EdlError::MissingInput(format!("config file {}: {e}", path.display()))
        })?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.domain.n_radial < 8 {
            return Err(EdlError::Config(format!(
                "domain.n_radial must be at least 8 for experiments, got {}",
                self.domain.n_radial
            )));
        }
        if !(self.boundary.inner_value >= 0.0) {
            return Err(EdlError::Config(format!(
                "boundary.inner_value must be non-negative, got {}",
                self.boundary.inner_value
            )));
        }
        if self.boundary.outer == OuterKind::Matched && self.boundary.decay_exponent.is_none() {
            return Err(EdlError::Config(
                "boundary.decay_exponent is required when boundary.outer = \"matched\"".into(),
            ));
        }
        if !(self.solver.tol > 0.0) {
            return Err(EdlError::Config(format!(
                "solver.tol must be positive, got {}",
                self.solver.tol
            )));
        }
        if self.verification.n_levels < 2 {
            return Err(EdlError::Config(format!(
                "verification.n_levels must be at least 2, got {}",
                self.verification.n_levels
            )));
        }
        if !(self.analysis.p >= 1.0) {
            return Err(EdlError::Config(format!(
                "analysis.p must be at least 1, got {}",
                self.analysis.p
            )));
        }
        if let Some(q) = self.analysis.q.iter().find(|q| !(**q >= 1.0)) {
            return Err(EdlError::Config(format!(
                "analysis.q entries must be at least 1, got {q}"
            )));
        }
        // fail fast on unknown family names / bad family params
        self.coefficients()?;
        Ok(())
    }

    pub fn coefficients(&self) -> Result<CoefficientSet> {
        builtin_family(&self.family.name, &self.family.params)
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        let outer = match self.boundary.outer {
            OuterKind::Zero => OuterCondition::DirichletZero,
            OuterKind::Matched => {
                OuterCondition::DirichletMatched(self.boundary.decay_exponent.unwrap())
            }
        };
        BoundaryData::constant_inner(&self.domain, self.boundary.inner_value, outer)
    }

    /// Config with the grid refined by an integer factor.
    pub fn with_grid_scale(&self, k: usize) -> ExperimentConfig {
        let mut cfg = self.clone();
        cfg.domain = self.domain.scaled(k);
        cfg
    }

    /// Expand the sweep block into concrete single-run configs, each with a
    /// short directory label. Without a sweep block the base config is the
    /// only combination.
    pub fn expand_sweep(&self) -> Vec<(String, ExperimentConfig)> {
        let sweep = self.sweep.clone().unwrap_or_default();
        let ps = sweep
            .p
            .unwrap_or_else(|| vec![self.family.params.p.unwrap_or(self.analysis.p)]);
        let scales = sweep.grid_scale.unwrap_or_else(|| vec![1]);
        let radii = sweep
            .truncation_radius
            .unwrap_or_else(|| vec![self.domain.truncation_radius]);
        let mut combos = Vec::new();
        for &p in &ps {
            for &k in &scales {
                for &r_out in &radii {
                    let mut cfg = self.with_grid_scale(k);
                    cfg.domain.truncation_radius = r_out;
                    cfg.family.params.p = Some(p);
                    cfg.analysis.p = p;
                    // matched outer data must track the expected rate of the
                    // swept family
                    if cfg.family.name == "remark_optimal" && cfg.boundary.outer == OuterKind::Matched
                    {
                        cfg.boundary.decay_exponent = Some(2.0 / p);
                    }
                    cfg.sweep = None;
                    let label = format!("p{p}_gs{k}_R{r_out}");
                    combos.push((label, cfg));
                }
            }
        }
        combos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [domain]
        obstacle_radius = 1.0
        enclosing_radius = 2.0
        truncation_radius = 32.0
        n_radial = 65
        n_angular = 64
        radial_spacing = "log"

        [family]
        name = "remark_optimal"
        p = 2.0

        [boundary]
        inner_value = 1.0
        outer = "matched"
        decay_exponent = 1.0
    "#;

    #[test]
    fn parses_and_defaults() {
        let cfg = ExperimentConfig::from_str(BASE).unwrap();
        assert_eq!(cfg.solver.max_iter, 50_000);
        assert_eq!(cfg.verification.n_levels, 12);
        assert_eq!(cfg.analysis.p, 2.0);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.coefficients().is_ok());
        assert!(cfg.boundary_data().is_ok());
    }

    #[test]
    fn rejects_bad_geometry_naming_the_field() {
        let bad = BASE.replace("truncation_radius = 32.0", "truncation_radius = 1.5");
        let err = ExperimentConfig::from_str(&bad).unwrap_err();
        assert!(err.to_string().contains("truncation_radius"), "{err}");
    }

    #[test]
    fn rejects_coarse_radial_resolution() {
        let bad = BASE.replace("n_radial = 65", "n_radial = 6");
        let err = ExperimentConfig::from_str(&bad).unwrap_err();
        assert!(err.to_string().contains("n_radial"), "{err}");
    }

    #[test]
    fn rejects_unknown_family() {
        let bad = BASE.replace("remark_optimal", "no_such_family");
        assert!(ExperimentConfig::from_str(&bad).is_err());
    }

    #[test]
    fn matched_outer_requires_exponent() {
        let bad = BASE.replace("decay_exponent = 1.0", "");
        let err = ExperimentConfig::from_str(&bad).unwrap_err();
        assert!(err.to_string().contains("decay_exponent"), "{err}");
    }

    #[test]
    fn sweep_expands_cross_product() {
        let text = format!(
            "{BASE}\n[sweep]\np = [1.0, 2.0, 4.0]\ngrid_scale = [1, 2]\ntruncation_radius = [16.0, 32.0]\n"
        );
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        let combos = cfg.expand_sweep();
        assert_eq!(combos.len(), 12);
        let labels: Vec<_> = combos.iter().map(|(l, _)| l.clone()).collect();
        assert!(labels.contains(&"p4_gs2_R16".to_string()), "{labels:?}");
        // scaled grid really is finer and the per-combo p is applied
        let (_, c) = combos
            .iter()
            .find(|(l, _)| l == "p4_gs2_R16")
            .unwrap();
        assert!(c.domain.n_radial > cfg.domain.n_radial);
        assert_eq!(c.family.params.p, Some(4.0));
        assert_eq!(c.domain.truncation_radius, 16.0);
    }

    #[test]
    fn no_sweep_gives_single_combo() {
        let cfg = ExperimentConfig::from_str(BASE).unwrap();
        assert_eq!(cfg.expand_sweep().len(), 1);
    }
}
