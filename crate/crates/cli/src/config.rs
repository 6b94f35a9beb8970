//! Run configuration: TOML with sections, unknown keys rejected.

use std::f64::consts::SQRT_2;

use qafem::eigen::DEFAULT_SEED;
use qafem::mesh::DomainSpec;
use qafem::physics::DEFAULT_DENSITY_FLOOR;
use qafem::{AfemOptions, Marking, N1Preset, N1Variant, Potential, Problem64, StopRule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub domain: DomainConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub afem: AfemConfig,
    #[serde(default)]
    pub scf: ScfConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_degree() -> usize {
    1
}

fn default_output_dir() -> String {
    "qafem-out".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    UnitSquare,
    Rectangle,
    LShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub kappa: f64,
    pub n_states: usize,
    pub alpha: f64,
    pub potential: PotentialConfig,
    pub n1: N1Config,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            kappa: 1.0,
            n_states: 1,
            alpha: 0.0,
            potential: PotentialConfig::default(),
            n1: N1Config::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    None,
    Constant,
    Harmonic,
    Coulomb,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charges: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<[f64; 2]>>,
    /// Defaults to 5% of the domain diameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum N1Kind {
    #[default]
    None,
    Gpe,
    Tfdw,
    XAlpha,
    PzLda,
    VwnLda,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct N1Config {
    pub preset: N1Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkingKind {
    #[default]
    Maximum,
    Dorfler,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AfemConfig {
    pub theta: f64,
    pub marking: MarkingKind,
    pub eta_tol: f64,
    pub max_dof: usize,
    pub max_iter: usize,
    /// Uniform bisection sweeps applied to the initial mesh.
    pub pre_refine: usize,
    /// `false` writes zero wall times, making history.csv reproducible.
    pub timing: bool,
}

impl Default for AfemConfig {
    fn default() -> Self {
        let d = AfemOptions::<f64>::default();
        AfemConfig {
            theta: d.theta,
            marking: MarkingKind::Maximum,
            eta_tol: d.stop.eta_tol,
            max_dof: d.stop.max_dof,
            max_iter: d.stop.max_iter,
            pre_refine: d.pre_refine,
            timing: d.timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfConfig {
    pub mixing: f64,
    pub tol_density: f64,
    pub tol_eigen: f64,
    pub max_outer: usize,
    pub poisson_tol: f64,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
}

impl Default for ScfConfig {
    fn default() -> Self {
        let d = qafem::ScfOptions::<f64>::default();
        ScfConfig {
            mixing: d.mixing,
            tol_density: d.tol_density,
            tol_eigen: d.tol_eigen,
            max_outer: d.max_outer,
            poisson_tol: d.poisson_tol,
            eigen_tol: d.eigen.tol,
            eigen_max_iter: d.eigen.max_iter,
        }
    }
}

/// Everything `afem_run` needs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: Problem64,
    pub domain: DomainSpec<f64>,
    pub opts: AfemOptions<f64>,
}

/// A validation failure tied to a dotted key such as `problem.n1.beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub key: String,
    pub msg: String,
}

fn violation(key: &str, msg: impl Into<String>) -> Violation {
    Violation {
        key: key.into(),
        msg: msg.into(),
    }
}

/// Parses and validates; `origin` names the source in messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    if let Err(v) = cfg.validate() {
        let line = locate_key(text, &v.key)
            .map(|l| format!(":{l}"))
            .unwrap_or_default();
        return Err(CliError::Config(format!("{origin}{line}: `{}` {}", v.key, v.msg)));
    }
    Ok(cfg)
}

/// 1-based line of a dotted key, falling back to its section header.
pub fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = match dotted.rfind('.') {
        Some(i) => (&dotted[..i], &dotted[i + 1..]),
        None => ("", dotted),
    };
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

fn positive(key: &str, v: f64) -> Result<(), Violation> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(violation(key, format!("must be positive and finite, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<(), Violation> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(violation(key, format!("must be finite, got {v}")))
    }
}

fn require(key: &str, v: Option<f64>) -> Result<f64, Violation> {
    v.ok_or_else(|| violation(key, "is required by the selected preset"))
}

/// Rejects parameters the chosen preset does not read.
fn only(section: &str, present: &[(&str, bool)], allowed: &[&str], what: &str) -> Result<(), Violation> {
    for (name, set) in present {
        if *set && !allowed.contains(name) {
            return Err(violation(&format!("{section}.{name}"), format!("is not a parameter of {what}")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Violation> {
        if !(1..=2).contains(&self.degree) {
            return Err(violation("degree", format!("must be 1 or 2, got {}", self.degree)));
        }
        if let Some(q) = self.quad_order {
            if !(1..=6).contains(&q) || q < 2 * self.degree {
                return Err(violation(
                    "quad_order",
                    format!("must lie in [{}, 6] for degree {}, got {q}", 2 * self.degree, self.degree),
                ));
            }
        }
        if self.output_dir.trim().is_empty() {
            return Err(violation("output_dir", "must not be empty"));
        }
        self.validate_domain()?;
        self.validate_problem()?;

        let a = &self.afem;
        if !(a.theta > 0.0 && a.theta <= 1.0) {
            return Err(violation("afem.theta", format!("must lie in (0, 1], got {}", a.theta)));
        }
        positive("afem.eta_tol", a.eta_tol)?;
        if a.max_dof == 0 {
            return Err(violation("afem.max_dof", "must be at least 1"));
        }
        if a.max_iter == 0 {
            return Err(violation("afem.max_iter", "must be at least 1"));
        }
        if a.pre_refine > 30 {
            return Err(violation("afem.pre_refine", "must be at most 30"));
        }

        let s = &self.scf;
        if !(s.mixing > 0.0 && s.mixing <= 1.0) {
            return Err(violation("scf.mixing", format!("must lie in (0, 1], got {}", s.mixing)));
        }
        positive("scf.tol_density", s.tol_density)?;
        positive("scf.tol_eigen", s.tol_eigen)?;
        positive("scf.poisson_tol", s.poisson_tol)?;
        positive("scf.eigen_tol", s.eigen_tol)?;
        if s.max_outer == 0 {
            return Err(violation("scf.max_outer", "must be at least 1"));
        }
        if s.eigen_max_iter == 0 {
            return Err(violation("scf.eigen_max_iter", "must be at least 1"));
        }
        Ok(())
    }

    fn validate_domain(&self) -> Result<(), Violation> {
        let d = &self.domain;
        match d.kind {
            DomainKind::Rectangle => {
                let lo = d.min.ok_or_else(|| violation("domain.min", "is required for a rectangle"))?;
                let hi = d.max.ok_or_else(|| violation("domain.max", "is required for a rectangle"))?;
                for i in 0..2 {
                    finite("domain.min", lo[i])?;
                    finite("domain.max", hi[i])?;
                    if hi[i] <= lo[i] {
                        return Err(violation("domain.max", "must exceed domain.min in both coordinates"));
                    }
                }
            }
            DomainKind::UnitSquare | DomainKind::LShape => {
                if d.min.is_some() {
                    return Err(violation("domain.min", "only applies to kind = \"rectangle\""));
                }
                if d.max.is_some() {
                    return Err(violation("domain.max", "only applies to kind = \"rectangle\""));
                }
            }
        }
        Ok(())
    }

    fn validate_problem(&self) -> Result<(), Violation> {
        let p = &self.problem;
        positive("problem.kappa", p.kappa)?;
        finite("problem.alpha", p.alpha)?;
        if p.n_states == 0 {
            return Err(violation("problem.n_states", "must be at least 1"));
        }

        let v = &p.potential;
        let present = [
            ("value", v.value.is_some()),
            ("gamma", v.gamma.is_some()),
            ("charges", v.charges.is_some()),
            ("centers", v.centers.is_some()),
            ("epsilon", v.epsilon.is_some()),
        ];
        let sec = "problem.potential";
        match v.kind {
            PotentialKind::None => only(sec, &present, &[], "kind = \"none\"")?,
            PotentialKind::Constant => {
                only(sec, &present, &["value"], "kind = \"constant\"")?;
                finite("problem.potential.value", require("problem.potential.value", v.value)?)?;
            }
            PotentialKind::Harmonic => {
                only(sec, &present, &["gamma"], "kind = \"harmonic\"")?;
                let g = v
                    .gamma
                    .ok_or_else(|| violation("problem.potential.gamma", "is required by the selected preset"))?;
                positive("problem.potential.gamma", g[0])?;
                positive("problem.potential.gamma", g[1])?;
            }
            PotentialKind::Coulomb => {
                only(sec, &present, &["charges", "centers", "epsilon"], "kind = \"coulomb\"")?;
                let z = v
                    .charges
                    .as_ref()
                    .ok_or_else(|| violation("problem.potential.charges", "is required by the selected preset"))?;
                let c = v
                    .centers
                    .as_ref()
                    .ok_or_else(|| violation("problem.potential.centers", "is required by the selected preset"))?;
                if z.len() != c.len() || z.is_empty() {
                    return Err(violation(
                        "problem.potential.centers",
                        format!("needs one center per charge, got {} charges and {} centers", z.len(), c.len()),
                    ));
                }
                for &q in z {
                    finite("problem.potential.charges", q)?;
                }
                for x in c {
                    finite("problem.potential.centers", x[0])?;
                    finite("problem.potential.centers", x[1])?;
                }
                if let Some(eps) = v.epsilon {
                    positive("problem.potential.epsilon", eps)?;
                }
            }
        }

        let n = &p.n1;
        let present = [
            ("beta", n.beta.is_some()),
            ("beta1", n.beta1.is_some()),
            ("beta2", n.beta2.is_some()),
            ("nu", n.nu.is_some()),
            ("alpha_x", n.alpha_x.is_some()),
            ("sign", n.sign.is_some()),
        ];
        let sec = "problem.n1";
        match n.preset {
            N1Kind::None => only(sec, &present, &[], "preset = \"none\"")?,
            N1Kind::Gpe => {
                only(sec, &present, &["beta"], "preset = \"gpe\"")?;
                finite("problem.n1.beta", require("problem.n1.beta", n.beta)?)?;
            }
            N1Kind::Tfdw => {
                only(sec, &present, &["beta1", "beta2", "nu"], "preset = \"tfdw\"")?;
                finite("problem.n1.beta1", require("problem.n1.beta1", n.beta1)?)?;
                finite("problem.n1.beta2", require("problem.n1.beta2", n.beta2)?)?;
                let nu = require("problem.n1.nu", n.nu)?;
                if !(nu > 1.0 && nu < 3.0) {
                    return Err(violation("problem.n1.nu", format!("must lie in (1, 3), got {nu}")));
                }
            }
            N1Kind::XAlpha => {
                only(sec, &present, &["alpha_x", "sign"], "preset = \"x_alpha\"")?;
                finite("problem.n1.alpha_x", require("problem.n1.alpha_x", n.alpha_x)?)?;
                if let Some(s) = n.sign {
                    if s != 1.0 && s != -1.0 {
                        return Err(violation("problem.n1.sign", format!("must be 1 or -1, got {s}")));
                    }
                }
            }
            N1Kind::PzLda => only(sec, &present, &[], "preset = \"pz_lda\"")?,
            N1Kind::VwnLda => only(sec, &present, &[], "preset = \"vwn_lda\"")?,
        }
        if let Some(f) = n.floor {
            positive("problem.n1.floor", f)?;
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> DomainSpec<f64> {
        match self.domain.kind {
            DomainKind::UnitSquare => DomainSpec::unit_square(),
            DomainKind::LShape => DomainSpec::l_shape(),
            DomainKind::Rectangle => DomainSpec::Rectangle {
                min: self.domain.min.unwrap_or([0.0, 0.0]),
                max: self.domain.max.unwrap_or([1.0, 1.0]),
            },
        }
    }

    /// Diameter of the domain's bounding box.
    pub fn domain_diameter(&self) -> f64 {
        match self.domain.kind {
            DomainKind::UnitSquare => SQRT_2,
            DomainKind::LShape => 2.0 * SQRT_2,
            DomainKind::Rectangle => {
                let lo = self.domain.min.unwrap_or([0.0, 0.0]);
                let hi = self.domain.max.unwrap_or([1.0, 1.0]);
                (hi[0] - lo[0]).hypot(hi[1] - lo[1])
            }
        }
    }

    fn potential(&self) -> Potential<f64> {
        let v = &self.problem.potential;
        match v.kind {
            PotentialKind::None => Potential::None,
            PotentialKind::Constant => Potential::Constant(v.value.unwrap_or(0.0)),
            PotentialKind::Harmonic => Potential::Harmonic {
                gamma: v.gamma.unwrap_or([1.0, 1.0]),
            },
            PotentialKind::Coulomb => Potential::Coulomb {
                charges: v.charges.clone().unwrap_or_default(),
                centers: v.centers.clone().unwrap_or_default(),
                epsilon: v.epsilon.unwrap_or(0.05 * self.domain_diameter()),
            },
        }
    }

    fn n1(&self) -> N1Preset<f64> {
        let n = &self.problem.n1;
        let variant = match n.preset {
            N1Kind::None => N1Variant::None,
            N1Kind::Gpe => N1Variant::Gpe {
                beta: n.beta.unwrap_or(0.0),
            },
            N1Kind::Tfdw => N1Variant::Tfdw {
                beta1: n.beta1.unwrap_or(0.0),
                beta2: n.beta2.unwrap_or(0.0),
                nu: n.nu.unwrap_or(2.0),
            },
            N1Kind::XAlpha => N1Variant::XAlpha {
                alpha: n.alpha_x.unwrap_or(0.0),
                sign: n.sign.unwrap_or(1.0),
            },
            N1Kind::PzLda => N1Variant::PzLda,
            N1Kind::VwnLda => N1Variant::VwnLda,
        };
        N1Preset {
            variant,
            floor: n.floor.unwrap_or(DEFAULT_DENSITY_FLOOR),
        }
    }

    /// Library inputs for this configuration. Assumes [`RunConfig::validate`] passed.
    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let p = &self.problem;
        let spec = Problem64 {
            kappa: p.kappa,
            potential: self.potential(),
            n1: self.n1(),
            alpha: p.alpha,
            n_states: p.n_states,
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let mut opts = AfemOptions::<f64>::default();
        opts.theta = self.afem.theta;
        opts.degree = self.degree;
        opts.quad_order = self.quad_order;
        opts.marking = match self.afem.marking {
            MarkingKind::Maximum => Marking::Maximum,
            MarkingKind::Dorfler => Marking::Dorfler,
            MarkingKind::Uniform => Marking::Uniform,
        };
        opts.stop = StopRule {
            eta_tol: self.afem.eta_tol,
            max_dof: self.afem.max_dof,
            max_iter: self.afem.max_iter,
        };
        opts.pre_refine = self.afem.pre_refine;
        opts.timing = self.afem.timing;
        let s = &self.scf;
        opts.scf.mixing = s.mixing;
        opts.scf.tol_density = s.tol_density;
        opts.scf.tol_eigen = s.tol_eigen;
        opts.scf.max_outer = s.max_outer;
        opts.scf.poisson_tol = s.poisson_tol;
        opts.scf.eigen.tol = s.eigen_tol;
        opts.scf.eigen.max_iter = s.eigen_max_iter;
        opts.scf.eigen.seed = self.seed;

        Ok(Experiment {
            spec,
            domain: self.domain_spec(),
            opts,
        })
    }
}
