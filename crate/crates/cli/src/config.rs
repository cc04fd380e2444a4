//! TOML experiment configuration.
//!
//! Every table rejects unknown keys. Bounds are checked in
//! [`ExperimentConfig::validate`], whose messages name the offending key.

use bsg_core::activity::Activity;
use bsg_core::cumulants::{GradedRule, Quadrature, MAX_KSTAT_ORDER, MAX_POINTS};
use bsg_core::field::{Density, Grid, Interval, KernelFamily, SeedProfile};
use bsg_core::loggas::{ChainSettings, Insertions, TestFunction};
use bsg_core::onsager::{ConfigSampler, Inequality, Neutrality};
use bsg_core::report::Format;
use serde::Deserialize;

use crate::Failure;

pub const MAX_GRID_POINTS: usize = 4096;
pub const MAX_WORKERS: usize = 256;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub kernel: KernelSection,
    pub model: Model,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub observables: ObservablesSection,
    #[serde(default)]
    pub bracket: BracketSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Named(String),
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub interval: [f64; 2],
    /// `"uniform"` or equally spaced samples of the density.
    pub density: DensitySpec,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            interval: [0.0, 1.0],
            density: DensitySpec::Named("uniform".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    /// `gaussian`, `cauchy` or `constant`.
    pub name: String,
    pub width: f64,
    pub quadrature_order: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            name: "gaussian".into(),
            width: 1.0,
            quadrature_order: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Exactly one of `beta`/`beta_squared` and exactly one of
/// `alpha_gas`/`alpha_library`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub beta: Option<f64>,
    pub beta_squared: Option<f64>,
    pub alpha_gas: Option<OneOrMany>,
    pub alpha_library: Option<OneOrMany>,
}

impl Model {
    pub fn beta(&self) -> f64 {
        match (self.beta, self.beta_squared) {
            (Some(b), _) => b,
            (None, Some(b2)) => b2.sqrt(),
            (None, None) => f64::NAN,
        }
    }

    pub fn activities(&self) -> Vec<Activity> {
        match (&self.alpha_gas, &self.alpha_library) {
            (Some(a), _) => a.values().into_iter().map(Activity::Gas).collect(),
            (None, Some(a)) => a.values().into_iter().map(Activity::Library).collect(),
            (None, None) => Vec::new(),
        }
    }

    /// First listed activity.
    pub fn activity(&self) -> Activity {
        self.activities()[0]
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuadratureSpec {
    Graded {
        #[serde(default = "default_graded_order")]
        order: usize,
        #[serde(default = "default_ppe")]
        panels_per_efold: f64,
        #[serde(default = "default_depth")]
        depth: f64,
    },
    Tensor {
        nodes: usize,
        #[serde(default = "default_panels")]
        panels: usize,
    },
}

fn default_graded_order() -> usize {
    GradedRule::default().order
}
fn default_ppe() -> f64 {
    GradedRule::default().panels_per_efold
}
fn default_depth() -> f64 {
    GradedRule::default().depth
}
fn default_panels() -> usize {
    1
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        let g = GradedRule::default();
        QuadratureSpec::Graded {
            order: g.order,
            panels_per_efold: g.panels_per_efold,
            depth: g.depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mcmc {
    pub samples: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub move_mix: [f64; 3],
    pub step_fraction: f64,
}

impl Default for Mcmc {
    fn default() -> Self {
        let s = ChainSettings::default();
        Mcmc {
            samples: 100_000,
            burn_in: s.burn_in,
            thinning: s.thinning,
            move_mix: s.move_mix,
            step_fraction: s.step_fraction,
        }
    }
}

impl Mcmc {
    pub fn settings(&self) -> ChainSettings {
        ChainSettings {
            burn_in: self.burn_in,
            thinning: self.thinning,
            move_mix: self.move_mix,
            step_fraction: self.step_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub grid_points: usize,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub order_max: usize,
    pub n_max: usize,
    pub quadrature: QuadratureSpec,
    /// Adds k-statistic cumulants to the `cumulants` report.
    pub monte_carlo: bool,
    pub mcmc: Mcmc,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            grid_points: 256,
            t_grid: vec![1.0, 2.0, 3.0, 4.0],
            replicas: 10_000,
            order_max: 4,
            n_max: 8,
            quadrature: QuadratureSpec::default(),
            monte_carlo: false,
            mcmc: Mcmc::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Execution {
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for Execution {
    fn default() -> Self {
        Execution {
            master_seed: 1,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatSpec {
    Csv,
    Json,
}

impl From<FormatSpec> for Format {
    fn from(f: FormatSpec) -> Self {
        match f {
            FormatSpec::Csv => Format::Csv,
            FormatSpec::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub directory: String,
    pub formats: Vec<FormatSpec>,
    /// Chain states as NDJSON next to the `gibbs` report.
    pub trajectory: bool,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            directory: "out".into(),
            formats: vec![FormatSpec::Csv],
            trajectory: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeutralSampler {
    Dipole,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub inequalities: Vec<Inequality>,
    pub particle_counts: Vec<usize>,
    pub s: f64,
    pub u_list: Vec<f64>,
    pub samples: usize,
    pub neutral_sampler: NeutralSampler,
    pub gammas: Vec<f64>,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection {
            inequalities: vec![Inequality::Baseline, Inequality::NeutralRefined, Inequality::NonNeutral],
            particle_counts: vec![2, 4],
            s: 0.0,
            u_list: vec![2.0, 4.0, 6.0, 8.0],
            samples: 2000,
            neutral_sampler: NeutralSampler::Dipole,
            gammas: vec![0.5, 1.0, 2.0],
        }
    }
}

impl AuditSection {
    pub fn sampler(&self, inequality: Inequality) -> ConfigSampler {
        match inequality {
            Inequality::Baseline => ConfigSampler::Uniform { class: Neutrality::Any },
            Inequality::NonNeutral => ConfigSampler::Uniform {
                class: Neutrality::NonNeutral,
            },
            Inequality::NeutralRefined => match self.neutral_sampler {
                NeutralSampler::Dipole => ConfigSampler::Dipole {
                    gammas: self.gammas.clone(),
                },
                NeutralSampler::Uniform => ConfigSampler::Uniform {
                    class: Neutrality::Neutral,
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    /// `amplitude · sin(2π frequency (x − lo)/|I|)`.
    Sine { amplitude: f64, frequency: f64 },
    Cosine { amplitude: f64, frequency: f64 },
    Constant { value: f64 },
    /// Equally spaced samples spanning `I`.
    Table { values: Vec<f64> },
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Sine {
            amplitude: 0.5,
            frequency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionSpec {
    pub z: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesSection {
    pub theta: ThetaSpec,
    pub theta_points: usize,
    pub insertions: Vec<InsertionSpec>,
}

impl Default for ObservablesSection {
    fn default() -> Self {
        ObservablesSection {
            theta: ThetaSpec::default(),
            theta_points: 257,
            insertions: vec![InsertionSpec { z: 0.5, eta: 0.3 }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BracketSection {
    pub s_list: Vec<f64>,
}

impl Default for BracketSection {
    fn default() -> Self {
        BracketSection {
            s_list: (0..=6).map(|k| 3.0 + 0.5 * k as f64).collect(),
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{key}: {msg}"))
}

fn positive_finite(key: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

fn increasing(key: &str, v: &[f64], lo: f64) -> Result<(), Failure> {
    if v.is_empty() {
        return Err(bad(key, "must not be empty"));
    }
    if v.iter().any(|x| !x.is_finite() || *x < lo) {
        return Err(bad(key, format!("values must be finite and >= {lo}")));
    }
    if !v.windows(2).all(|w| w[0] < w[1]) {
        return Err(bad(key, "values must be strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let [lo, hi] = self.geometry.interval;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(bad("geometry.interval", format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if let DensitySpec::Named(n) = &self.geometry.density {
            if n != "uniform" {
                return Err(bad("geometry.density", format!("expected \"uniform\" or a table, got {n:?}")));
            }
        }
        match self.kernel.name.as_str() {
            "gaussian" | "cauchy" => positive_finite("kernel.width", self.kernel.width)?,
            "constant" => {}
            other => return Err(bad("kernel.name", format!("unknown seed profile {other:?}"))),
        }
        if !(1..=128).contains(&self.kernel.quadrature_order) {
            return Err(bad("kernel.quadrature_order", "must be in 1..=128"));
        }

        let m = &self.model;
        match (m.beta, m.beta_squared) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(bad("model", "set exactly one of beta, beta_squared"));
            }
            (Some(b), None) if !(b.is_finite() && b >= 0.0) => {
                return Err(bad("model.beta", format!("must be finite and >= 0, got {b}")));
            }
            (None, Some(b2)) if !(b2.is_finite() && b2 >= 0.0) => {
                return Err(bad("model.beta_squared", format!("must be finite and >= 0, got {b2}")));
            }
            _ => {}
        }
        let key = match (&m.alpha_gas, &m.alpha_library) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(bad("model", "set exactly one activity convention: alpha_gas or alpha_library"));
            }
            (Some(_), None) => "model.alpha_gas",
            (None, Some(_)) => "model.alpha_library",
        };
        let acts = m.activities();
        if acts.is_empty() {
            return Err(bad(key, "must not be empty"));
        }
        for a in &acts {
            a.validate().map_err(|e| bad(key, e))?;
        }

        let n = &self.numerics;
        if !(2..=MAX_GRID_POINTS).contains(&n.grid_points) {
            return Err(bad("numerics.grid_points", format!("must be in 2..={MAX_GRID_POINTS}")));
        }
        increasing("numerics.t_grid", &n.t_grid, 0.0)?;
        if n.t_grid[0] == 0.0 {
            return Err(bad("numerics.t_grid", "cutoffs must be positive"));
        }
        if n.replicas == 0 {
            return Err(bad("numerics.replicas", "must be at least 1"));
        }
        if !(1..=MAX_KSTAT_ORDER).contains(&n.order_max) {
            return Err(bad("numerics.order_max", format!("must be in 1..={MAX_KSTAT_ORDER}")));
        }
        if n.n_max > MAX_POINTS {
            return Err(bad("numerics.n_max", format!("must be at most {MAX_POINTS}")));
        }
        match &n.quadrature {
            QuadratureSpec::Graded {
                order,
                panels_per_efold,
                depth,
            } => {
                if !(1..=64).contains(order) {
                    return Err(bad("numerics.quadrature.order", "must be in 1..=64"));
                }
                positive_finite("numerics.quadrature.panels_per_efold", *panels_per_efold)?;
                if !(depth.is_finite() && *depth >= 0.0) {
                    return Err(bad("numerics.quadrature.depth", "must be finite and >= 0"));
                }
            }
            QuadratureSpec::Tensor { nodes, panels } => {
                if !(1..=1024).contains(nodes) {
                    return Err(bad("numerics.quadrature.nodes", "must be in 1..=1024"));
                }
                if !(1..=1024).contains(panels) {
                    return Err(bad("numerics.quadrature.panels", "must be in 1..=1024"));
                }
            }
        }
        let mc = &n.mcmc;
        if mc.samples == 0 {
            return Err(bad("numerics.mcmc.samples", "must be at least 1"));
        }
        mc.settings().validate().map_err(|e| bad("numerics.mcmc", e))?;

        if !(1..=MAX_WORKERS).contains(&self.execution.workers) {
            return Err(bad("execution.workers", format!("must be in 1..={MAX_WORKERS}")));
        }
        if self.output.formats.is_empty() {
            return Err(bad("output.formats", "must not be empty"));
        }

        let a = &self.audit;
        if a.inequalities.is_empty() {
            return Err(bad("audit.inequalities", "must not be empty"));
        }
        if a.particle_counts.is_empty() || a.particle_counts.iter().any(|&i| i == 0 || i > 64) {
            return Err(bad("audit.particle_counts", "need counts in 1..=64"));
        }
        if !(a.s.is_finite() && a.s >= 0.0) {
            return Err(bad("audit.s", "must be finite and >= 0"));
        }
        increasing("audit.u_list", &a.u_list, a.s)?;
        if a.samples == 0 {
            return Err(bad("audit.samples", "must be at least 1"));
        }
        if a.gammas.is_empty() || a.gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(bad("audit.gammas", "need positive finite values"));
        }
        for &ineq in &a.inequalities {
            for &i in &a.particle_counts {
                a.sampler(ineq)
                    .check(i)
                    .map_err(|e| bad("audit.particle_counts", format!("{} with i={i}: {e}", ineq.name())))?;
            }
        }

        let o = &self.observables;
        if !(2..=bsg_core::loggas::MAX_THETA_POINTS).contains(&o.theta_points) {
            return Err(bad(
                "observables.theta_points",
                format!("must be in 2..={}", bsg_core::loggas::MAX_THETA_POINTS),
            ));
        }
        self.theta().map_err(|e| bad("observables.theta", e))?;
        if o.insertions.is_empty() {
            return Err(bad("observables.insertions", "must not be empty"));
        }
        self.insertions().map_err(|e| bad("observables.insertions", e))?;
        increasing("bracket.s_list", &self.bracket.s_list, 0.0)?;
        self.family().map_err(|e| bad("geometry", e))?;
        Ok(())
    }

    pub fn interval(&self) -> Interval {
        let [lo, hi] = self.geometry.interval;
        Interval::new(lo, hi).expect("validated interval")
    }

    pub fn family(&self) -> bsg_core::Result<KernelFamily> {
        let [lo, hi] = self.geometry.interval;
        let seed = match self.kernel.name.as_str() {
            "cauchy" => SeedProfile::Cauchy { width: self.kernel.width },
            "constant" => SeedProfile::Constant,
            _ => SeedProfile::Gaussian { width: self.kernel.width },
        };
        let density = match &self.geometry.density {
            DensitySpec::Named(_) => Density::Uniform,
            DensitySpec::Table(v) => Density::Table(v.clone()),
        };
        KernelFamily::new(seed, Interval::new(lo, hi)?, density, self.kernel.quadrature_order)
    }

    pub fn quadrature(&self, family: &KernelFamily) -> bsg_core::Result<Quadrature> {
        Ok(match &self.numerics.quadrature {
            QuadratureSpec::Graded {
                order,
                panels_per_efold,
                depth,
            } => Quadrature::Graded(GradedRule {
                order: *order,
                panels_per_efold: *panels_per_efold,
                depth: *depth,
            }),
            QuadratureSpec::Tensor { nodes, panels } => {
                Quadrature::Tensor(Grid::gauss_legendre(family, *panels, *nodes)?)
            }
        })
    }

    pub fn theta(&self) -> bsg_core::Result<TestFunction> {
        let iv = self.interval();
        let points = self.observables.theta_points;
        let unit = move |x: f64| (x - iv.lo) / iv.length();
        let tau = std::f64::consts::TAU;
        match self.observables.theta.clone() {
            ThetaSpec::Sine { amplitude, frequency } => {
                TestFunction::from_fn(iv, points, |x| amplitude * (tau * frequency * unit(x)).sin())
            }
            ThetaSpec::Cosine { amplitude, frequency } => {
                TestFunction::from_fn(iv, points, |x| amplitude * (tau * frequency * unit(x)).cos())
            }
            ThetaSpec::Constant { value } => TestFunction::from_fn(iv, points, |_| value),
            ThetaSpec::Table { values } => TestFunction::new(iv, values),
        }
    }

    pub fn insertions(&self) -> bsg_core::Result<Insertions> {
        let ins = &self.observables.insertions;
        Insertions::new(
            ins.iter().map(|i| i.z).collect(),
            ins.iter().map(|i| i.eta).collect(),
            &self.interval(),
        )
    }

    pub fn formats(&self) -> Vec<Format> {
        let mut out: Vec<Format> = Vec::new();
        for f in &self.output.formats {
            let f = Format::from(*f);
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nbeta = 0.8\nalpha_gas = 0.25\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.numerics.order_max, 4);
        assert_eq!(c.model.activity(), Activity::Gas(0.25));
        assert_eq!(c.execution.workers, 1);
        assert!(c.family().unwrap().is_uniform());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}betta = 1.0\n")).unwrap_err();
        assert!(err.to_string().contains("betta"), "{err}");
        let err = ExperimentConfig::parse(&format!("{MINIMAL}[numerics]\ngrid_pionts = 3\n")).unwrap_err();
        assert!(err.to_string().contains("grid_pionts"), "{err}");
        let err =
            ExperimentConfig::parse(&format!("{MINIMAL}[numerics.quadrature]\nkind = \"tensor\"\nnode = 3\n"))
                .unwrap_err();
        assert!(matches!(err, Failure::Config(_)));
    }

    #[test]
    fn exactly_one_activity_convention() {
        let both = "[model]\nbeta = 0.8\nalpha_gas = 0.25\nalpha_library = 0.5\n";
        assert!(ExperimentConfig::parse(both).unwrap_err().to_string().contains("alpha_library"));
        let none = "[model]\nbeta = 0.8\n";
        assert!(ExperimentConfig::parse(none).is_err());
        let lib = ExperimentConfig::parse("[model]\nbeta_squared = 0.64\nalpha_library = [0.1, 0.2]\n").unwrap();
        assert_eq!(lib.model.activities().len(), 2);
        assert!((lib.model.beta() - 0.8).abs() < 1e-15);
        assert_eq!(lib.model.activity().gas(), 0.05);
    }

    #[test]
    fn bounds_name_their_key() {
        for (extra, key) in [
            ("[numerics]\nt_grid = [2.0, 1.0]\n", "numerics.t_grid"),
            ("[numerics]\norder_max = 9\n", "numerics.order_max"),
            ("[execution]\nworkers = 0\n", "execution.workers"),
            ("[kernel]\nname = \"bessel\"\n", "kernel.name"),
            ("[audit]\nparticle_counts = [3]\ninequalities = [\"neutral_refined\"]\n", "audit.particle_counts"),
            ("[geometry]\ninterval = [1.0, 0.0]\n", "geometry.interval"),
        ] {
            let err = ExperimentConfig::parse(&format!("{MINIMAL}{extra}")).unwrap_err();
            assert!(err.to_string().contains(key), "{key}: {err}");
        }
    }

    #[test]
    fn theta_profiles() {
        let c = ExperimentConfig::parse(&format!(
            "{MINIMAL}[observables]\ntheta = {{ kind = \"constant\", value = 0.3 }}\n"
        ))
        .unwrap();
        assert!(c.theta().unwrap().values().iter().all(|&v| v == 0.3));
        let s = ExperimentConfig::parse(MINIMAL).unwrap().theta().unwrap();
        assert!((s.eval(0.25) - 0.5).abs() < 1e-12);
    }
}
