//! Scenario configuration file: a TOML document whose sections all have
//! defaults, so an empty file describes the baseline deployment.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::{CoopTerm, EnergyForm, PowerModel, QuadratureConfig};
use crate::caching::PolicyKind;
use crate::channel::{ChannelConfig, Environment, EnvironmentKind, ShadowingConvention};
use crate::error::{Error, Result};
use crate::simulator::{CacheMode, FarFieldMode, Sampling, SimConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    /// Overrides of the selected preset; required in full for `custom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentSection>,
    pub channel: ChannelSection,
    pub power: PowerSection,
    pub quadrature: QuadratureSection,
    pub simulation: SimulationSection,
    pub output: OutputSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub environment: EnvironmentKind,
    /// UAVs per km².
    pub lambda: f64,
    /// Cooperation radius, km.
    pub x_cop: f64,
    /// UAV altitude, km.
    pub altitude: f64,
    pub subchannels: usize,
    pub library_size: usize,
    pub cache_size: usize,
    pub kappa: f64,
    pub policy: PolicyKind,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            environment: EnvironmentKind::SubUrban,
            lambda: 1e-3,
            x_cop: 1.0,
            altitude: 1.0,
            subchannels: 64,
            library_size: 20,
            cache_size: 5,
            kappa: 0.8,
            policy: PolicyKind::Rcp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_los: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_nlos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_los: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_nlos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_los: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_nlos: Option<f64>,
}

impl EnvironmentSection {
    fn fields(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("phi", self.phi),
            ("psi", self.psi),
            ("mu_los", self.mu_los),
            ("mu_nlos", self.mu_nlos),
            ("a_los", self.a_los),
            ("a_nlos", self.a_nlos),
            ("c_los", self.c_los),
            ("c_nlos", self.c_nlos),
        ]
    }

    fn is_empty(&self) -> bool {
        self.fields().iter().all(|(_, v)| v.is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub k_los: f64,
    pub k_nlos: f64,
    pub wbar_los: f64,
    pub wbar_nlos: f64,
    pub shadowing_convention: ShadowingConvention,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let c = ChannelConfig::<f64>::default();
        Self {
            alpha_los: c.alpha_l,
            alpha_nlos: c.alpha_n,
            k_los: c.k_l,
            k_nlos: c.k_n,
            wbar_los: c.wbar_l,
            wbar_nlos: c.wbar_n,
            shadowing_convention: c.shadowing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    /// W.
    pub transmit: f64,
    /// W per cached file.
    pub per_file: f64,
    /// W.
    pub static_power: f64,
    /// W per unit rate (in the output units).
    pub zeta: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        let p = PowerModel::<f64>::default();
        Self {
            transmit: p.transmit,
            per_file: p.per_file,
            static_power: p.static_power,
            zeta: p.zeta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub hermite_nodes: usize,
    pub rel_tol: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub z_max: f64,
    pub far_tail: bool,
    pub k_max_tail: f64,
    pub coop_term: CoopTerm,
    /// Budget-residual tolerance of the placement bisections.
    pub placement_tol: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::<f64>::default();
        Self {
            hermite_nodes: q.hermite_nodes,
            rel_tol: q.rel_tol,
            v_min: q.v_min,
            v_max: q.v_max,
            z_max: q.z_max,
            far_tail: q.far_tail,
            k_max_tail: q.k_max_tail,
            coop_term: CoopTerm::default(),
            placement_tol: crate::caching::DEFAULT_BUDGET_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub trials: u64,
    pub seed: u64,
    /// Window radius, km; defaults to `30·max(x_cop, altitude)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// `inf` disables the cap.
    pub sir_cap: f64,
    pub cache_mode: CacheMode,
    pub sampling: Sampling,
    pub far_field: FarFieldMode,
    pub far_threshold: f64,
    /// Requests simulated for the `lru_empirical` policy.
    pub lru_requests: u64,
    pub lru_warmup: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let s = SimConfig::<f64>::default();
        Self {
            trials: 100_000,
            seed: 1,
            r_max: s.r_max,
            sir_cap: s.sir_cap.unwrap_or(f64::INFINITY),
            cache_mode: s.cache_mode,
            sampling: s.sampling,
            far_field: s.far_field,
            far_threshold: s.far_threshold,
            lru_requests: 1_000_000,
            lru_warmup: 10_000,
        }
    }
}

impl SimulationSection {
    pub fn sim_config(&self) -> SimConfig<f64> {
        SimConfig {
            r_max: self.r_max,
            sir_cap: self.sir_cap.is_finite().then_some(self.sir_cap),
            cache_mode: self.cache_mode,
            sampling: self.sampling,
            far_field: self.far_field,
            far_threshold: self.far_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    /// Factor converting a rate in nats.
    pub fn per_nat(self) -> f64 {
        match self {
            Units::Bits => std::f64::consts::LOG2_E,
            Units::Nats => 1.0,
        }
    }
}

/// Denominator of the analytic energy efficiency; Monte Carlo rows always
/// estimate the exact form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EeForm {
    #[default]
    Approximate,
    Exact,
}

impl EeForm {
    pub fn energy_form(self) -> EnergyForm {
        match self {
            EeForm::Approximate => EnergyForm::Approximate,
            EeForm::Exact => EnergyForm::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub units: Units,
    pub ee_form: EeForm,
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    XCop,
    Kappa,
    LibrarySize,
    Altitude,
    Density,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::XCop => "x_cop",
            SweepVariable::Kappa => "kappa",
            SweepVariable::LibrarySize => "library_size",
            SweepVariable::Altitude => "altitude",
            SweepVariable::Density => "density",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    MonteCarlo,
    Both,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::MonteCarlo => "monte_carlo",
            Method::Both => "both",
        }
    }

    /// `Both` expanded; duplicates removed, order kept.
    pub fn expand(methods: &[Method]) -> Vec<Method> {
        let mut out = Vec::new();
        for &m in methods {
            let parts: &[Method] = match m {
                Method::Both => &[Method::Analytic, Method::MonteCarlo],
                Method::Analytic => &[Method::Analytic],
                Method::MonteCarlo => &[Method::MonteCarlo],
            };
            for &p in parts {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Method::Analytic),
            "monte_carlo" => Ok(Method::MonteCarlo),
            "both" => Ok(Method::Both),
            other => Err(Error::Config(format!(
                "method `{other}` (expected analytic, monte_carlo or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Optional second swept parameter; every curve of `values` is repeated
    /// for each of its `series_values`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SweepVariable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series_values: Vec<f64>,
    /// Empty means `scenario.environment`.
    pub environments: Vec<EnvironmentKind>,
    /// Empty means `scenario.policy`.
    pub policies: Vec<PolicyKind>,
    pub methods: Vec<Method>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            variable: SweepVariable::XCop,
            values: Vec::new(),
            series: None,
            series_values: Vec::new(),
            environments: Vec::new(),
            policies: Vec::new(),
            methods: vec![Method::Analytic],
        }
    }
}

fn config_err(key: &str, e: impl fmt::Display) -> Error {
    Error::Config(format!("{key}: {e}"))
}

fn check(cond: bool, key: &str, what: &str, value: impl fmt::Display) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(key, format!("{what}, got {value}")))
    }
}

fn check_grid(key: &str, values: &[f64]) -> Result<()> {
    check(!values.is_empty(), key, "grid must be nonempty", "[]")?;
    check(
        values.iter().all(|v| v.is_finite()),
        key,
        "grid values must be finite",
        format!("{values:?}"),
    )?;
    check(
        values.windows(2).all(|w| w[0] < w[1]),
        key,
        "grid must be strictly increasing",
        format!("{values:?}"),
    )
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// The environment named `kind` with this file's overrides applied.
    pub fn environment(&self, kind: EnvironmentKind) -> Result<Environment<f64>> {
        let overrides = self.environment.unwrap_or_default();
        let mut env = match Environment::preset(kind) {
            Some(env) => env,
            None => {
                let missing: Vec<&str> = overrides
                    .fields()
                    .iter()
                    .filter(|(_, v)| v.is_none())
                    .map(|(k, _)| *k)
                    .collect();
                if !missing.is_empty() {
                    return Err(config_err(
                        "environment",
                        format!(
                            "a custom environment needs every parameter; missing {}",
                            missing.join(", ")
                        ),
                    ));
                }
                Environment::preset(EnvironmentKind::SubUrban).expect("preset")
            }
        };
        let o = overrides;
        let slots = [
            (&mut env.phi, o.phi),
            (&mut env.psi, o.psi),
            (&mut env.mu_l, o.mu_los),
            (&mut env.mu_n, o.mu_nlos),
            (&mut env.a_l, o.a_los),
            (&mut env.a_n, o.a_nlos),
            (&mut env.c_l, o.c_los),
            (&mut env.c_n, o.c_nlos),
        ];
        for (slot, value) in slots {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if !overrides.is_empty() {
            env.kind = EnvironmentKind::Custom;
        }
        env.validate().map_err(|e| config_err("environment", e))?;
        Ok(env)
    }

    pub fn channel(&self, altitude: f64) -> ChannelConfig<f64> {
        let c = &self.channel;
        ChannelConfig {
            alpha_l: c.alpha_los,
            alpha_n: c.alpha_nlos,
            k_l: c.k_los,
            k_n: c.k_nlos,
            wbar_l: c.wbar_los,
            wbar_n: c.wbar_nlos,
            h: altitude,
            shadowing: c.shadowing_convention,
        }
    }

    pub fn power(&self) -> PowerModel<f64> {
        let p = &self.power;
        PowerModel {
            transmit: p.transmit,
            per_file: p.per_file,
            static_power: p.static_power,
            zeta: p.zeta,
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig<f64> {
        let q = &self.quadrature;
        QuadratureConfig {
            hermite_nodes: q.hermite_nodes,
            rel_tol: q.rel_tol,
            v_min: q.v_min,
            v_max: q.v_max,
            z_max: q.z_max,
            far_tail: q.far_tail,
            k_max_tail: q.k_max_tail,
        }
    }

    /// Range checks with the offending key in every message. Scenario
    /// construction (see [`super::sweep`]) re-checks each sweep point.
    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        check(
            s.lambda.is_finite() && s.lambda >= 0.0,
            "scenario.lambda",
            "must be finite and >= 0",
            s.lambda,
        )?;
        check(
            s.x_cop.is_finite() && s.x_cop >= 0.0,
            "scenario.x_cop",
            "must be finite and >= 0",
            s.x_cop,
        )?;
        check(
            s.altitude.is_finite() && s.altitude > 0.0,
            "scenario.altitude",
            "must be finite and > 0",
            s.altitude,
        )?;
        check(
            s.subchannels >= 1,
            "scenario.subchannels",
            "must be >= 1",
            s.subchannels,
        )?;
        check(
            s.library_size >= 1,
            "scenario.library_size",
            "must be >= 1",
            s.library_size,
        )?;
        check(
            s.cache_size >= 1 && s.cache_size <= s.library_size,
            "scenario.cache_size",
            "must lie in [1, library_size]",
            s.cache_size,
        )?;
        check(
            (0.0..=2.0).contains(&s.kappa),
            "scenario.kappa",
            "must lie in [0, 2]",
            s.kappa,
        )?;
        self.environment(s.environment)?;
        self.channel(s.altitude)
            .validate()
            .map_err(|e| config_err("channel", e))?;
        self.power()
            .validate()
            .map_err(|e| config_err("power", e))?;
        self.quadrature()
            .validate()
            .map_err(|e| config_err("quadrature", e))?;
        let q = &self.quadrature;
        check(
            q.placement_tol > 0.0,
            "quadrature.placement_tol",
            "must be > 0",
            q.placement_tol,
        )?;

        let m = &self.simulation;
        check(m.trials >= 1, "simulation.trials", "must be >= 1", m.trials)?;
        if let Some(r) = m.r_max {
            check(
                r.is_finite() && r > 0.0,
                "simulation.r_max",
                "must be finite and > 0",
                r,
            )?;
        }
        check(
            m.sir_cap > 0.0,
            "simulation.sir_cap",
            "must be > 0 (inf disables)",
            m.sir_cap,
        )?;
        check(
            m.far_threshold > 0.0,
            "simulation.far_threshold",
            "must be > 0",
            m.far_threshold,
        )?;
        check(
            m.lru_requests > m.lru_warmup,
            "simulation.lru_requests",
            "must exceed lru_warmup",
            m.lru_requests,
        )?;

        if let Some(sw) = &self.sweep {
            check_grid("sweep.values", &sw.values)?;
            match sw.series {
                Some(series) => {
                    check(
                        series != sw.variable,
                        "sweep.series",
                        "must differ from sweep.variable",
                        series.as_str(),
                    )?;
                    check_grid("sweep.series_values", &sw.series_values)?;
                }
                None => check(
                    sw.series_values.is_empty(),
                    "sweep.series_values",
                    "needs sweep.series",
                    format!("{:?}", sw.series_values),
                )?,
            }
            check(
                !sw.methods.is_empty(),
                "sweep.methods",
                "must be nonempty",
                "[]",
            )?;
            for &env in &sw.environments {
                self.environment(env)?;
            }
        }
        Ok(())
    }
}
