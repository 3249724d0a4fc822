use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{self, CapacityReport, ScenarioConfig};
use crate::caching::{self, ContentLibrary, PlacementPolicy, PolicyKind};
use crate::channel::EnvironmentKind;
use crate::error::{Error, Result};
use crate::simulator::{substream, Simulator};

use super::config::{ConfigFile, Method, SweepVariable};

const LRU_STREAM: u64 = 3;

/// Parameters of one sweep point, exactly as echoed in the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub env: EnvironmentKind,
    pub policy: PolicyKind,
    pub lambda: f64,
    pub altitude: f64,
    pub x_cop: f64,
    pub subchannels: usize,
    pub library_size: usize,
    pub cache_size: usize,
    pub kappa: f64,
}

impl Point {
    fn set(&mut self, var: SweepVariable, value: f64) -> Result<()> {
        match var {
            SweepVariable::XCop => self.x_cop = value,
            SweepVariable::Kappa => self.kappa = value,
            SweepVariable::Altitude => self.altitude = value,
            SweepVariable::Density => self.lambda = value,
            SweepVariable::LibrarySize => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(Error::Config(format!(
                        "library_size: sweep value must be a positive integer, got {value}"
                    )));
                }
                self.library_size = value as usize;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// System capacity in the configured units.
    pub capacity: f64,
    pub ee: f64,
    /// Standard error of the Monte Carlo capacity.
    pub std_err: Option<f64>,
    pub n_trials: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub scenario_id: usize,
    pub point: Point,
    pub method: Method,
    pub seed: u64,
    /// `Err` carries the failure message; the CSV marks such rows `failed`.
    pub outcome: std::result::Result<Metrics, String>,
}

impl Row {
    pub fn failed(&self) -> bool {
        self.outcome.is_err()
    }
}

/// Options that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub method: Option<Method>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ConfigFile) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.simulation.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.simulation.trials = trials;
        }
        if let (Some(method), Some(sweep)) = (self.method, cfg.sweep.as_mut()) {
            sweep.methods = vec![method];
        }
        cfg.validate()
    }
}

/// Sweep points in output order: environment, series value, policy, grid value.
pub fn sweep_points(cfg: &ConfigFile) -> Result<Vec<Point>> {
    let s = &cfg.scenario;
    let base = Point {
        env: s.environment,
        policy: s.policy,
        lambda: s.lambda,
        altitude: s.altitude,
        x_cop: s.x_cop,
        subchannels: s.subchannels,
        library_size: s.library_size,
        cache_size: s.cache_size,
        kappa: s.kappa,
    };
    let Some(sw) = &cfg.sweep else {
        return Ok(vec![base]);
    };
    let envs = if sw.environments.is_empty() {
        vec![s.environment]
    } else {
        sw.environments.clone()
    };
    let policies = if sw.policies.is_empty() {
        vec![s.policy]
    } else {
        sw.policies.clone()
    };
    let series: Vec<Option<f64>> = match sw.series {
        Some(_) => sw.series_values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &env in &envs {
        for &sv in &series {
            for &policy in &policies {
                for &v in &sw.values {
                    let mut p = Point {
                        env,
                        policy,
                        ..base
                    };
                    if let (Some(var), Some(sv)) = (sw.series, sv) {
                        p.set(var, sv)?;
                    }
                    p.set(sw.variable, v)?;
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Placement for `point`. RCP with an empty cooperation zone (`β = 0`) has
/// no maximizer beyond ties and falls back to MPC.
pub fn placement(
    cfg: &ConfigFile,
    point: &Point,
    library: &ContentLibrary<f64>,
) -> Result<PlacementPolicy<f64>> {
    let a = &library.popularity;
    let s = point.cache_size;
    let tol = cfg.quadrature.placement_tol;
    match point.policy {
        PolicyKind::Rcp => {
            let beta = std::f64::consts::PI * point.lambda * point.x_cop * point.x_cop;
            if beta > 0.0 {
                caching::solve_rcp(a, s, beta, tol)
            } else {
                let mut p = caching::mpc_policy(a, s)?;
                p.kind = PolicyKind::Rcp;
                Ok(p)
            }
        }
        PolicyKind::Mpc => caching::mpc_policy(a, s),
        PolicyKind::LruChe => caching::lru_che(a, s, tol),
        PolicyKind::LruEmpirical => {
            let mut rng = substream(cfg.simulation.seed, LRU_STREAM, 0, 0);
            let sim = &cfg.simulation;
            caching::lru_empirical_policy(a, s, sim.lru_requests, sim.lru_warmup, &mut rng)
        }
    }
}

fn file_at(cfg: &ConfigFile, point: &Point) -> Result<ConfigFile> {
    let mut file = cfg.clone();
    file.sweep = None;
    let s = &mut file.scenario;
    s.environment = point.env;
    s.policy = point.policy;
    s.lambda = point.lambda;
    s.altitude = point.altitude;
    s.x_cop = point.x_cop;
    s.subchannels = point.subchannels;
    s.library_size = point.library_size;
    s.cache_size = point.cache_size;
    s.kappa = point.kappa;
    file.validate()?;
    Ok(file)
}

/// Range checks of one sweep point, without solving the placement.
pub fn check_point(cfg: &ConfigFile, point: &Point) -> Result<()> {
    file_at(cfg, point).map(|_| ())
}

/// Fully validated analytic scenario of one sweep point.
pub fn scenario_at(cfg: &ConfigFile, point: &Point) -> Result<ScenarioConfig<f64>> {
    let file = file_at(cfg, point)?;
    let library = ContentLibrary::zipf(point.library_size, point.kappa)?;
    let policy = placement(&file, point, &library)?;
    let scenario = ScenarioConfig {
        lambda: point.lambda,
        x_cop: point.x_cop,
        subchannels: point.subchannels,
        library,
        policy,
        env: file.environment(point.env)?,
        channel: file.channel(point.altitude),
        power: file.power(),
        quadrature: file.quadrature(),
        coop_term: file.quadrature.coop_term,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn scaled_report(report: &CapacityReport<f64>, k: f64) -> CapacityReport<f64> {
    CapacityReport {
        per_content: report.per_content.iter().map(|r| r * k).collect(),
        system: report.system * k,
        coop_means: report.coop_means.clone(),
    }
}

fn analytic(cfg: &ConfigFile, scenario: &ScenarioConfig<f64>) -> Result<Metrics> {
    let report = analytics::system_capacity(scenario)?;
    let report = scaled_report(&report, cfg.output.units.per_nat());
    Ok(Metrics {
        capacity: report.system,
        ee: analytics::energy_efficiency_truncated(
            scenario,
            &report,
            cfg.output.ee_form.energy_form(),
            None,
        )?,
        std_err: None,
        n_trials: None,
    })
}

fn monte_carlo(cfg: &ConfigFile, scenario: &ScenarioConfig<f64>) -> Result<Metrics> {
    let sim = &cfg.simulation;
    let k = cfg.output.units.per_nat();
    let simulator = Simulator::new(scenario.clone(), sim.sim_config())?;
    let est = simulator.estimate_system_capacity(sim.trials, sim.seed)?;
    let rates: Vec<f64> = est.per_content.iter().map(|e| e.mean * k).collect();
    let ee = simulator.estimate_ee(&rates, sim.trials, sim.seed)?;
    Ok(Metrics {
        capacity: est.system.mean * k,
        ee: ee.mean,
        std_err: Some(est.system.std_err * k),
        n_trials: Some(sim.trials),
    })
}

fn methods(cfg: &ConfigFile) -> Vec<Method> {
    match &cfg.sweep {
        Some(sw) => Method::expand(&sw.methods),
        None => vec![Method::Analytic],
    }
}

fn evaluate(cfg: &ConfigFile, id: usize, point: Point, methods: &[Method]) -> Vec<Row> {
    let scenario = scenario_at(cfg, &point);
    methods
        .iter()
        .map(|&method| {
            let outcome = scenario.as_ref().map_err(|e| e.to_string()).and_then(|s| {
                match method {
                    Method::MonteCarlo => monte_carlo(cfg, s),
                    _ => analytic(cfg, s),
                }
                .map_err(|e| e.to_string())
            });
            Row {
                scenario_id: id,
                point,
                method,
                seed: cfg.simulation.seed,
                outcome,
            }
        })
        .collect()
}

/// Evaluates every point with the given methods. Points run concurrently;
/// rows come back in sweep order.
pub fn run_points(cfg: &ConfigFile, points: &[Point], methods: &[Method]) -> Vec<Row> {
    let methods = Method::expand(methods);
    let rows: Vec<Vec<Row>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| evaluate(cfg, i + 1, p, &methods))
        .collect();
    rows.into_iter().flatten().collect()
}

/// Every `(environment, series, policy, grid value, method)` row of the sweep
/// (a single point when the file has no `[sweep]` section).
pub fn run_sweep(cfg: &ConfigFile) -> Result<Vec<Row>> {
    let points = sweep_points(cfg)?;
    Ok(run_points(cfg, &points, &methods(cfg)))
}
