//! Run configuration, scenario presets, the simulation driver and the
//! convergence-study runner.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{is_admissible, PhysParams, Primitive};
use crate::oracles::{exact_sw_cell_averages, StateSampler};
use crate::output;
use crate::relax_riemann::RiemannOptions;
use crate::timeloop::{BoundaryKind, Grid, SimState, Solver, SolverConfig, StepDiagnostics};

/// A constant state on `(previous x_right, x_right]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub x_right: f64,
    pub state: Primitive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    /// Piecewise-constant data; the last segment extends to the right end.
    Segments { segments: Vec<Segment> },
    /// Small sinusoidal depth perturbation of a uniform equilibrium state.
    SmoothWave { amplitude: f64 },
    /// Two random admissible states separated at the domain center.
    RandomRiemann { seed: u64 },
}

impl InitialCondition {
    pub fn dam_break() -> Self {
        InitialCondition::Segments {
            segments: vec![
                Segment {
                    x_right: 0.5,
                    state: Primitive::new(1.0, 0.0, 1.0, 1.0),
                },
                Segment {
                    x_right: f64::INFINITY,
                    state: Primitive::new(0.1, 0.0, 1.0, 1.0),
                },
            ],
        }
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub params: PhysParams,
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub boundary: BoundaryKind,
    pub initial: InitialCondition,
    /// Number of evenly spaced snapshot times after `t = 0`.
    pub snapshots: usize,
    pub out_dir: Option<PathBuf>,
    pub strict_dissipation: bool,
    pub strict_subcharacteristic: bool,
    pub seed: u64,
    pub parallel: bool,
}

impl RunConfig {
    /// The dam-break experiment: `(1,0,1,1)` left of `x = 0.5`,
    /// `(0.1,0,1,1)` right of it, 256 cells on `[0, 1]`, `t_end = 0.1`.
    pub fn preset_dam_break(ell: f64) -> Result<Self> {
        let params = PhysParams::dam_break(ell).map_err(|e| Error::Config(e.to_string()))?;
        Ok(RunConfig {
            scenario: "dam-break".into(),
            params,
            x_min: 0.0,
            x_max: 1.0,
            cells: 256,
            t_end: 0.1,
            cfl: 0.5,
            boundary: BoundaryKind::Transmissive,
            initial: InitialCondition::dam_break(),
            snapshots: 10,
            out_dir: None,
            strict_dissipation: false,
            strict_subcharacteristic: false,
            seed: crate::oracles::DEFAULT_SEED,
            parallel: false,
        })
    }

    /// Smooth periodic perturbation used for convergence checks.
    pub fn preset_smooth_wave(params: PhysParams, amplitude: f64) -> Self {
        RunConfig {
            scenario: "smooth-wave".into(),
            params,
            boundary: BoundaryKind::Periodic,
            initial: InitialCondition::SmoothWave { amplitude },
            ..Self::preset_dam_break(10.0).expect("valid preset")
        }
    }

    /// Parses `key = value` lines (`#` starts a comment) on top of the
    /// dam-break preset.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut config = Self::preset_dam_break(10.0)?;
        config.apply_kv_str(text)?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_kv_str(&text)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        let mut segments = Vec::new();
        let mut named = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "segment" {
                segments.push(parse_segment(value)?);
            } else {
                named |= key == "scenario";
                self.set(key, value)
                    .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
            }
        }
        if !segments.is_empty() {
            if !named {
                self.scenario = "segments".into();
            }
            self.initial = InitialCondition::Segments { segments };
        }
        Ok(())
    }

    /// Sets one configuration key. The same names are used by the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a number")))
        };
        let flag = |v: &str| -> Result<bool> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!("`{key}`: `{v}` is not a boolean"))),
            }
        };
        let int = |v: &str| -> Result<u64> {
            let v = v.trim();
            let parsed = match v.strip_prefix("0x") {
                Some(hex) => u64::from_str_radix(hex, 16),
                None => v.parse::<u64>(),
            };
            parsed.map_err(|_| Error::Config(format!("`{key}`: `{v}` is not an integer")))
        };
        match key {
            "scenario" => self.set_scenario(value)?,
            "g" | "gravity" => self.params.gravity = num(value)?,
            "G" | "modulus" => self.params.modulus = num(value)?,
            "lambda" | "relaxation_time" => self.params.relaxation_time = num(value)?,
            "zeta" | "slip" => self.params.slip = num(value)?,
            "ell" | "extensibility" => self.params.extensibility = num(value)?,
            "x_min" => self.x_min = num(value)?,
            "x_max" => self.x_max = num(value)?,
            "cells" => self.cells = int(value)? as usize,
            "t_end" => self.t_end = num(value)?,
            "cfl" => self.cfl = num(value)?,
            "bc" | "boundary" => self.boundary = value.parse()?,
            "snapshots" => self.snapshots = int(value)? as usize,
            "out" | "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "strict_dissipation" => self.strict_dissipation = flag(value)?,
            "strict_subcharacteristic" => self.strict_subcharacteristic = flag(value)?,
            "parallel" => self.parallel = flag(value)?,
            "seed" => {
                self.seed = int(value)?;
                if let InitialCondition::RandomRiemann { seed } = &mut self.initial {
                    *seed = self.seed;
                }
            }
            "amplitude" => {
                let a = num(value)?;
                self.initial = InitialCondition::SmoothWave { amplitude: a };
                self.scenario = "smooth-wave".into();
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn set_scenario(&mut self, name: &str) -> Result<()> {
        match name {
            "dam-break" => self.initial = InitialCondition::dam_break(),
            "smooth-wave" => {
                self.initial = InitialCondition::SmoothWave { amplitude: 1e-3 };
                self.boundary = BoundaryKind::Periodic;
            }
            "random-riemann" => self.initial = InitialCondition::RandomRiemann { seed: self.seed },
            "segments" => {
                if !matches!(self.initial, InitialCondition::Segments { .. }) {
                    return Err(Error::Config(
                        "scenario `segments` needs `segment` lines".into(),
                    ));
                }
            }
            other => return Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
        self.scenario = name.to_string();
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.cells < 4 {
            return Err(Error::Config(format!(
                "need at least 4 cells, got {}",
                self.cells
            )));
        }
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::Config("x_max must exceed x_min".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1/2], got {}",
                self.cfl
            )));
        }
        match &self.initial {
            InitialCondition::Segments { segments } => {
                if segments.is_empty() {
                    return Err(Error::Config("no initial segments".into()));
                }
                for (i, s) in segments.iter().enumerate() {
                    if !is_admissible(&s.state, &self.params) {
                        return Err(Error::Config(format!(
                            "initial segment {i} is not admissible: {:?}",
                            s.state
                        )));
                    }
                }
            }
            InitialCondition::SmoothWave { amplitude } => {
                if !(amplitude.abs() < 1.0) {
                    return Err(Error::Config(
                        "smooth-wave amplitude must be below 1".into(),
                    ));
                }
            }
            InitialCondition::RandomRiemann { .. } => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::uniform(self.x_min, self.x_max, self.cells)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            cfl: self.cfl,
            boundary: self.boundary,
            strict_dissipation: self.strict_dissipation,
            riemann: RiemannOptions {
                strict_subcharacteristic: self.strict_subcharacteristic,
                ..Default::default()
            },
            parallel: self.parallel,
            ..Default::default()
        }
    }

    pub fn initial_state(&self, grid: &Grid) -> SimState {
        match &self.initial {
            InitialCondition::Segments { segments } => SimState::from_fn(grid, |x| {
                segments
                    .iter()
                    .find(|s| x < s.x_right)
                    .unwrap_or_else(|| segments.last().expect("non-empty segments"))
                    .state
            }),
            InitialCondition::SmoothWave { amplitude } => {
                let eq = crate::model::equilibrium_sigma(&self.params);
                let length = self.x_max - self.x_min;
                let x0 = self.x_min;
                let a = *amplitude;
                SimState::from_fn(grid, move |x| {
                    let phase = 2.0 * std::f64::consts::PI * (x - x0) / length;
                    Primitive::new(1.0 + a * phase.sin(), 0.0, eq, eq)
                })
            }
            InitialCondition::RandomRiemann { seed } => {
                let mut sampler = StateSampler::new(*seed);
                let left = sampler.primitive(self.params.extensibility);
                let right = sampler.primitive(self.params.extensibility);
                let mid = 0.5 * (self.x_min + self.x_max);
                SimState::from_fn(grid, move |x| if x < mid { left } else { right })
            }
        }
    }

    /// Flat `key = value` echo of the resolved configuration.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("scenario", self.scenario.clone());
        put("g", self.params.gravity.to_string());
        put("G", self.params.modulus.to_string());
        put("lambda", self.params.relaxation_time.to_string());
        put("zeta", self.params.slip.to_string());
        put("ell", self.params.extensibility.to_string());
        put("x_min", self.x_min.to_string());
        put("x_max", self.x_max.to_string());
        put("cells", self.cells.to_string());
        put("t_end", self.t_end.to_string());
        put("cfl", self.cfl.to_string());
        put("bc", self.boundary.to_string());
        put("snapshots", self.snapshots.to_string());
        put("strict_dissipation", self.strict_dissipation.to_string());
        put(
            "strict_subcharacteristic",
            self.strict_subcharacteristic.to_string(),
        );
        put("seed", self.seed.to_string());
        put("parallel", self.parallel.to_string());
        match &self.initial {
            InitialCondition::Segments { segments } => {
                for seg in segments {
                    let p = seg.state;
                    put(
                        "segment",
                        format!("{}, {}, {}, {}, {}", seg.x_right, p.h, p.u, p.sxx, p.szz),
                    );
                }
            }
            InitialCondition::SmoothWave { amplitude } => put("amplitude", amplitude.to_string()),
            InitialCondition::RandomRiemann { .. } => {}
        }
        s
    }
}

fn parse_segment(value: &str) -> Result<Segment> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(Error::Config(format!(
            "segment needs `x_right, h, u, sigma_xx, sigma_zz`, got `{value}`"
        )));
    }
    let mut v = [0.0; 5];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = match *part {
            "inf" => f64::INFINITY,
            p => p
                .parse()
                .map_err(|_| Error::Config(format!("segment value `{p}` is not a number")))?,
        };
    }
    Ok(Segment {
        x_right: v[0],
        state: Primitive::new(v[1], v[2], v[3], v[4]),
    })
}

/// Summary of a completed run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    /// Smallest stability-limited step (snapshot clipping excluded).
    pub min_dt: f64,
    pub min_dt_taken: f64,
    pub violations: usize,
    pub max_dissipation_residual: f64,
    pub max_residual_ratio: f64,
    pub worst_subcharacteristic: f64,
    pub max_source_energy_change: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub max_stretch: f64,
    pub wall_time_s: f64,
}

/// In-memory result of [`simulate`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: Grid,
    pub initial: SimState,
    pub snapshots: Vec<SimState>,
    pub final_state: SimState,
    pub diagnostics: Vec<StepDiagnostics>,
    pub summary: RunSummary,
}

/// Snapshot times `k t_end / n`, `k = 0..=n` (only `0` when `t_end = 0`).
pub fn snapshot_times(t_end: f64, n: usize) -> Vec<f64> {
    if t_end == 0.0 || n == 0 {
        return if t_end == 0.0 {
            vec![0.0]
        } else {
            vec![0.0, t_end]
        };
    }
    (0..=n)
        .map(|k| {
            if k == n {
                t_end
            } else {
                t_end * k as f64 / n as f64
            }
        })
        .collect()
}

/// Runs the configured simulation without touching the file system.
pub fn simulate(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let grid = config.grid()?;
    let initial = config.initial_state(&grid);
    let mut solver = Solver::new(
        grid.clone(),
        config.params,
        config.solver_config(),
        initial.clone(),
    )?;
    let (mass0, mom0, _) = crate::timeloop::totals(&grid, &initial.q, &config.params)?;

    let mut diagnostics = Vec::new();
    let mut snapshots = vec![initial.clone()];
    for &target in snapshot_times(config.t_end, config.snapshots)
        .iter()
        .skip(1)
    {
        solver.run_until(target, |_, d| {
            diagnostics.push(*d);
            Ok(())
        })?;
        snapshots.push(solver.state.clone());
    }
    let final_state = solver.state.clone();
    let (mass1, mom1, _) = crate::timeloop::totals(&grid, &final_state.q, &config.params)?;

    let fold = |f: fn(&StepDiagnostics) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        diagnostics.iter().map(f).fold(init, pick)
    };
    let summary = RunSummary {
        steps: diagnostics.len(),
        t_final: final_state.t,
        min_dt: fold(|d| d.dt_cfl, f64::INFINITY, f64::min),
        min_dt_taken: fold(|d| d.dt, f64::INFINITY, f64::min),
        violations: diagnostics.iter().map(|d| d.violations).sum(),
        max_dissipation_residual: fold(|d| d.max_residual, f64::NEG_INFINITY, f64::max),
        max_residual_ratio: fold(|d| d.max_residual_ratio, f64::NEG_INFINITY, f64::max),
        worst_subcharacteristic: fold(|d| d.worst_subcharacteristic, 0.0, f64::max),
        max_source_energy_change: fold(|d| d.max_source_energy_change, f64::NEG_INFINITY, f64::max),
        mass_initial: mass0,
        mass_final: mass1,
        momentum_initial: mom0,
        momentum_final: mom1,
        max_stretch: final_state
            .q
            .iter()
            .map(|q| q.to_primitive().stretch())
            .fold(0.0, f64::max),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        grid,
        initial,
        snapshots,
        final_state,
        diagnostics,
        summary,
    })
}

/// Runs the simulation and writes snapshots, diagnostics, the SVG panel and
/// `run.json` into `config.out_dir` (when set). On a solver failure an error
/// record is written to `run.json` before the error is returned.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let result = simulate(config);
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        match &result {
            Ok(out) => output::write_run_files(dir, config, out)?,
            Err(e) => output::write_error_record(dir, config, e)?,
        }
    }
    result
}

/// Errors between successive refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    /// L¹ distance of `h` between level `k` and the restriction of level `k+1`.
    pub self_errors: Vec<f64>,
    pub self_orders: Vec<f64>,
    /// L¹ distance to the exact shallow-water dam break, when applicable.
    pub exact_errors: Option<Vec<f64>>,
    pub exact_orders: Option<Vec<f64>>,
}

fn orders(errors: &[f64], ratios: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(ratios)
        .map(|(e, r)| (e[0] / e[1]).ln() / r.ln())
        .collect()
}

/// Exact reference for `G = 0` dam breaks at rest with `h_l > h_r`.
fn exact_dam_break_reference(config: &RunConfig) -> Option<(f64, f64, f64)> {
    if config.params.modulus != 0.0 {
        return None;
    }
    match &config.initial {
        InitialCondition::Segments { segments } if segments.len() == 2 => {
            let (l, r) = (segments[0].state, segments[1].state);
            (l.u == 0.0 && r.u == 0.0 && l.h > r.h).then_some((l.h, r.h, segments[0].x_right))
        }
        _ => None,
    }
}

/// Runs each refinement level (in parallel) and measures observed orders.
/// With an output directory set, level `n` writes into `<out>/cells_<n>`.
pub fn convergence_study(base: &RunConfig, levels: &[usize]) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(Error::Config(
            "a convergence study needs at least two levels".into(),
        ));
    }
    for w in levels.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::Config(format!(
                "levels must double successively, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let runs: Vec<RunOutput> = levels
        .par_iter()
        .map(|&cells| {
            let mut cfg = base.clone();
            cfg.cells = cells;
            cfg.out_dir = base
                .out_dir
                .as_ref()
                .map(|d| d.join(format!("cells_{cells}")));
            run(&cfg)
        })
        .collect::<Result<_>>()?;

    let depth = |r: &RunOutput| -> Vec<f64> { r.final_state.q.iter().map(|q| q.h).collect() };
    let mut self_errors = Vec::new();
    for pair in runs.windows(2) {
        let coarse = depth(&pair[0]);
        let fine = depth(&pair[1]);
        let grid = &pair[0].grid;
        let err: f64 = coarse
            .iter()
            .enumerate()
            .map(|(i, hc)| (hc - 0.5 * (fine[2 * i] + fine[2 * i + 1])).abs() * grid.dx(i))
            .sum();
        self_errors.push(err);
    }
    let self_orders = orders(
        &self_errors,
        &vec![2.0; self_errors.len().saturating_sub(1)],
    );

    let (exact_errors, exact_orders) = match exact_dam_break_reference(base) {
        Some((h_l, h_r, x_dam)) => {
            let errs: Vec<f64> = runs
                .iter()
                .map(|r| {
                    let exact = exact_sw_cell_averages(
                        &r.grid,
                        h_l,
                        h_r,
                        base.params.gravity,
                        x_dam,
                        r.final_state.t,
                    );
                    r.final_state
                        .q
                        .iter()
                        .zip(&exact)
                        .enumerate()
                        .map(|(i, (q, e))| (q.h - e).abs() * r.grid.dx(i))
                        .sum()
                })
                .collect();
            let ords = orders(&errs, &vec![2.0; errs.len() - 1]);
            (Some(errs), Some(ords))
        }
        None => (None, None),
    };

    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        self_errors,
        self_orders,
        exact_errors,
        exact_orders,
    })
}
