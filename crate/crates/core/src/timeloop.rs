//! Splitting-in-time finite-volume scheme.
//!
//! One step is:
//! 1. relaxed Riemann fans at every interface (ghost cells from the boundary
//!    condition),
//! 2. `dt` from the CFL condition,
//! 3. the explicit three-point update of the homogeneous system,
//! 4. the implicit relaxation source at fixed `(h, hu)`,
//! 5. the conservation and free-energy ledgers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    dissipation_rate, free_energy, is_admissible, Conserved, PhysParams, Primitive,
};
use crate::relax_riemann::{
    energy_flux, interface_fluxes_with, subcharacteristic_monitor, FluxPair, RiemannOptions,
    WaveFan,
};

/// Scalar source solve stops once `|g| <= SOURCE_TOL * (2 + λℓ/dt)`.
const SOURCE_TOL: f64 = 1e-13;
const SOURCE_MAX_ITER: usize = 100;
/// Relative slack for the discrete free-energy inequality.
pub const DISSIPATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    #[default]
    Transmissive,
    Reflective,
    Periodic,
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "transmissive" => Ok(BoundaryKind::Transmissive),
            "reflective" => Ok(BoundaryKind::Reflective),
            "periodic" => Ok(BoundaryKind::Periodic),
            other => Err(Error::Config(format!(
                "unknown boundary condition `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BoundaryKind::Transmissive => "transmissive",
            BoundaryKind::Reflective => "reflective",
            BoundaryKind::Periodic => "periodic",
        };
        f.write_str(s)
    }
}

/// One-dimensional grid given by strictly increasing cell edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    edges: Vec<f64>,
}

impl Grid {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Config("a grid needs at least one cell".into()));
        }
        if edges.iter().any(|x| !x.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "grid edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(Grid { edges })
    }

    pub fn uniform(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(x_max > x_min) {
            return Err(Error::Config(format!(
                "invalid uniform grid [{x_min}, {x_max}] with {cells} cells"
            )));
        }
        let dx = (x_max - x_min) / cells as f64;
        let edges = (0..=cells)
            .map(|i| {
                if i == cells {
                    x_max
                } else {
                    x_min + i as f64 * dx
                }
            })
            .collect();
        Grid::new(edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn dx(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    pub fn min_dx(&self) -> f64 {
        (0..self.len())
            .map(|i| self.dx(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cell averages at time `t` after `step` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub q: Vec<Conserved>,
    pub step: usize,
}

impl SimState {
    /// Samples `init` at the cell centers.
    pub fn from_fn(grid: &Grid, init: impl Fn(f64) -> Primitive) -> Self {
        SimState {
            t: 0.0,
            q: grid
                .centers()
                .into_iter()
                .map(|x| init(x).to_conserved())
                .collect(),
            step: 0,
        }
    }

    /// Reflected state: cells reversed and velocities negated.
    pub fn mirrored(&self) -> Self {
        SimState {
            t: self.t,
            q: self.q.iter().rev().map(Conserved::mirrored).collect(),
            step: self.step,
        }
    }

    pub fn check_admissible(&self, params: &PhysParams, stage: &'static str) -> Result<()> {
        for (i, q) in self.q.iter().enumerate() {
            if !is_admissible(&q.to_primitive(), params) {
                return Err(Error::AdmissibilityLoss {
                    cell: i,
                    stage,
                    detail: format!("{:?}", q.to_primitive()),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Waves may cross at most this fraction of a cell per step.
    pub cfl: f64,
    pub boundary: BoundaryKind,
    /// `dt` below `dt_min_factor * min Δx` is a time-step collapse.
    pub dt_min_factor: f64,
    /// Abort on the first dissipation violation.
    pub strict_dissipation: bool,
    pub riemann: RiemannOptions,
    /// Compute interfaces and source solves on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.5,
            boundary: BoundaryKind::Transmissive,
            dt_min_factor: 1e-12,
            strict_dissipation: false,
            riemann: RiemannOptions::default(),
            parallel: false,
        }
    }
}

/// Fluxes, fan and free-energy flux of one interface.
#[derive(Debug, Clone, Copy)]
pub struct Interface {
    pub fluxes: FluxPair,
    pub fan: WaveFan,
    pub energy_flux: f64,
}

/// Per-step ledger.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    /// Stable step before clipping to `max_dt`.
    pub dt_cfl: f64,
    pub mass: f64,
    pub momentum: f64,
    pub free_energy: f64,
    /// Largest value of `LHS - RHS` of the discrete dissipation inequality.
    pub max_residual: f64,
    /// Largest `residual / tolerance`; above one is a violation.
    pub max_residual_ratio: f64,
    pub violations: usize,
    pub worst_subcharacteristic: f64,
    /// Mass entering through the left boundary and leaving through the right one.
    pub boundary_mass: [f64; 2],
    pub boundary_momentum: [f64; 2],
    /// Largest increase `F(q^{n+1}) - F(q^{n+1/2})` over cells (should be <= 0).
    pub max_source_energy_change: f64,
}

/// Pads `q` with one ghost cell on each side.
pub fn apply_boundary(q: &[Conserved], bc: BoundaryKind) -> Vec<Conserved> {
    let n = q.len();
    let (left, right) = match bc {
        BoundaryKind::Transmissive => (q[0], q[n - 1]),
        BoundaryKind::Reflective => (q[0].mirrored(), q[n - 1].mirrored()),
        BoundaryKind::Periodic => (q[n - 1], q[0]),
    };
    let mut padded = Vec::with_capacity(n + 2);
    padded.push(left);
    padded.extend_from_slice(q);
    padded.push(right);
    padded
}

fn solve_interface(
    l: &Conserved,
    r: &Conserved,
    params: &PhysParams,
    opts: &RiemannOptions,
    index: usize,
) -> Result<Interface> {
    let (fluxes, fan) = interface_fluxes_with(l, r, params, opts).map_err(|e| match e {
        Error::StarState(msg) => Error::StarState(format!(
            "interface {index}: {msg}; q_l = {:?}, q_r = {:?}",
            l.to_primitive(),
            r.to_primitive()
        )),
        other => other,
    })?;
    Ok(Interface {
        fluxes,
        energy_flux: energy_flux(&fan),
        fan,
    })
}

/// Riemann problems at the `n + 1` interfaces of a padded state.
pub fn compute_interfaces(
    padded: &[Conserved],
    params: &PhysParams,
    opts: &RiemannOptions,
    parallel: bool,
) -> Result<Vec<Interface>> {
    let solve = |j: usize| solve_interface(&padded[j], &padded[j + 1], params, opts, j);
    let count = padded.len() - 1;
    if parallel {
        (0..count).into_par_iter().map(solve).collect()
    } else {
        (0..count).map(solve).collect()
    }
}

/// `dt = cfl * min Δx / max |outer wave speed|`.
pub fn cfl_dt(grid: &Grid, interfaces: &[Interface], cfl: f64, dt_min: f64, t: f64) -> Result<f64> {
    let s_max = interfaces
        .iter()
        .map(|it| it.fan.max_abs_speed())
        .fold(0.0_f64, f64::max);
    let dt = cfl * grid.min_dx() / s_max;
    if !(dt >= dt_min) {
        return Err(Error::TimeStepCollapse { dt, dt_min, t });
    }
    Ok(dt)
}

/// Explicit three-point update of the homogeneous system.
pub fn homogeneous_step(
    grid: &Grid,
    q: &[Conserved],
    interfaces: &[Interface],
    dt: f64,
    params: &PhysParams,
) -> Result<Vec<Conserved>> {
    let mut out = Vec::with_capacity(q.len());
    for (i, qi) in q.iter().enumerate() {
        let right = interfaces[i + 1].fluxes.f_left;
        let left = interfaces[i].fluxes.f_right;
        let next = *qi - (dt / grid.dx(i)) * (right - left);
        if !is_admissible(&next.to_primitive(), params) {
            return Err(Error::AdmissibilityLoss {
                cell: i,
                stage: "homogeneous",
                detail: format!(
                    "q^n = {:?}, q^(n+1/2) = {:?}, left fan speeds {:?}, right fan speeds {:?}, dt = {dt}",
                    qi.to_primitive(),
                    next.to_primitive(),
                    interfaces[i].fan.speeds,
                    interfaces[i + 1].fan.speeds
                ),
            });
        }
        out.push(next);
    }
    Ok(out)
}

/// Solves the implicit relaxation of the conformation pair over one step,
/// `λ(σ - σ⁰)/dt = 1 - σ/(1 - (σxx+σzz)/ℓ)` for both components.
///
/// The sum `s = σxx + σzz` solves the scalar equation
/// `λ(s - s⁰)/dt - 2 + s/(1 - s/ℓ) = 0`, strictly increasing on `(0, ℓ)`
/// with a sign change, so a safeguarded Newton iteration finds the unique
/// root; the components then follow linearly.
pub fn relax_conformation(
    sxx0: f64,
    szz0: f64,
    dt: f64,
    params: &PhysParams,
) -> std::result::Result<(f64, f64), String> {
    let ell = params.extensibility;
    let lam = params.relaxation_time;
    let s0 = sxx0 + szz0;
    if !(sxx0 > 0.0 && szz0 > 0.0 && s0 < ell) {
        return Err(format!("inadmissible input ({sxx0}, {szz0})"));
    }
    if dt == 0.0 {
        return Ok((sxx0, szz0));
    }
    let rate = lam / dt;
    let residual = |s: f64| rate * (s - s0) - 2.0 + s / (1.0 - s / ell);
    let tol = SOURCE_TOL * (2.0 + rate * ell);

    let (mut lo, mut hi) = (0.0_f64, ell);
    let mut s = s0;
    let mut converged = false;
    for _ in 0..SOURCE_MAX_ITER {
        let g = residual(s);
        if g.abs() <= tol {
            converged = true;
            break;
        }
        if g < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let d = 1.0 - s / ell;
        let slope = rate + 1.0 / (d * d);
        let newton = s - g / slope;
        s = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * ell {
            converged = residual(s).abs() <= tol;
            break;
        }
    }
    if !converged {
        return Err(format!(
            "scalar relaxation equation did not converge from ({sxx0}, {szz0}), dt = {dt}"
        ));
    }

    let d = 1.0 - s / ell;
    let sxx = (rate * sxx0 + 1.0) / (rate + 1.0 / d);
    let szz = (rate * szz0 + 1.0) / (rate + 1.0 / d);
    if (sxx + szz - s).abs() > 1e-10 * ell {
        return Err(format!("component sum {} differs from root {s}", sxx + szz));
    }
    Ok((sxx, szz))
}

fn source_cell(i: usize, q: &Conserved, dt: f64, params: &PhysParams) -> Result<(Conserved, f64)> {
    let p = q.to_primitive();
    let (sxx, szz) = relax_conformation(p.sxx, p.szz, dt, params)
        .map_err(|detail| Error::SourceSolveFailure { cell: i, detail })?;
    let relaxed = Primitive { sxx, szz, ..p };
    if !is_admissible(&relaxed, params) {
        return Err(Error::SourceSolveFailure {
            cell: i,
            detail: format!("relaxed state {relaxed:?} is not admissible"),
        });
    }
    let before = free_energy(&p, params)?;
    let after = free_energy(&relaxed, params)?;
    let change = after - before;
    let slack = 8.0 * f64::EPSILON * (before.abs() + after.abs());
    if change > slack {
        return Err(Error::SourceSolveFailure {
            cell: i,
            detail: format!("free energy increased by {change:e} during the source step"),
        });
    }
    Ok((Conserved::new(q.h, q.hu, q.h * sxx, q.h * szz), change))
}

/// Implicit source step at fixed `(h, hu)`. Returns the new state and the
/// largest cell-wise free-energy change (never positive beyond roundoff).
pub fn source_step(
    q_half: &[Conserved],
    dt: f64,
    params: &PhysParams,
    parallel: bool,
) -> Result<(Vec<Conserved>, f64)> {
    let solve = |(i, q): (usize, &Conserved)| source_cell(i, q, dt, params);
    let cells: Vec<(Conserved, f64)> = if parallel {
        q_half
            .par_iter()
            .enumerate()
            .map(solve)
            .collect::<Result<_>>()?
    } else {
        q_half
            .iter()
            .enumerate()
            .map(solve)
            .collect::<Result<_>>()?
    };
    let max_change = cells.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    Ok((cells.into_iter().map(|c| c.0).collect(), max_change))
}

/// `LHS - RHS` of the discrete free-energy inequality for one cell, and the
/// tolerance above which it counts as a violation.
pub fn dissipation_residual(
    f_new: f64,
    f_old: f64,
    g_left: f64,
    g_right: f64,
    d_new: f64,
    dt: f64,
    dx: f64,
) -> (f64, f64) {
    let residual = f_new - f_old + dt / dx * (g_right - g_left) - dt * d_new;
    let tol = DISSIPATION_TOL * (f_new.abs() + dt * d_new.abs() + 1.0);
    (residual, tol)
}

fn free_energies(q: &[Conserved], params: &PhysParams) -> Result<Vec<f64>> {
    q.iter()
        .map(|q| free_energy(&q.to_primitive(), params))
        .collect()
}

/// Totals `(Σ h Δx, Σ hu Δx, Σ F Δx)`.
pub fn totals(grid: &Grid, q: &[Conserved], params: &PhysParams) -> Result<(f64, f64, f64)> {
    let mut mass = 0.0;
    let mut momentum = 0.0;
    let mut energy = 0.0;
    for (i, qi) in q.iter().enumerate() {
        let dx = grid.dx(i);
        mass += qi.h * dx;
        momentum += qi.hu * dx;
        energy += free_energy(&qi.to_primitive(), params)? * dx;
    }
    Ok((mass, momentum, energy))
}

/// One full step, at most `max_dt` long.
pub fn full_step(
    grid: &Grid,
    state: &SimState,
    params: &PhysParams,
    config: &SolverConfig,
    max_dt: f64,
) -> Result<(SimState, StepDiagnostics)> {
    let padded = apply_boundary(&state.q, config.boundary);
    let interfaces = compute_interfaces(&padded, params, &config.riemann, config.parallel)?;
    let dt_min = config.dt_min_factor * grid.min_dx();
    let dt_cfl = cfl_dt(grid, &interfaces, config.cfl, dt_min, state.t)?;
    let dt = dt_cfl.min(max_dt);

    let half = homogeneous_step(grid, &state.q, &interfaces, dt, params)?;
    let (next, max_source_change) = source_step(&half, dt, params, config.parallel)?;

    let f_old = free_energies(&state.q, params)?;
    let f_new = free_energies(&next, params)?;
    let mut max_residual = f64::NEG_INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 0..next.len() {
        let d_new = dissipation_rate(&next[i].to_primitive(), params)?;
        let (res, tol) = dissipation_residual(
            f_new[i],
            f_old[i],
            interfaces[i].energy_flux,
            interfaces[i + 1].energy_flux,
            d_new,
            dt,
            grid.dx(i),
        );
        max_residual = max_residual.max(res);
        max_ratio = max_ratio.max(res / tol);
        if res > tol {
            violations += 1;
            if config.strict_dissipation {
                return Err(Error::DissipationViolation {
                    cell: i,
                    step: state.step + 1,
                    residual: res,
                    tolerance: tol,
                });
            }
        }
    }

    let worst_sub = interfaces
        .iter()
        .map(|it| subcharacteristic_monitor(&it.fan, params).worst_ratio)
        .fold(0.0_f64, f64::max);
    let (mass, momentum, energy) = totals(grid, &next, params)?;
    let first = &interfaces[0].fluxes.f_right;
    let last = &interfaces[interfaces.len() - 1].fluxes.f_left;

    let new_state = SimState {
        t: state.t + dt,
        q: next,
        step: state.step + 1,
    };
    let diag = StepDiagnostics {
        step: new_state.step,
        t: new_state.t,
        dt,
        dt_cfl,
        mass,
        momentum,
        free_energy: energy,
        max_residual,
        max_residual_ratio: max_ratio,
        violations,
        worst_subcharacteristic: worst_sub,
        boundary_mass: [dt * first.h, dt * last.h],
        boundary_momentum: [dt * first.hu, dt * last.hu],
        max_source_energy_change: max_source_change,
    };
    Ok((new_state, diag))
}

/// Owns a grid, parameters and the current state.
#[derive(Debug, Clone)]
pub struct Solver {
    pub grid: Grid,
    pub params: PhysParams,
    pub config: SolverConfig,
    pub state: SimState,
}

impl Solver {
    pub fn new(
        grid: Grid,
        params: PhysParams,
        config: SolverConfig,
        state: SimState,
    ) -> Result<Self> {
        params.validate()?;
        if state.q.len() != grid.len() {
            return Err(Error::Config(format!(
                "state has {} cells, grid has {}",
                state.q.len(),
                grid.len()
            )));
        }
        if !(config.cfl > 0.0 && config.cfl <= 0.5) {
            return Err(Error::Config(format!(
                "cfl number must lie in (0, 1/2], got {}",
                config.cfl
            )));
        }
        state.check_admissible(&params, "initial")?;
        Ok(Solver {
            grid,
            params,
            config,
            state,
        })
    }

    pub fn step(&mut self, max_dt: f64) -> Result<StepDiagnostics> {
        let (next, diag) = full_step(&self.grid, &self.state, &self.params, &self.config, max_dt)?;
        self.state = next;
        Ok(diag)
    }

    /// Advances to `t_end`, calling `observe` after every step.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut observe: impl FnMut(&SimState, &StepDiagnostics) -> Result<()>,
    ) -> Result<()> {
        while self.state.t < t_end {
            let remaining = t_end - self.state.t;
            let diag = self.step(remaining)?;
            if t_end - self.state.t <= 1e-14 * t_end.abs() {
                self.state.t = t_end;
            }
            observe(&self.state, &diag)?;
        }
        Ok(())
    }

    pub fn run_steps(
        &mut self,
        steps: usize,
        mut observe: impl FnMut(&SimState, &StepDiagnostics) -> Result<()>,
    ) -> Result<()> {
        for _ in 0..steps {
            let diag = self.step(f64::INFINITY)?;
            observe(&self.state, &diag)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::equilibrium_sigma;

    fn dam_params() -> PhysParams {
        PhysParams::dam_break(10.0).unwrap()
    }

    #[test]
    fn grid_basics() {
        let g = Grid::uniform(0.0, 1.0, 256).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.dx(3), 1.0 / 256.0);
        assert_eq!(g.edges()[128], 0.5);
        assert!(Grid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Grid::uniform(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn boundary_padding() {
        let q = vec![
            Conserved::new(1.0, 0.5, 1.0, 1.0),
            Conserved::new(2.0, -0.5, 2.0, 2.0),
        ];
        let t = apply_boundary(&q, BoundaryKind::Transmissive);
        assert_eq!((t[0], t[3]), (q[0], q[1]));
        let r = apply_boundary(&q, BoundaryKind::Reflective);
        assert_eq!(r[0].hu, -0.5);
        assert_eq!(r[3].hu, 0.5);
        let p = apply_boundary(&q, BoundaryKind::Periodic);
        assert_eq!((p[0], p[3]), (q[1], q[0]));
        let uniform = vec![q[0]; 5];
        assert!(apply_boundary(&uniform, BoundaryKind::Transmissive)
            .iter()
            .all(|c| *c == q[0]));
    }

    #[test]
    fn lake_at_rest_dt() {
        let params = PhysParams::new(9.81, 0.0, 0.1, 0.0, 10.0).unwrap();
        let eq = equilibrium_sigma(&params);
        let grid = Grid::uniform(0.0, 1.0, 50).unwrap();
        let state = SimState::from_fn(&grid, |_| Primitive::new(2.0, 0.0, eq, eq));
        let padded = apply_boundary(&state.q, BoundaryKind::Transmissive);
        let its = compute_interfaces(&padded, &params, &RiemannOptions::default(), false).unwrap();
        let dt = cfl_dt(&grid, &its, 0.5, 1e-14, 0.0).unwrap();
        let expected = 0.5 * 0.02 / (9.81_f64 * 2.0).sqrt();
        assert!((dt - expected).abs() < 1e-14 * expected);
        assert!(matches!(
            cfl_dt(&grid, &its, 0.5, 1.0, 0.0),
            Err(Error::TimeStepCollapse { .. })
        ));
    }

    #[test]
    fn uniform_equilibrium_is_stationary() {
        let params = dam_params();
        let eq = equilibrium_sigma(&params);
        let grid = Grid::uniform(0.0, 1.0, 16).unwrap();
        let state = SimState::from_fn(&grid, |_| Primitive::new(0.7, 0.0, eq, eq));
        let (next, diag) =
            full_step(&grid, &state, &params, &SolverConfig::default(), 1.0).unwrap();
        for (a, b) in next.q.iter().zip(&state.q) {
            assert!((*a - *b).max_abs() <= 1e-12 * b.max_abs());
        }
        assert_eq!(diag.violations, 0);
        assert!(diag.max_residual.abs() < 1e-12);
    }

    #[test]
    fn source_step_limits() {
        let params = PhysParams::new(10.0, 0.1, 0.1, 0.0, 10.0).unwrap();
        assert_eq!(
            relax_conformation(1.5, 0.5, 0.0, &params).unwrap(),
            (1.5, 0.5)
        );
        let (a, b) = relax_conformation(1.5, 0.5, 1e-14, &params).unwrap();
        assert!((a - 1.5).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
        let eq = equilibrium_sigma(&params);
        let (a, b) = relax_conformation(1.5, 0.5, 1e12, &params).unwrap();
        assert!((a - eq).abs() < 1e-10 && (b - eq).abs() < 1e-10);
        assert!(relax_conformation(6.0, 4.0, 0.1, &params).is_err());
    }

    #[test]
    fn source_step_reference() {
        // Arbitrary-precision solution of the raw 2x2 implicit system.
        let params = PhysParams::new(10.0, 0.1, 0.1, 0.0, 10.0).unwrap();
        let (a, b) = relax_conformation(1.5, 0.5, 0.01, &params).unwrap();
        assert!((a - 1.423_072_940_729_047_4).abs() < 1e-12);
        assert!((b - 0.533_652_352_773_392_7).abs() < 1e-12);
    }

    #[test]
    fn source_step_keeps_h_hu_and_dissipates() {
        let params = dam_params();
        let q = vec![
            Primitive::new(1.0, 0.3, 1.0, 1.0).to_conserved(),
            Primitive::new(0.2, -2.0, 7.0, 2.5).to_conserved(),
        ];
        let (out, change) = source_step(&q, 0.05, &params, false).unwrap();
        for (a, b) in out.iter().zip(&q) {
            assert_eq!(a.h, b.h);
            assert_eq!(a.hu, b.hu);
        }
        assert!(change < 0.0);
    }

    #[test]
    fn dissipation_residual_sign() {
        let (res, tol) = dissipation_residual(1.0, 1.0, 0.5, 0.5, 0.0, 0.1, 0.01);
        assert_eq!(res, 0.0);
        assert!(tol > 0.0);
        let (res, _) = dissipation_residual(0.9, 1.0, 0.0, 0.0, -0.1, 0.1, 0.01);
        assert!((res - (-0.09)).abs() < 1e-15);
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let params = dam_params();
        let grid = Grid::uniform(0.0, 1.0, 64).unwrap();
        let init = SimState::from_fn(&grid, |x| {
            if x < 0.5 {
                Primitive::new(1.0, 0.0, 1.0, 1.0)
            } else {
                Primitive::new(0.1, 0.0, 1.0, 1.0)
            }
        });
        let mut serial =
            Solver::new(grid.clone(), params, SolverConfig::default(), init.clone()).unwrap();
        let cfg = SolverConfig {
            parallel: true,
            ..Default::default()
        };
        let mut par = Solver::new(grid, params, cfg, init).unwrap();
        serial.run_steps(20, |_, _| Ok(())).unwrap();
        par.run_steps(20, |_, _| Ok(())).unwrap();
        assert_eq!(serial.state, par.state);
    }

    #[test]
    fn run_until_stops_exactly() {
        let params = dam_params();
        let grid = Grid::uniform(0.0, 1.0, 32).unwrap();
        let init = SimState::from_fn(&grid, |_| Primitive::new(1.0, 0.2, 1.0, 1.0));
        let mut s = Solver::new(grid, params, SolverConfig::default(), init).unwrap();
        s.run_until(0.013, |_, _| Ok(())).unwrap();
        assert_eq!(s.state.t, 0.013);
    }

    #[test]
    fn rejects_bad_setup() {
        let params = dam_params();
        let grid = Grid::uniform(0.0, 1.0, 8).unwrap();
        let bad = SimState::from_fn(&grid, |_| Primitive::new(1.0, 0.0, 6.0, 6.0));
        assert!(matches!(
            Solver::new(grid.clone(), params, SolverConfig::default(), bad),
            Err(Error::AdmissibilityLoss { .. })
        ));
        let ok = SimState::from_fn(&grid, |_| Primitive::new(1.0, 0.0, 1.0, 1.0));
        let cfg = SolverConfig {
            cfl: 0.9,
            ..Default::default()
        };
        assert!(Solver::new(grid, params, cfg, ok).is_err());
    }
}
