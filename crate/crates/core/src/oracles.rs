//! Independent verification oracles.
//!
//! Each oracle recomputes the quantity it checks through a different route
//! (finite differences, a raw Newton solve, Rankine-Hugoniot algebra, a
//! classical exact solution) and shares no helper with the code under test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{dissipation_rate, dp_dh_frozen, free_energy, Conserved, PhysParams, Primitive};
use crate::relax_riemann::{interface_fluxes, RelaxedState, WaveFan};
use crate::timeloop::{relax_conformation, BoundaryKind, Grid, SimState, Solver, SolverConfig};

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Outcome of one oracle run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(name: &str, samples: usize, max_error: f64, tolerance: f64) -> Self {
        OracleReport {
            name: name.to_string(),
            samples,
            max_error,
            tolerance,
            passed: max_error.is_finite() && max_error <= tolerance,
        }
    }
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<24} samples={:<7} max_error={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.max_error,
            self.tolerance
        )
    }
}

/// Seeded generator of admissible states and parameter sets.
///
/// Depths are log-uniform on `[1e-2, 1e2]`, velocities uniform on
/// `[-10, 10]`, and conformations `σxx = r s`, `σzz = (1-r) s` with
/// `s ∈ [0.01ℓ, 0.95ℓ]`, `r ∈ [0.05, 0.95]`.
pub struct StateSampler {
    rng: ChaCha8Rng,
}

impl StateSampler {
    pub const EXTENSIBILITIES: [f64; 4] = [3.0, 10.0, 100.0, 1e4];

    pub fn new(seed: u64) -> Self {
        StateSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn primitive(&mut self, ell: f64) -> Primitive {
        let h = 10f64.powf(self.uniform(-2.0, 2.0));
        let u = self.uniform(-10.0, 10.0);
        let s = self.uniform(0.01 * ell, 0.95 * ell);
        let r = self.uniform(0.05, 0.95);
        Primitive::new(h, u, r * s, (1.0 - r) * s)
    }

    /// Parameters with `g = 10`, `λ = 0.1` and random `G`, `ζ`, `ℓ`.
    pub fn params(&mut self) -> PhysParams {
        let ell = Self::EXTENSIBILITIES[self.index(4)];
        let modulus = [0.1, 1.0][self.index(2)];
        let slip = [0.0, 0.25, 0.5][self.index(3)];
        PhysParams::new(10.0, modulus, 0.1, slip, ell).expect("valid sampled parameters")
    }
}

fn pressure_along_path(h: f64, w1: f64, w2: f64, params: &PhysParams) -> Result<f64> {
    let k = 2.0 * (1.0 - params.slip);
    let sxx = w1 / h.powf(k);
    let szz = w2 * h.powf(k);
    let room = 1.0 - (sxx + szz) / params.extensibility;
    if !(h > 0.0 && sxx > 0.0 && szz > 0.0 && room > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference stencil left the admissibility domain at h = {h}"
        )));
    }
    Ok(params.gravity * h * h / 2.0 + h * params.modulus * (szz - sxx) / room)
}

/// Central finite difference of `P` along the frozen-invariant path, with
/// one level of Richardson extrapolation.
pub fn fd_dp_dh(p: &Primitive, params: &PhysParams, step_fraction: f64) -> Result<f64> {
    let k = 2.0 * (1.0 - params.slip);
    let w1 = p.sxx * p.h.powf(k);
    let w2 = p.szz / p.h.powf(k);
    let central = |delta: f64| -> Result<f64> {
        let plus = pressure_along_path(p.h + delta, w1, w2, params)?;
        let minus = pressure_along_path(p.h - delta, w1, w2, params)?;
        Ok((plus - minus) / (2.0 * delta))
    };
    let delta = step_fraction * p.h;
    let coarse = central(delta)?;
    let fine = central(0.5 * delta)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Damped Newton on the raw implicit 2x2 source system, with backtracking to
/// stay inside the admissibility domain.
pub fn newton_source_2x2(
    sxx0: f64,
    szz0: f64,
    dt: f64,
    params: &PhysParams,
) -> std::result::Result<(f64, f64), String> {
    let lam = params.relaxation_time;
    let ell = params.extensibility;
    let residual = |x: f64, y: f64| {
        let d = 1.0 - (x + y) / ell;
        (
            lam * (x - sxx0) / dt - 1.0 + x / d,
            lam * (y - szz0) / dt - 1.0 + y / d,
        )
    };
    let inside = |x: f64, y: f64| x > 0.0 && y > 0.0 && x + y < ell;
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let scale = 1.0 + lam * ell / dt;

    let (mut x, mut y) = (sxx0, szz0);
    for _ in 0..200 {
        let r = residual(x, y);
        if norm(r) <= 1e-13 * scale {
            return Ok((x, y));
        }
        let d = 1.0 - (x + y) / ell;
        let diag = lam / dt;
        // d/dx (x/d) = 1/d + x/(ℓ d²)
        let j11 = diag + 1.0 / d + x / (ell * d * d);
        let j12 = x / (ell * d * d);
        let j21 = y / (ell * d * d);
        let j22 = diag + 1.0 / d + y / (ell * d * d);
        let det = j11 * j22 - j12 * j21;
        let dx = (r.0 * j22 - r.1 * j12) / det;
        let dy = (j11 * r.1 - j21 * r.0) / det;
        let mut step = 1.0;
        loop {
            let (nx, ny) = (x - step * dx, y - step * dy);
            if inside(nx, ny) && norm(residual(nx, ny)) < norm(r) {
                x = nx;
                y = ny;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(format!("line search stalled at ({x}, {y})"));
            }
        }
    }
    Err(format!(
        "no convergence from ({sxx0}, {szz0}) with dt = {dt}"
    ))
}

/// Componentwise distance between two conformation pairs, relative to
/// `max(1, |σ|)`.
pub fn source_mismatch(a: (f64, f64), b: (f64, f64)) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
    rel(a.0, b.0).max(rel(a.1, b.1))
}

/// Rankine-Hugoniot residuals of a relaxed fan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhResiduals {
    /// `|s Δq - ΔF| / scale` per wave for `h, hu, hπ/c², hE`.
    pub conservative: [[f64; 4]; 3],
    /// Relative jumps of `w1, w2, c` across the two outer waves.
    pub transport: [[f64; 3]; 2],
    pub max_scaled: f64,
}

fn relaxed_conservative(st: &RelaxedState) -> ([f64; 4], [f64; 4]) {
    let u = st.hu / st.h;
    let pi = st.hpi / st.h;
    let c2 = st.c * st.c;
    (
        [st.h, st.hu, st.hpi / c2, st.he],
        [
            st.hu,
            st.hu * u + pi,
            st.hpi * u / c2 + u,
            st.he * u + u * pi,
        ],
    )
}

/// Residuals `s Δq - ΔF` of the relaxed system across every wave.
///
/// The relaxed pressure equation is written for `hπ/c²`, which is
/// conservative also across the contact where `c` jumps.
pub fn rh_residuals(fan: &WaveFan) -> RhResiduals {
    let mut conservative = [[0.0; 4]; 3];
    let mut transport = [[0.0; 3]; 2];
    let mut max_scaled = 0.0_f64;
    for (k, row) in conservative.iter_mut().enumerate() {
        let s = fan.speeds[k];
        let (qa, fa) = relaxed_conservative(&fan.states[k]);
        let (qb, fb) = relaxed_conservative(&fan.states[k + 1]);
        for (j, slot) in row.iter_mut().enumerate() {
            let res = s * (qb[j] - qa[j]) - (fb[j] - fa[j]);
            let scale = (s.abs() * qa[j].abs().max(qb[j].abs()))
                .max(fa[j].abs())
                .max(fb[j].abs())
                .max(f64::MIN_POSITIVE);
            *slot = res.abs() / scale;
            max_scaled = max_scaled.max(*slot);
        }
    }
    for (slot, (a, b)) in [(0, 1), (2, 3)].into_iter().enumerate() {
        let (sa, sb) = (&fan.states[a], &fan.states[b]);
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        transport[slot] = [rel(sa.w1, sb.w1), rel(sa.w2, sb.w2), rel(sa.c, sb.c)];
        for v in transport[slot] {
            max_scaled = max_scaled.max(v);
        }
    }
    RhResiduals {
        conservative,
        transport,
        max_scaled,
    }
}

fn stoker_middle_depth(h_l: f64, h_r: f64, g: f64) -> f64 {
    let f = |h: f64| {
        let shock = (g * (h + h_r) / (2.0 * h * h_r)).sqrt();
        let value = 2.0 * ((g * h_l).sqrt() - (g * h).sqrt()) - (h - h_r) * shock;
        let slope = -(g / h).sqrt() - shock + (h - h_r) * g / (4.0 * h * h * shock);
        (value, slope)
    };
    let (mut lo, mut hi) = (h_r, h_l);
    let mut h = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, dv) = f(h);
        if v.abs() <= 1e-14 * h_l {
            break;
        }
        // f decreases in h on (h_r, h_l).
        if v > 0.0 {
            lo = h;
        } else {
            hi = h;
        }
        let newton = h - v / dv;
        h = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * h_l {
            break;
        }
    }
    h
}

/// Exact shallow-water dam break (left rarefaction, right shock) with the
/// dam at `x = 0` and both sides initially at rest.
pub fn exact_sw_dam_break(h_l: f64, h_r: f64, g: f64, x: f64, t: f64) -> (f64, f64) {
    if h_l == h_r {
        return (h_l, 0.0);
    }
    if t <= 0.0 {
        return if x < 0.0 { (h_l, 0.0) } else { (h_r, 0.0) };
    }
    let h_m = stoker_middle_depth(h_l, h_r, g);
    let c_l = (g * h_l).sqrt();
    let c_m = (g * h_m).sqrt();
    let u_m = 2.0 * (c_l - c_m);
    let shock = h_m * u_m / (h_m - h_r);
    let xi = x / t;
    if xi <= -c_l {
        (h_l, 0.0)
    } else if xi <= u_m - c_m {
        let c = (2.0 * c_l - xi) / 3.0;
        (c * c / g, 2.0 * (xi + c_l) / 3.0)
    } else if xi < shock {
        (h_m, u_m)
    } else {
        (h_r, 0.0)
    }
}

/// Intermediate depth of the exact dam break.
pub fn exact_sw_middle_depth(h_l: f64, h_r: f64, g: f64) -> f64 {
    stoker_middle_depth(h_l, h_r, g)
}

/// Cell averages of the exact dam-break depth (midpoint rule, 32 subcells).
pub fn exact_sw_cell_averages(
    grid: &Grid,
    h_l: f64,
    h_r: f64,
    g: f64,
    x_dam: f64,
    t: f64,
) -> Vec<f64> {
    const SUB: usize = 32;
    (0..grid.len())
        .map(|i| {
            let (a, dx) = (grid.edges()[i], grid.dx(i));
            (0..SUB)
                .map(|j| {
                    let x = a + (j as f64 + 0.5) * dx / SUB as f64;
                    exact_sw_dam_break(h_l, h_r, g, x - x_dam, t).0
                })
                .sum::<f64>()
                / SUB as f64
        })
        .collect()
}

/// Largest relative midpoint-convexity defect of `F` in conserved variables
/// over admissible pairs, `(F(m) - (F1+F2)/2) / (|F1| + |F2|)`.
pub fn convexity_sampler(params: &PhysParams, samples: usize, seed: u64) -> OracleReport {
    let mut sampler = StateSampler::new(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let q1 = sampler.primitive(params.extensibility).to_conserved();
        let q2 = sampler.primitive(params.extensibility).to_conserved();
        let mid = 0.5 * (q1 + q2);
        let f = |q: &Conserved| free_energy(&q.to_primitive(), params);
        let (Ok(f1), Ok(f2), Ok(fm)) = (f(&q1), f(&q2), f(&mid)) else {
            worst = f64::INFINITY;
            continue;
        };
        worst = worst.max((fm - 0.5 * (f1 + f2)) / (f1.abs() + f2.abs()));
    }
    OracleReport::new(
        &format!("convexity(ell={})", params.extensibility),
        samples,
        worst.max(0.0),
        1e-12,
    )
}

/// Relative error of `∇_σ F|_{h,u} · S = D` at `p`.
pub fn gradient_identity_error(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let k = 2.0 * (1.0 - params.slip);
    let ell = params.extensibility;
    let s = p.sxx + p.szz;
    let coeff = -params.modulus * p.h / k;
    let dfx = coeff * (1.0 / p.sxx - ell / (ell - s));
    let dfz = coeff * (1.0 / p.szz - ell / (ell - s));
    let room = 1.0 - s / ell;
    let src_x = (1.0 - p.sxx / room) / params.relaxation_time;
    let src_z = (1.0 - p.szz / room) / params.relaxation_time;
    let lhs = dfx * src_x + dfz * src_z;
    let rhs = dissipation_rate(p, params)?;
    let scale = (dfx * src_x).abs() + (dfz * src_z).abs();
    Ok(if scale == 0.0 {
        (lhs - rhs).abs()
    } else {
        (lhs - rhs).abs() / scale
    })
}

/// Reference Suliciu step for plain shallow water (`G = 0`) with transmissive
/// boundaries. Fluxes are the physical relaxed fluxes of the state sampled at
/// `x/t = 0`. `alpha` and `beta` are the (uniform) speed coefficients.
pub fn reference_sw_suliciu_step(
    h: &[f64],
    hu: &[f64],
    g: f64,
    alpha: f64,
    beta: f64,
    dx: f64,
    dt: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = h.len();
    let cell = |i: isize| {
        let j = i.clamp(0, n as isize - 1) as usize;
        (h[j], hu[j] / h[j])
    };
    let flux = |(hl, ul): (f64, f64), (hr, ur): (f64, f64)| -> (f64, f64) {
        let (al, ar) = ((g * hl).sqrt(), (g * hr).sqrt());
        let (pl, pr) = (0.5 * g * hl * hl, 0.5 * g * hr * hr);
        let den = hl * al + hr * ar;
        let pos = |x: f64| if x > 0.0 { x } else { 0.0 };
        let cl = hl
            * f64::max(
                al + alpha * (pos(ul - ur) + pos(pr - pl) / den),
                beta * (pos(ur - ul) + pos(pl - pr) / den),
            );
        let cr = hr
            * f64::max(
                ar + alpha * (pos(ul - ur) + pos(pl - pr) / den),
                beta * (pos(ur - ul) + pos(pr - pl) / den),
            );
        let ustar = (cl * ul + cr * ur + pl - pr) / (cl + cr);
        let pistar = (cr * pl + cl * pr - cl * cr * (ur - ul)) / (cl + cr);
        let (hh, uu, pp) = if ul - cl / hl >= 0.0 {
            (hl, ul, pl)
        } else if ustar >= 0.0 {
            (1.0 / (1.0 / hl + (ustar - ul) / cl), ustar, pistar)
        } else if ur + cr / hr > 0.0 {
            (1.0 / (1.0 / hr - (ustar - ur) / cr), ustar, pistar)
        } else {
            (hr, ur, pr)
        };
        (hh * uu, hh * uu * uu + pp)
    };
    let fluxes: Vec<(f64, f64)> = (0..=n as isize)
        .map(|j| flux(cell(j - 1), cell(j)))
        .collect();
    let mut h_new = Vec::with_capacity(n);
    let mut hu_new = Vec::with_capacity(n);
    for i in 0..n {
        h_new.push(h[i] - dt / dx * (fluxes[i + 1].0 - fluxes[i].0));
        hu_new.push(hu[i] - dt / dx * (fluxes[i + 1].1 - fluxes[i].1));
    }
    (h_new, hu_new)
}

/// L¹ distance between the computed depth and the exact shallow-water dam
/// break (`h_l = 1`, `h_r = 0.1`, `g = 10`, `G = 0`) at `t = 0.1`.
pub fn sw_dam_break_l1(cells: usize) -> Result<f64> {
    let params = PhysParams::new(10.0, 0.0, 0.1, 0.0, 10.0)?;
    let grid = Grid::uniform(0.0, 1.0, cells)?;
    let init = SimState::from_fn(&grid, |x| {
        let h = if x < 0.5 { 1.0 } else { 0.1 };
        Primitive::new(h, 0.0, 1.0, 1.0)
    });
    let config = SolverConfig {
        boundary: BoundaryKind::Transmissive,
        ..Default::default()
    };
    let mut solver = Solver::new(grid.clone(), params, config, init)?;
    solver.run_until(0.1, |_, _| Ok(()))?;
    let exact = exact_sw_cell_averages(&grid, 1.0, 0.1, 10.0, 0.5, 0.1);
    Ok(solver
        .state
        .q
        .iter()
        .zip(&exact)
        .enumerate()
        .map(|(i, (q, e))| (q.h - e).abs() * grid.dx(i))
        .sum())
}

/// Runs every oracle with the given seed.
pub fn run_all(seed: u64) -> Vec<OracleReport> {
    let mut reports = Vec::new();
    let mut sampler = StateSampler::new(seed);

    let mut worst = 0.0_f64;
    let n_fd = 1000;
    for _ in 0..n_fd {
        let params = sampler.params();
        let p = sampler.primitive(params.extensibility);
        let err = match (dp_dh_frozen(&p, &params), fd_dp_dh(&p, &params, 1e-6)) {
            (Ok(a), Ok(b)) => (a - b).abs() / a.abs(),
            _ => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    reports.push(OracleReport::new("fd_dp_dh", n_fd, worst, 1e-6));

    let mut worst = 0.0_f64;
    let n_src = 10_000;
    for _ in 0..n_src {
        let params = sampler.params();
        let p = sampler.primitive(params.extensibility);
        let dt = 10f64.powf(sampler.uniform(-4.0, 1.0));
        let err = match (
            relax_conformation(p.sxx, p.szz, dt, &params),
            newton_source_2x2(p.sxx, p.szz, dt, &params),
        ) {
            (Ok(a), Ok(b)) => source_mismatch(a, b),
            _ => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    reports.push(OracleReport::new("newton_source_2x2", n_src, worst, 1e-10));

    let mut worst = 0.0_f64;
    let n_rh = 10_000;
    for _ in 0..n_rh {
        let params = sampler.params();
        let ql = sampler.primitive(params.extensibility).to_conserved();
        let qr = sampler.primitive(params.extensibility).to_conserved();
        let err = match interface_fluxes(&ql, &qr, &params) {
            Ok((_, fan)) => rh_residuals(&fan).max_scaled,
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    reports.push(OracleReport::new("rh_residuals", n_rh, worst, 1e-10));

    for (i, ell) in [3.0, 10.0, 1e3].into_iter().enumerate() {
        let params = PhysParams::new(10.0, 0.1, 0.1, 0.0, ell).expect("valid parameters");
        reports.push(convexity_sampler(
            &params,
            10_000,
            seed.wrapping_add(i as u64 + 1),
        ));
    }

    let mut worst = 0.0_f64;
    let n_grad = 1000;
    for _ in 0..n_grad {
        let params = sampler.params();
        let p = sampler.primitive(params.extensibility);
        worst = worst.max(gradient_identity_error(&p, &params).unwrap_or(f64::INFINITY));
    }
    reports.push(OracleReport::new("gradient_identity", n_grad, worst, 1e-10));

    let l1 = sw_dam_break_l1(1024).unwrap_or(f64::INFINITY);
    reports.push(OracleReport::new("exact_sw_dam_break_l1", 1024, l1, 0.01));

    reports
}
