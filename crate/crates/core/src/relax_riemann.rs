//! Suliciu relaxation approximate Riemann solver.
//!
//! The homogeneous system is enlarged with a relaxed pressure `π` and a
//! speed parameter `c`. Every eigenfield of the relaxed system is linearly
//! degenerate, so its Riemann solution is a fan of three waves
//! `u_l - c_l/h_l <= u* <= u_r + c_r/h_r` separating four constant states.
//! Across the two outer waves the invariants `σxx h^{2(1-ζ)}`,
//! `σzz h^{2(ζ-1)}`, `c` and `ê - π²/(2c²)` are constant; across the contact
//! `u` and `π` are.
//!
//! The relaxation speeds are chosen so that the projected star states stay
//! in the admissibility domain: `α` bounds the depth expansion, `β` the
//! depth compression.
//!
//! Several expressions below are grouped so that the solver is exactly
//! (bitwise) invariant under the reflection `x -> -x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    dp_dh_frozen, free_energy, internal_energy, is_admissible, physical_flux, total_pressure,
    Conserved, PhysParams, Primitive,
};

/// Speeds are floored at this fraction of `h max(1, a)`.
const SPEED_FLOOR: f64 = 1e-14;
/// Relative tolerance on the two expressions of `π*`.
const PI_STAR_TOL: f64 = 1e-10;
/// Attempts made by the strict subcharacteristic mode.
const STRICT_RETRIES: usize = 3;

/// A state of the relaxed 7-component system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxedState {
    pub h: f64,
    pub hu: f64,
    /// `σxx h^{2(1-ζ)}`
    pub w1: f64,
    /// `σzz h^{2(ζ-1)}`
    pub w2: f64,
    /// `h π`
    pub hpi: f64,
    /// `h (u²/2 + ê)`
    pub he: f64,
    pub c: f64,
}

impl RelaxedState {
    /// Relaxed state at equilibrium with `q`: `π = P(q)`, `ê = e(q)`.
    pub fn initial(q: &Conserved, c: f64, params: &PhysParams) -> Result<Self> {
        let p = q.to_primitive();
        let k = params.stretch_exponent();
        Ok(RelaxedState {
            h: q.h,
            hu: q.hu,
            w1: p.sxx * p.h.powf(k),
            w2: p.szz * p.h.powf(-k),
            hpi: q.h * total_pressure(&p, params)?,
            he: free_energy(&p, params)?,
            c,
        })
    }

    #[inline]
    pub fn velocity(&self) -> f64 {
        self.hu / self.h
    }

    #[inline]
    pub fn pi(&self) -> f64 {
        self.hpi / self.h
    }

    /// Projection onto `(h, hu, hσxx, hσzz)` using the transported invariants.
    pub fn project(&self, params: &PhysParams) -> Conserved {
        let k = params.stretch_exponent();
        let sxx = self.w1 * self.h.powf(-k);
        let szz = self.w2 * self.h.powf(k);
        Conserved::new(self.h, self.hu, self.h * sxx, self.h * szz)
    }
}

/// Left and right relaxation speeds (Lagrangian, m²/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedPair {
    pub c_l: f64,
    pub c_r: f64,
}

/// Relaxed Riemann solution: three waves and four constant states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveFan {
    /// `[u_l - c_l/h_l, u*, u_r + c_r/h_r]`
    pub speeds: [f64; 3],
    /// `[Q_l, Q_l*, Q_r*, Q_r]`
    pub states: [RelaxedState; 4],
    /// Projections of `states`; the outer two are the input states verbatim.
    pub projected: [Conserved; 4],
    pub speed_pair: SpeedPair,
}

impl WaveFan {
    pub fn u_star(&self) -> f64 {
        self.speeds[1]
    }

    /// Largest absolute outer wave speed.
    pub fn max_abs_speed(&self) -> f64 {
        self.speeds[0].abs().max(self.speeds[2].abs())
    }

    /// Index in `states` of the state sampled at `xi`; ties go to the left state.
    pub fn region(&self, xi: f64) -> usize {
        self.speeds.iter().take_while(|&&s| xi > s).count()
    }
}

/// Numerical flux seen by the left and by the right cell of an interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxPair {
    pub f_left: Conserved,
    pub f_right: Conserved,
}

/// Choice of the arbitrary reference flux `F_0` in the flux construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxBase {
    /// The exact gSV flux.
    #[default]
    Exact,
    /// `F_0 = 0`; cell updates do not depend on the choice.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RiemannOptions {
    pub flux_base: FluxBase,
    /// Double both speeds (at most three times) while the subcharacteristic
    /// ratio exceeds one.
    pub strict_subcharacteristic: bool,
}

/// Bounds `(w⁻, w⁺)` of the admissible range of `(h*/h)^{2(1-ζ)}`.
///
/// With `A = σzz/ℓ`, `B = σxx/ℓ` the star state is admissible iff
/// `w A + B/w < 1`. `w⁻` is evaluated without cancellation.
pub fn w_bounds(p: &Primitive, params: &PhysParams) -> Result<(f64, f64)> {
    if !is_admissible(p, params) {
        return Err(Error::Domain(format!("w_bounds at {p:?}")));
    }
    let a = p.szz / params.extensibility;
    let b = p.sxx / params.extensibility;
    let disc = (1.0 - 4.0 * a * b).max(0.0).sqrt();
    let w_minus = 2.0 * b / (1.0 + disc);
    let w_plus = (1.0 + disc) / (2.0 * a);
    Ok((w_minus, w_plus))
}

fn alpha_from_root(w: f64) -> f64 {
    if !w.is_finite() {
        return 2.0;
    }
    let ratio = w / (w - 1.0);
    if ratio.is_finite() && ratio > 2.0 {
        ratio
    } else if ratio.is_finite() {
        2.0
    } else {
        f64::INFINITY
    }
}

fn beta_from_root(v: f64) -> f64 {
    v / (1.0 - v)
}

/// `α = max(2, W/(W-1))` with `W = (w⁺)^{1/(2(1-ζ))}`.
pub fn alpha_coefficient(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let (_, w_plus) = w_bounds(p, params)?;
    Ok(alpha_from_root(
        w_plus.powf(1.0 / params.stretch_exponent()),
    ))
}

/// `β = V/(1-V)` with `V = (w⁻)^{1/(2(1-ζ))}`.
pub fn beta_coefficient(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let (w_minus, _) = w_bounds(p, params)?;
    Ok(beta_from_root(
        w_minus.powf(1.0 / params.stretch_exponent()),
    ))
}

/// Everything the solver needs from one side of the interface.
#[derive(Debug, Clone, Copy)]
struct Side {
    q: Conserved,
    p: Primitive,
    pi: f64,
    a: f64,
    alpha: f64,
    beta: f64,
}

impl Side {
    fn new(q: &Conserved, params: &PhysParams) -> Result<Self> {
        let p = q.to_primitive();
        if !is_admissible(&p, params) {
            return Err(Error::Domain(format!("Riemann data {p:?}")));
        }
        Ok(Side {
            q: *q,
            p,
            pi: total_pressure(&p, params)?,
            a: dp_dh_frozen(&p, params)?.sqrt(),
            alpha: alpha_coefficient(&p, params)?,
            beta: beta_coefficient(&p, params)?,
        })
    }
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn speeds_from_sides(l: &Side, r: &Side) -> SpeedPair {
    let den = l.p.h * l.a + r.p.h * r.a;
    let compress = pos(l.p.u - r.p.u);
    let expand = pos(r.p.u - l.p.u);
    let pi_rise = pos(r.pi - l.pi);
    let pi_fall = pos(l.pi - r.pi);

    let c_l =
        l.p.h * (l.a + l.alpha * (compress + pi_rise / den)).max(l.beta * (expand + pi_fall / den));
    let c_r =
        r.p.h * (r.a + r.alpha * (compress + pi_fall / den)).max(r.beta * (expand + pi_rise / den));

    SpeedPair {
        c_l: c_l.max(SPEED_FLOOR * l.p.h * l.a.max(1.0)),
        c_r: c_r.max(SPEED_FLOOR * r.p.h * r.a.max(1.0)),
    }
}

/// Relaxation speeds `(c_l, c_r)` ensuring positive star depths and
/// admissible star conformations.
pub fn relaxation_speeds(
    q_l: &Conserved,
    q_r: &Conserved,
    params: &PhysParams,
) -> Result<SpeedPair> {
    let l = Side::new(q_l, params)?;
    let r = Side::new(q_r, params)?;
    Ok(speeds_from_sides(&l, &r))
}

fn star_side(
    side: &Side,
    h_star: f64,
    u_star: f64,
    pi_star: f64,
    c: f64,
    params: &PhysParams,
) -> Result<(RelaxedState, Conserved)> {
    let k = params.stretch_exponent();
    let ratio = h_star / side.p.h;
    let sxx = side.p.sxx * ratio.powf(-k);
    let szz = side.p.szz * ratio.powf(k);
    let star = Primitive::new(h_star, u_star, sxx, szz);
    if !is_admissible(&star, params) {
        return Err(Error::StarState(format!(
            "star conformation ({sxx}, {szz}) outside the admissibility domain (ell = {})",
            params.extensibility
        )));
    }
    let e = internal_energy(&side.p, params)?;
    let e_star = e + (pi_star * pi_star - side.pi * side.pi) / (2.0 * c * c);
    let outer = RelaxedState::initial(&side.q, c, params)?;
    let relaxed = RelaxedState {
        h: h_star,
        hu: h_star * u_star,
        w1: outer.w1,
        w2: outer.w2,
        hpi: h_star * pi_star,
        he: h_star * (0.5 * u_star * u_star + e_star),
        c,
    };
    Ok((relaxed, star.to_conserved()))
}

fn fan_from_sides(l: &Side, r: &Side, sp: SpeedPair, params: &PhysParams) -> Result<WaveFan> {
    let SpeedPair { c_l, c_r } = sp;
    let (ul, ur) = (l.p.u, r.p.u);
    let du = ur - ul;
    let csum = c_l + c_r;

    let u_star = ((c_l * ul + c_r * ur) + (l.pi - r.pi)) / csum;
    let pi_star = ((c_r * l.pi + c_l * r.pi) - (c_l * c_r) * du) / csum;

    let pi_left = l.pi + c_l * (ul - u_star);
    let pi_right = r.pi + c_r * (u_star - ur);
    let scale =
        l.pi.abs()
            .max(r.pi.abs())
            .max((c_l * ul).abs())
            .max((c_r * ur).abs());
    if (pi_left - pi_right).abs() > PI_STAR_TOL * scale.max(f64::MIN_POSITIVE)
        || (pi_left - pi_star).abs() > PI_STAR_TOL * scale.max(f64::MIN_POSITIVE)
    {
        return Err(Error::StarState(format!(
            "pi* not single valued: {pi_left} vs {pi_right}"
        )));
    }

    let inv_hl = 1.0 / l.p.h + (c_r * du + (l.pi - r.pi)) / (c_l * csum);
    let inv_hr = 1.0 / r.p.h + (c_l * du + (r.pi - l.pi)) / (c_r * csum);
    if !(inv_hl > 0.0 && inv_hr > 0.0 && inv_hl.is_finite() && inv_hr.is_finite()) {
        return Err(Error::StarState(format!(
            "non-positive star depth: 1/h_l* = {inv_hl}, 1/h_r* = {inv_hr}"
        )));
    }

    let s1 = ul - c_l / l.p.h;
    let s3 = ur + c_r / r.p.h;
    if !(s1 <= u_star && u_star <= s3) {
        return Err(Error::StarState(format!(
            "wave speeds out of order: {s1} <= {u_star} <= {s3} fails"
        )));
    }

    let (ls, lq) = star_side(l, 1.0 / inv_hl, u_star, pi_star, c_l, params)?;
    let (rs, rq) = star_side(r, 1.0 / inv_hr, u_star, pi_star, c_r, params)?;

    Ok(WaveFan {
        speeds: [s1, u_star, s3],
        states: [
            RelaxedState::initial(&l.q, c_l, params)?,
            ls,
            rs,
            RelaxedState::initial(&r.q, c_r, params)?,
        ],
        projected: [l.q, lq, rq, r.q],
        speed_pair: sp,
    })
}

/// Builds the relaxed Riemann fan for the given speeds.
///
/// Fails with [`Error::StarState`] when a star depth is not positive, the
/// waves are out of order, or a star conformation is not admissible.
pub fn star_states(
    q_l: &Conserved,
    q_r: &Conserved,
    sp: SpeedPair,
    params: &PhysParams,
) -> Result<WaveFan> {
    let l = Side::new(q_l, params)?;
    let r = Side::new(q_r, params)?;
    fan_from_sides(&l, &r, sp, params)
}

/// Relaxed state at self-similar coordinate `xi = x/t`.
pub fn sample_fan(xi: f64, fan: &WaveFan) -> RelaxedState {
    fan.states[fan.region(xi)]
}

fn fluxes_from_fan(fan: &WaveFan, base: FluxBase, params: &PhysParams) -> Result<FluxPair> {
    let q = &fan.projected;
    let jumps = [q[1] - q[0], q[2] - q[1], q[3] - q[2]];
    let s = fan.speeds;
    let (f0_l, f0_r) = match base {
        FluxBase::Exact => (physical_flux(&q[0], params)?, physical_flux(&q[3], params)?),
        FluxBase::Zero => (Conserved::ZERO, Conserved::ZERO),
    };
    // Summation orders are mirror images of each other.
    let left_sum = (s[2].min(0.0) * jumps[2] + s[1].min(0.0) * jumps[1]) + s[0].min(0.0) * jumps[0];
    let right_sum =
        (s[0].max(0.0) * jumps[0] + s[1].max(0.0) * jumps[1]) + s[2].max(0.0) * jumps[2];
    Ok(FluxPair {
        f_left: f0_l + left_sum,
        f_right: f0_r - right_sum,
    })
}

/// Numerical fluxes `F_l(q_l, q_r)`, `F_r(q_l, q_r)` and the wave fan.
pub fn interface_fluxes(
    q_l: &Conserved,
    q_r: &Conserved,
    params: &PhysParams,
) -> Result<(FluxPair, WaveFan)> {
    interface_fluxes_with(q_l, q_r, params, &RiemannOptions::default())
}

pub fn interface_fluxes_with(
    q_l: &Conserved,
    q_r: &Conserved,
    params: &PhysParams,
    opts: &RiemannOptions,
) -> Result<(FluxPair, WaveFan)> {
    let l = Side::new(q_l, params)?;
    let r = Side::new(q_r, params)?;
    let mut sp = speeds_from_sides(&l, &r);
    let mut fan = fan_from_sides(&l, &r, sp, params)?;
    if opts.strict_subcharacteristic {
        for _ in 0..STRICT_RETRIES {
            if subcharacteristic_monitor(&fan, params).worst_ratio <= 1.0 {
                break;
            }
            sp = SpeedPair {
                c_l: 2.0 * sp.c_l,
                c_r: 2.0 * sp.c_r,
            };
            fan = fan_from_sides(&l, &r, sp, params)?;
        }
    }
    let fluxes = fluxes_from_fan(&fan, opts.flux_base, params)?;
    Ok((fluxes, fan))
}

/// Free-energy numerical flux `u (h(u²/2 + ê) + π)` at `ξ = 0`.
pub fn energy_flux(fan: &WaveFan) -> f64 {
    let st = sample_fan(0.0, fan);
    st.velocity() * (st.he + st.pi())
}

/// Worst ratio `h² ∂_h P / c²` over the fan states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubcharacteristicReport {
    pub ratios: [f64; 4],
    pub worst_ratio: f64,
}

impl SubcharacteristicReport {
    pub fn satisfied(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

/// Evaluates the subcharacteristic condition on the projected fan states.
/// Violations are reported, never raised.
pub fn subcharacteristic_monitor(fan: &WaveFan, params: &PhysParams) -> SubcharacteristicReport {
    let mut ratios = [0.0; 4];
    for (i, q) in fan.projected.iter().enumerate() {
        let c = if i < 2 {
            fan.speed_pair.c_l
        } else {
            fan.speed_pair.c_r
        };
        let p = q.to_primitive();
        ratios[i] = match dp_dh_frozen(&p, params) {
            Ok(d) => p.h * p.h * d / (c * c),
            Err(_) => f64::INFINITY,
        };
    }
    let worst_ratio = ratios.iter().fold(0.0_f64, |m, &r| m.max(r));
    SubcharacteristicReport {
        ratios,
        worst_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dam_params() -> PhysParams {
        PhysParams::dam_break(10.0).unwrap()
    }

    fn q(h: f64, u: f64, sxx: f64, szz: f64) -> Conserved {
        Primitive::new(h, u, sxx, szz).to_conserved()
    }

    #[test]
    fn w_bounds_reference() {
        let (wm, wp) = w_bounds(&Primitive::new(1.0, 0.0, 1.0, 1.0), &dam_params()).unwrap();
        // Arbitrary-precision values.
        assert!((wm - 0.101_020_514_433_643_8).abs() < 1e-15);
        assert!((wp - 9.898_979_485_566_356).abs() < 1e-13);
        assert!(wm < 1.0 && wp > 1.0);
    }

    #[test]
    fn w_bounds_limits() {
        let pr = PhysParams::new(10.0, 0.1, 0.1, 0.0, 10.0).unwrap();
        // Near A = B = 1/2 both bounds approach 1.
        let eps = 1e-9;
        let s = 5.0 - eps;
        let (wm, wp) = w_bounds(&Primitive::new(1.0, 0.0, s, s - 1e-9), &pr).unwrap();
        assert!(wm < 1.0 && wp > 1.0);
        assert!((wm - 1.0).abs() < 1e-3 && (wp - 1.0).abs() < 1e-3);
        // A -> 0: w- -> B, w+ -> infinity.
        let (wm, wp) = w_bounds(&Primitive::new(1.0, 0.0, 3.0, 1e-12), &pr).unwrap();
        assert!((wm - 0.3).abs() < 1e-10);
        assert!(wp > 1e11);
        assert!(w_bounds(&Primitive::new(1.0, 0.0, 5.0, 5.0), &pr).is_err());
    }

    #[test]
    fn alpha_beta_reference() {
        assert_eq!(alpha_from_root(f64::INFINITY), 2.0);
        assert_eq!(alpha_from_root(1.5), 3.0);
        assert_eq!(beta_from_root(0.5), 1.0);
        assert_eq!(beta_from_root(0.0), 0.0);
        let p = Primitive::new(1.0, 0.0, 1.0, 1.0);
        assert_eq!(alpha_coefficient(&p, &dam_params()).unwrap(), 2.0);
        let beta = beta_coefficient(&p, &dam_params()).unwrap();
        assert!((beta - 0.465_925_826_289_068_3).abs() < 1e-14);
        // sxx ~ 0 makes w+ overflow-free but huge only when szz ~ 0.
        let tiny = Primitive::new(1.0, 0.0, 1.0, 1e-300);
        assert_eq!(alpha_coefficient(&tiny, &dam_params()).unwrap(), 2.0);
    }

    #[test]
    fn equal_states_speed_floor() {
        let pr = dam_params();
        let qq = q(0.8, 0.0, 1.2, 0.4);
        let sp = relaxation_speeds(&qq, &qq, &pr).unwrap();
        let a = dp_dh_frozen(&qq.to_primitive(), &pr).unwrap().sqrt();
        assert!((sp.c_l - 0.8 * a).abs() < 1e-15);
        assert_eq!(sp.c_l, sp.c_r);
    }

    #[test]
    fn dam_break_interface_reference() {
        // Values from an independent arbitrary-precision evaluation of the
        // speed, star-depth and star-conformation formulas.
        let pr = dam_params();
        let (ql, qr) = (q(1.0, 0.0, 1.0, 1.0), q(0.1, 0.0, 1.0, 1.0));
        let sp = relaxation_speeds(&ql, &qr, &pr).unwrap();
        assert!((sp.c_l - 3.240_370_349_203_93).abs() < 1e-14);
        assert!((sp.c_r - 0.416_868_087_849_137_3).abs() < 1e-14);
        let fan = star_states(&ql, &qr, sp, &pr).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-13 * b.abs().max(1.0);
        assert!(close(fan.speeds[0], -3.240_370_349_203_93));
        assert!(close(fan.speeds[1], 1.353_480_251_615_373_2));
        assert!(close(fan.speeds[2], 4.168_680_878_491_373));
        assert!(close(fan.states[1].h, 0.705_371_295_406_519_5));
        assert!(close(fan.states[2].h, 0.148_077_577_089_676_8));
        assert!(close(fan.states[1].pi(), 0.614_222_724_432_469_8));
        assert!(close(fan.states[2].pi(), 0.614_222_724_432_469_8));
        let l = fan.projected[1].to_primitive();
        let r = fan.projected[2].to_primitive();
        assert!(close(l.sxx, 2.009_853_651_680_75));
        assert!(close(l.szz, 0.497_548_664_383_471_46));
        assert!(close(r.sxx, 0.456_059_388_529_808_74));
        assert!(close(r.szz, 2.192_696_883_674_917_4));
    }

    #[test]
    fn equal_states_degenerate_fan() {
        let pr = dam_params();
        let qq = q(0.6, 1.3, 2.0, 3.0);
        let (fp, fan) = interface_fluxes(&qq, &qq, &pr).unwrap();
        let f0 = physical_flux(&qq, &pr).unwrap();
        for st in &fan.projected {
            assert!((*st - qq).max_abs() < 1e-14);
        }
        assert!((fp.f_left - f0).max_abs() < 1e-13);
        assert!((fp.f_right - f0).max_abs() < 1e-13);
        let p = qq.to_primitive();
        let expected = p.u * (free_energy(&p, &pr).unwrap() + total_pressure(&p, &pr).unwrap());
        assert!((energy_flux(&fan) - expected).abs() < 1e-13 * expected.abs());
        let rest = q(0.6, 0.0, 2.0, 3.0);
        let (_, fan) = interface_fluxes(&rest, &rest, &pr).unwrap();
        assert_eq!(energy_flux(&fan), 0.0);
    }

    #[test]
    fn symmetric_collision() {
        let pr = dam_params();
        let (ql, qr) = (q(0.5, 2.0, 1.5, 0.7), q(0.5, -2.0, 1.5, 0.7));
        let (_, fan) = interface_fluxes(&ql, &qr, &pr).unwrap();
        assert_eq!(fan.u_star(), 0.0);
        assert_eq!(fan.states[1].h, fan.states[2].h);
        // Tie at the contact: left star state.
        assert_eq!(sample_fan(0.0, &fan), fan.states[1]);
        assert_eq!(fan.states[1].hu, fan.states[2].hu);
        assert_eq!(fan.states[1].pi(), fan.states[2].pi());
    }

    #[test]
    fn sampling_regions() {
        let pr = dam_params();
        let (_, fan) =
            interface_fluxes(&q(1.0, 0.0, 1.0, 1.0), &q(0.1, 0.0, 1.0, 1.0), &pr).unwrap();
        assert_eq!(sample_fan(-1e3, &fan), fan.states[0]);
        assert_eq!(sample_fan(fan.speeds[0], &fan), fan.states[0]);
        assert_eq!(sample_fan(0.0, &fan), fan.states[1]);
        assert_eq!(sample_fan(2.0, &fan), fan.states[2]);
        assert_eq!(sample_fan(1e3, &fan), fan.states[3]);
    }

    #[test]
    fn supersonic_upwinding() {
        let pr = dam_params();
        let (ql, qr) = (q(0.2, 8.0, 1.0, 1.2), q(0.25, 8.5, 0.9, 1.0));
        let (fp, fan) = interface_fluxes(&ql, &qr, &pr).unwrap();
        assert!(fan.speeds[0] > 0.0);
        assert_eq!(fp.f_left, physical_flux(&ql, &pr).unwrap());
        let scale = fp.f_left.max_abs();
        assert!((fp.f_right.h - fp.f_left.h).abs() < 1e-12 * scale);
        assert!((fp.f_right.hu - fp.f_left.hu).abs() < 1e-12 * scale);
    }

    #[test]
    fn mirror_swaps_speeds() {
        let pr = dam_params();
        let (ql, qr) = (q(1.0, 0.3, 1.0, 1.4), q(0.1, -0.8, 2.0, 1.0));
        let sp = relaxation_speeds(&ql, &qr, &pr).unwrap();
        let sm = relaxation_speeds(&qr.mirrored(), &ql.mirrored(), &pr).unwrap();
        assert_eq!(sp.c_l, sm.c_r);
        assert_eq!(sp.c_r, sm.c_l);
    }

    #[test]
    fn corrupt_speeds_are_rejected() {
        let pr = dam_params();
        let (ql, qr) = (q(1.0, 5.0, 1.0, 1.0), q(1.0, -5.0, 1.0, 1.0));
        let tiny = SpeedPair { c_l: 0.1, c_r: 0.1 };
        assert!(matches!(
            star_states(&ql, &qr, tiny, &pr),
            Err(Error::StarState(_))
        ));
    }

    #[test]
    fn monitor_equal_states() {
        let pr = dam_params();
        let qq = q(0.9, 0.0, 1.0, 1.0);
        let (_, fan) = interface_fluxes(&qq, &qq, &pr).unwrap();
        let rep = subcharacteristic_monitor(&fan, &pr);
        assert!((rep.worst_ratio - 1.0).abs() < 1e-13);
    }

    #[test]
    fn strict_mode_never_slows_waves() {
        let pr = PhysParams::new(10.0, 5.0, 0.1, 0.0, 3.0).unwrap();
        let (ql, qr) = (q(1.0, 0.0, 0.2, 2.6), q(0.01, 0.0, 2.6, 0.2));
        let (_, plain) = interface_fluxes(&ql, &qr, &pr).unwrap();
        let opts = RiemannOptions {
            strict_subcharacteristic: true,
            ..Default::default()
        };
        let (_, strict) = interface_fluxes_with(&ql, &qr, &pr, &opts).unwrap();
        assert!(strict.speed_pair.c_l >= plain.speed_pair.c_l);
        let rs = subcharacteristic_monitor(&strict, &pr).worst_ratio;
        let rp = subcharacteristic_monitor(&plain, &pr).worst_ratio;
        assert!(rs <= rp.max(1.0));
    }
}
