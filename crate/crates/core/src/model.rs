//! Physical parameters, state vectors and the equations of state of the
//! viscoelastic Saint-Venant system with FENE-P rheology.
//!
//! All quantities are per unit density. The conformation pair
//! `(sxx, szz)` must stay in the admissibility domain
//! `{h > 0, sxx > 0, szz > 0, sxx + szz < ell}`; every function here
//! returns [`Error::Domain`] outside of it instead of clamping.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the generalized Saint-Venant / FENE-P system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Gravitational acceleration `g` (m/s²).
    pub gravity: f64,
    /// Elastic modulus per unit density `G` (m²/s²).
    pub modulus: f64,
    /// Relaxation time `λ` (s).
    pub relaxation_time: f64,
    /// Gordon-Schowalter slip parameter `ζ`, in `[0, 1/2]`.
    pub slip: f64,
    /// Maximal extensibility `ℓ`, strictly larger than 2.
    pub extensibility: f64,
}

impl PhysParams {
    pub fn new(
        gravity: f64,
        modulus: f64,
        relaxation_time: f64,
        slip: f64,
        extensibility: f64,
    ) -> Result<Self> {
        let params = PhysParams {
            gravity,
            modulus,
            relaxation_time,
            slip,
            extensibility,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters of the dam-break experiment (`g=10, G=0.1, λ=0.1, ζ=0`).
    pub fn dam_break(extensibility: f64) -> Result<Self> {
        Self::new(10.0, 0.1, 0.1, 0.0, extensibility)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return bad(format!("gravity must be > 0, got {}", self.gravity));
        }
        if !(self.modulus.is_finite() && self.modulus >= 0.0) {
            return bad(format!("modulus G must be >= 0, got {}", self.modulus));
        }
        if !(self.relaxation_time.is_finite() && self.relaxation_time > 0.0) {
            return bad(format!(
                "relaxation time must be > 0, got {}",
                self.relaxation_time
            ));
        }
        if !(0.0..=0.5).contains(&self.slip) {
            return bad(format!(
                "slip parameter must lie in [0, 1/2], got {}",
                self.slip
            ));
        }
        if !(self.extensibility > 2.0) || self.extensibility.is_nan() {
            return bad(format!(
                "extensibility must be > 2, got {}",
                self.extensibility
            ));
        }
        Ok(())
    }

    /// The exponent `2(1-ζ)` that appears in the transported invariants.
    #[inline]
    pub fn stretch_exponent(&self) -> f64 {
        2.0 * (1.0 - self.slip)
    }
}

/// Primitive variables `(h, u, σxx, σzz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub h: f64,
    pub u: f64,
    pub sxx: f64,
    pub szz: f64,
}

impl Primitive {
    pub fn new(h: f64, u: f64, sxx: f64, szz: f64) -> Self {
        Primitive { h, u, sxx, szz }
    }

    pub fn to_conserved(&self) -> Conserved {
        Conserved {
            h: self.h,
            hu: self.h * self.u,
            hsxx: self.h * self.sxx,
            hszz: self.h * self.szz,
        }
    }

    /// Stretch `σxx + σzz`.
    #[inline]
    pub fn stretch(&self) -> f64 {
        self.sxx + self.szz
    }

    /// Same state with the velocity reversed.
    pub fn mirrored(&self) -> Self {
        Primitive {
            u: -self.u,
            ..*self
        }
    }
}

/// Conserved discretization variable `q = (h, hu, hσxx, hσzz)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Conserved {
    pub h: f64,
    pub hu: f64,
    pub hsxx: f64,
    pub hszz: f64,
}

impl Conserved {
    pub const ZERO: Conserved = Conserved {
        h: 0.0,
        hu: 0.0,
        hsxx: 0.0,
        hszz: 0.0,
    };

    pub fn new(h: f64, hu: f64, hsxx: f64, hszz: f64) -> Self {
        Conserved { h, hu, hsxx, hszz }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Conserved::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.h, self.hu, self.hsxx, self.hszz]
    }

    /// Primitive variables; only meaningful for `h > 0`.
    pub fn to_primitive(&self) -> Primitive {
        Primitive {
            h: self.h,
            u: self.hu / self.h,
            sxx: self.hsxx / self.h,
            szz: self.hszz / self.h,
        }
    }

    /// Reflection `x -> -x`: negates the momentum.
    pub fn mirrored(&self) -> Self {
        Conserved {
            hu: -self.hu,
            ..*self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Add for Conserved {
    type Output = Conserved;
    fn add(self, o: Conserved) -> Conserved {
        Conserved::new(
            self.h + o.h,
            self.hu + o.hu,
            self.hsxx + o.hsxx,
            self.hszz + o.hszz,
        )
    }
}

impl Sub for Conserved {
    type Output = Conserved;
    fn sub(self, o: Conserved) -> Conserved {
        Conserved::new(
            self.h - o.h,
            self.hu - o.hu,
            self.hsxx - o.hsxx,
            self.hszz - o.hszz,
        )
    }
}

impl Mul<Conserved> for f64 {
    type Output = Conserved;
    fn mul(self, q: Conserved) -> Conserved {
        Conserved::new(self * q.h, self * q.hu, self * q.hsxx, self * q.hszz)
    }
}

impl Neg for Conserved {
    type Output = Conserved;
    fn neg(self) -> Conserved {
        Conserved::new(-self.h, -self.hu, -self.hsxx, -self.hszz)
    }
}

/// Membership in the admissibility domain, with strict inequalities.
pub fn is_admissible(p: &Primitive, params: &PhysParams) -> bool {
    p.h > 0.0
        && p.u.is_finite()
        && p.sxx > 0.0
        && p.szz > 0.0
        && p.sxx + p.szz < params.extensibility
        && p.h.is_finite()
}

fn check_admissible(p: &Primitive, params: &PhysParams) -> Result<()> {
    if is_admissible(p, params) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "h={}, u={}, sxx={}, szz={} with ell={}",
            p.h, p.u, p.sxx, p.szz, params.extensibility
        )))
    }
}

/// Peterlin factor `1 - (σxx+σzz)/ℓ`, positive on the admissibility domain.
fn peterlin(p: &Primitive, params: &PhysParams) -> Result<f64> {
    check_admissible(p, params)?;
    let d = 1.0 - p.stretch() / params.extensibility;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::Domain(format!(
            "stretch {} reaches extensibility {}",
            p.stretch(),
            params.extensibility
        )))
    }
}

/// Normal-stress difference `N = G(σzz - σxx) / (1 - (σxx+σzz)/ℓ)`.
pub fn normal_stress(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let d = peterlin(p, params)?;
    Ok(params.modulus * (p.szz - p.sxx) / d)
}

/// Total pressure (impulse) `P = g h²/2 + h N`.
pub fn total_pressure(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let n = normal_stress(p, params)?;
    Ok(0.5 * params.gravity * p.h * p.h + p.h * n)
}

/// Derivative of `P` with respect to `h` at fixed transported invariants
/// `σxx h^{2(1-ζ)}` and `σzz h^{2(ζ-1)}`.
///
/// Along that path `dσxx/dh = -k σxx/h` and `dσzz/dh = k σzz/h` with
/// `k = 2(1-ζ)`, which gives
/// `g h + N + G k (s/D + (σzz-σxx)²/(ℓ D²))`.
pub fn dp_dh_frozen(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let d = peterlin(p, params)?;
    let k = params.stretch_exponent();
    let s = p.stretch();
    let diff = p.szz - p.sxx;
    let n = params.modulus * diff / d;
    let value = params.gravity * p.h
        + n
        + params.modulus * k * (s / d + diff * diff / (params.extensibility * d * d));
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonHyperbolic { value })
    }
}

/// Elastic part of the free energy per unit depth (without the `h` factor).
fn elastic_energy(p: &Primitive, params: &PhysParams) -> Result<f64> {
    check_admissible(p, params)?;
    let ell = params.extensibility;
    let k = params.stretch_exponent();
    let log_fene = ((ell - p.stretch()) / (ell - 2.0)).ln();
    Ok(-params.modulus / k * (ell * log_fene + (p.sxx * p.szz).ln()))
}

/// Free energy `F = h (u²/2 + g h/2 - G/(2(1-ζ)) (ℓ log((ℓ-s)/(ℓ-2)) + log(σxx σzz)))`.
pub fn free_energy(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let elastic = elastic_energy(p, params)?;
    Ok(p.h * (0.5 * p.u * p.u + 0.5 * params.gravity * p.h + elastic))
}

/// Internal energy `e = F/h - u²/2`.
pub fn internal_energy(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let elastic = elastic_energy(p, params)?;
    Ok(0.5 * params.gravity * p.h + elastic)
}

/// Free-energy dissipation rate `D <= 0` produced by the relaxation source.
pub fn dissipation_rate(p: &Primitive, params: &PhysParams) -> Result<f64> {
    let d = peterlin(p, params)?;
    let k = params.stretch_exponent();
    let rx = 1.0 - p.sxx / d;
    let rz = 1.0 - p.szz / d;
    let pre = -params.modulus * p.h / (k * params.relaxation_time);
    Ok(pre * (rx * rx / p.sxx + rz * rz / p.szz))
}

/// Equilibrium conformation `ℓ/(ℓ+2)` at which both source terms vanish.
pub fn equilibrium_sigma(params: &PhysParams) -> f64 {
    let ell = params.extensibility;
    ell / (ell + 2.0)
}

/// Exact gSV flux `(hu, hu² + P, hu σxx, hu σzz)`.
pub fn physical_flux(q: &Conserved, params: &PhysParams) -> Result<Conserved> {
    let p = q.to_primitive();
    let pressure = total_pressure(&p, params)?;
    Ok(Conserved::new(
        q.hu,
        q.hu * p.u + pressure,
        q.hu * p.sxx,
        q.hu * p.szz,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, modulus: f64, slip: f64, ell: f64) -> PhysParams {
        PhysParams::new(g, modulus, 0.1, slip, ell).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(PhysParams::new(10.0, 0.1, 0.1, 0.0, 10.0).is_ok());
        assert!(PhysParams::new(10.0, 0.1, 0.0, 0.0, 10.0).is_err());
        assert!(PhysParams::new(10.0, 0.1, 0.1, 0.6, 10.0).is_err());
        assert!(PhysParams::new(10.0, 0.1, 0.1, 0.0, 2.0).is_err());
        assert!(PhysParams::new(0.0, 0.1, 0.1, 0.0, 10.0).is_err());
        assert!(PhysParams::new(10.0, -1.0, 0.1, 0.0, 10.0).is_err());
        assert!(PhysParams::new(10.0, 0.1, 0.1, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let pr = params(10.0, 0.1, 0.0, 10.0);
        assert!(is_admissible(&Primitive::new(1.0, 0.0, 1.0, 1.0), &pr));
        assert!(!is_admissible(&Primitive::new(1.0, 0.0, 5.0, 5.0), &pr));
        assert!(!is_admissible(&Primitive::new(0.0, 0.0, 1.0, 1.0), &pr));
        assert!(!is_admissible(&Primitive::new(1.0, 0.0, 0.0, 1.0), &pr));
    }

    #[test]
    fn normal_stress_examples() {
        let pr = params(10.0, 1.0, 0.0, 6.0);
        assert_eq!(
            normal_stress(&Primitive::new(1.0, 0.0, 1.3, 1.3), &pr).unwrap(),
            0.0
        );
        let n = normal_stress(&Primitive::new(1.0, 0.0, 1.0, 2.0), &pr).unwrap();
        assert!((n - 2.0).abs() < 1e-15);
        // Large ell: N decreases monotonically towards G (szz - sxx).
        let mut last = f64::INFINITY;
        for ell in [6.0, 60.0, 600.0, 6e4] {
            let n = normal_stress(
                &Primitive::new(1.0, 0.0, 1.0, 2.0),
                &params(10.0, 1.0, 0.0, ell),
            )
            .unwrap();
            assert!(n < last && n > 1.0);
            last = n;
        }
        assert!((last - 1.0).abs() < 1e-4);
        assert!(normal_stress(&Primitive::new(1.0, 0.0, 3.0, 3.0), &pr).is_err());
    }

    #[test]
    fn total_pressure_examples() {
        let pr = params(10.0, 0.1, 0.0, 10.0);
        let p1 = total_pressure(&Primitive::new(1.0, 0.0, 1.0, 1.0), &pr).unwrap();
        let p2 = total_pressure(&Primitive::new(2.0, 0.0, 0.7, 0.7), &pr).unwrap();
        assert_eq!(p1, 5.0);
        assert_eq!(p2, 20.0);
        let p3 = total_pressure(
            &Primitive::new(1.0, 0.0, 1.0, 2.0),
            &params(10.0, 1.0, 0.0, 6.0),
        )
        .unwrap();
        assert!((p3 - 7.0).abs() < 1e-14);
    }

    #[test]
    fn dp_dh_examples() {
        let hydro = params(10.0, 0.0, 0.3, 10.0);
        let p = Primitive::new(0.37, 2.0, 3.0, 1.5);
        assert_eq!(dp_dh_frozen(&p, &hydro).unwrap(), 10.0 * 0.37);

        // Reference values from an arbitrary-precision derivative of P
        // along the frozen-invariant path.
        let v = dp_dh_frozen(
            &Primitive::new(1.0, 0.0, 1.0, 1.0),
            &params(10.0, 0.1, 0.0, 10.0),
        )
        .unwrap();
        assert!((v - 10.5).abs() < 1e-13);
        let v = dp_dh_frozen(
            &Primitive::new(0.7, 0.0, 2.0, 1.5),
            &params(10.0, 1.0, 0.5, 10.0),
        )
        .unwrap();
        assert!((v / 11.674556213017751 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn free_energy_examples() {
        let pr = params(10.0, 0.1, 0.0, 10.0);
        assert_eq!(
            free_energy(&Primitive::new(1.0, 0.0, 1.0, 1.0), &pr).unwrap(),
            5.0
        );
        assert_eq!(
            free_energy(&Primitive::new(1.0, 2.0, 1.0, 1.0), &pr).unwrap(),
            7.0
        );
        // Arbitrary-precision reference: 5.0321083372842640...
        let f = free_energy(&Primitive::new(1.0, 0.0, 2.0, 1.0), &pr).unwrap();
        assert!((f / 5.032108337284264 - 1.0).abs() < 1e-15);
        assert!(free_energy(&Primitive::new(1.0, 0.0, 6.0, 4.0), &pr).is_err());
    }

    #[test]
    fn internal_energy_identity() {
        let pr = params(9.81, 0.4, 0.2, 25.0);
        let base = Primitive::new(1.0, 0.0, 1.0, 1.0);
        assert_eq!(
            internal_energy(&base, &params(10.0, 0.1, 0.0, 10.0)).unwrap(),
            5.0
        );
        for (h, u) in [(0.3, -1.0), (2.0, 4.0), (1.1, 0.0)] {
            let p = Primitive::new(h, u, 3.0, 7.5);
            let e = internal_energy(&p, &pr).unwrap();
            let f = free_energy(&p, &pr).unwrap();
            assert!((h * (0.5 * u * u + e) - f).abs() <= 1e-14 * f.abs().max(1.0));
            let e0 = internal_energy(&Primitive { u: 0.0, ..p }, &pr).unwrap();
            assert_eq!(e, e0);
        }
    }

    #[test]
    fn dissipation_examples() {
        let pr = params(10.0, 0.1, 0.0, 10.0);
        let eq = equilibrium_sigma(&pr);
        assert!((eq - 5.0 / 6.0).abs() < 1e-16);
        let d_eq = dissipation_rate(&Primitive::new(1.3, 0.0, eq, eq), &pr).unwrap();
        assert!(d_eq.abs() < 1e-16);
        let no_elastic = params(10.0, 0.0, 0.0, 10.0);
        assert_eq!(
            dissipation_rate(&Primitive::new(1.0, 0.0, 1.0, 2.0), &no_elastic).unwrap(),
            0.0
        );
        // Arbitrary-precision reference value: exactly -1/16.
        let d = dissipation_rate(&Primitive::new(1.0, 0.0, 1.0, 1.0), &pr).unwrap();
        assert!((d + 0.0625).abs() < 1e-16);
    }

    #[test]
    fn equilibrium_limits() {
        assert!((equilibrium_sigma(&params(10.0, 0.1, 0.0, 1e12)) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn conserved_round_trip() {
        let p = Primitive::new(1e-8, -3.0, 0.25, 7.0);
        let back = p.to_conserved().to_primitive();
        assert!((back.u / p.u - 1.0).abs() < 1e-14);
        assert!((back.sxx / p.sxx - 1.0).abs() < 1e-14);
        assert!((back.szz / p.szz - 1.0).abs() < 1e-14);
    }
}
