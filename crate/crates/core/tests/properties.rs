use fenep_core::model::{
    dissipation_rate, dp_dh_frozen, equilibrium_sigma, free_energy, internal_energy, is_admissible,
    normal_stress, physical_flux,
};
use fenep_core::oracles::{
    fd_dp_dh, gradient_identity_error, newton_source_2x2, rh_residuals, source_mismatch,
};
use fenep_core::relax_riemann::{interface_fluxes_with, FluxBase};
use fenep_core::timeloop::relax_conformation;
use fenep_core::{interface_fluxes, Conserved, PhysParams, Primitive, RiemannOptions};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = PhysParams> {
    (
        prop::sample::select(vec![0.1, 1.0]),
        prop::sample::select(vec![0.0, 0.25, 0.5]),
        prop::sample::select(vec![3.0, 10.0, 100.0, 1e4]),
    )
        .prop_map(|(g_mod, zeta, ell)| PhysParams::new(10.0, g_mod, 0.1, zeta, ell).unwrap())
}

fn state(ell: f64) -> impl Strategy<Value = Primitive> {
    (-2.0..2.0f64, -10.0..10.0f64, 0.01..0.95f64, 0.05..0.95f64).prop_map(move |(e, u, s, r)| {
        let s = s * ell;
        Primitive::new(10f64.powf(e), u, r * s, (1.0 - r) * s)
    })
}

fn with_state() -> impl Strategy<Value = (PhysParams, Primitive)> {
    params().prop_flat_map(|p| (Just(p), state(p.extensibility)))
}

fn with_pair() -> impl Strategy<Value = (PhysParams, Primitive, Primitive)> {
    params().prop_flat_map(|p| (Just(p), state(p.extensibility), state(p.extensibility)))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sampled_states_are_admissible((p, s) in with_state()) {
        prop_assert!(is_admissible(&s, &p));
    }

    #[test]
    fn conserved_round_trip((_p, s) in with_state()) {
        let back = s.to_conserved().to_primitive();
        prop_assert!(rel(back.h, s.h) < 1e-15);
        prop_assert!((back.u - s.u).abs() <= 1e-15 * s.u.abs().max(1e-300));
        prop_assert!(rel(back.sxx, s.sxx) < 1e-15 && rel(back.szz, s.szz) < 1e-15);
    }

    #[test]
    fn dissipation_is_nonpositive((p, s) in with_state()) {
        prop_assert!(dissipation_rate(&s, &p).unwrap() <= 0.0);
    }

    #[test]
    fn normal_stress_sign_follows_anisotropy((p, s) in with_state()) {
        let n = normal_stress(&s, &p).unwrap();
        let sign = (s.szz - s.sxx).signum();
        if s.szz != s.sxx {
            prop_assert_eq!(n.signum(), sign);
        }
    }

    #[test]
    fn pressure_derivative_matches_finite_differences((p, s) in with_state()) {
        let a = dp_dh_frozen(&s, &p).unwrap();
        prop_assert!(a > 0.0);
        if let Ok(fd) = fd_dp_dh(&s, &p, 1e-6) {
            prop_assert!(rel(a, fd) <= 1e-6, "analytic {} fd {}", a, fd);
        }
    }

    #[test]
    fn internal_energy_is_consistent((p, s) in with_state()) {
        let f = free_energy(&s, &p).unwrap();
        let e = internal_energy(&s, &p).unwrap();
        let expect = f / s.h - 0.5 * s.u * s.u;
        prop_assert!((e - expect).abs() <= 1e-12 * (f / s.h).abs().max(e.abs()).max(1.0));
    }

    #[test]
    fn midpoint_convexity((p, a, b) in with_pair()) {
        let (qa, qb) = (a.to_conserved(), b.to_conserved());
        let mid = 0.5 * (qa + qb);
        let f = |q: &Conserved| free_energy(&q.to_primitive(), &p).unwrap();
        let (fa, fb, fm) = (f(&qa), f(&qb), f(&mid));
        prop_assert!(fm <= 0.5 * (fa + fb) + 1e-12 * (fa.abs() + fb.abs()));
    }

    #[test]
    fn gradient_identity((p, s) in with_state()) {
        prop_assert!(gradient_identity_error(&s, &p).unwrap() <= 1e-10);
    }

    #[test]
    fn source_step_matches_newton_and_dissipates((p, s) in with_state(), e in -4.0..1.0f64) {
        let dt = 10f64.powf(e);
        let ours = relax_conformation(s.sxx, s.szz, dt, &p).unwrap();
        let oracle = newton_source_2x2(s.sxx, s.szz, dt, &p).unwrap();
        prop_assert!(source_mismatch(ours, oracle) <= 1e-10);
        let after = Primitive::new(s.h, s.u, ours.0, ours.1);
        prop_assert!(is_admissible(&after, &p));
        let (f0, f1) = (free_energy(&s, &p).unwrap(), free_energy(&after, &p).unwrap());
        prop_assert!(f1 <= f0 + 8.0 * f64::EPSILON * (f0.abs() + f1.abs()));
    }

    #[test]
    fn source_step_infinite_time_limit((p, s) in with_state()) {
        let eq = equilibrium_sigma(&p);
        let (x, z) = relax_conformation(s.sxx, s.szz, f64::INFINITY, &p).unwrap();
        prop_assert!((x - eq).abs() <= 1e-10 && (z - eq).abs() <= 1e-10);
        let (x, z) = relax_conformation(s.sxx, s.szz, 1e15 * p.relaxation_time, &p).unwrap();
        prop_assert!((x - eq).abs() <= 1e-10 && (z - eq).abs() <= 1e-10);
    }

    #[test]
    fn riemann_fan_properties((p, a, b) in with_pair()) {
        let (ql, qr) = (a.to_conserved(), b.to_conserved());
        let (fluxes, fan) = interface_fluxes(&ql, &qr, &p).unwrap();
        prop_assert!(fan.speeds[0] <= fan.speeds[1] && fan.speeds[1] <= fan.speeds[2]);
        for q in &fan.projected {
            prop_assert!(is_admissible(&q.to_primitive(), &p), "{:?}", q);
        }
        prop_assert!(rh_residuals(&fan).max_scaled <= 1e-10);
        let pi_l = fan.states[1].pi();
        let pi_r = fan.states[2].pi();
        prop_assert!((pi_l - pi_r).abs() <= 1e-10 * pi_l.abs().max(pi_r.abs()).max(1.0));

        let f_phys = [physical_flux(&ql, &p).unwrap(), physical_flux(&qr, &p).unwrap()];
        let scale = |j: usize| {
            let s = fan.max_abs_speed();
            f_phys.iter().map(|f| f.to_array()[j].abs()).fold(0.0, f64::max)
                .max(s * ql.to_array()[j].abs())
                .max(s * qr.to_array()[j].abs())
        };
        let (fl, fr) = (fluxes.f_left.to_array(), fluxes.f_right.to_array());
        for j in 0..2 {
            prop_assert!((fl[j] - fr[j]).abs() <= 1e-12 * scale(j), "component {}", j);
        }
    }

    #[test]
    fn riemann_mirror_symmetry((p, a, b) in with_pair()) {
        let (ql, qr) = (a.to_conserved(), b.to_conserved());
        let (f, fan) = interface_fluxes(&ql, &qr, &p).unwrap();
        let (g, mfan) = interface_fluxes(&qr.mirrored(), &ql.mirrored(), &p).unwrap();
        prop_assert_eq!(fan.speeds[0].to_bits(), (-mfan.speeds[2]).to_bits());
        prop_assert_eq!(fan.speeds[1].to_bits(), (-mfan.speeds[1]).to_bits());
        // F_l of the mirrored problem is the mirrored F_r: hu-flux even, others odd.
        let fr = f.f_right.to_array();
        let gl = g.f_left.to_array();
        prop_assert_eq!(fr[0].to_bits(), (-gl[0]).to_bits());
        prop_assert_eq!(fr[1].to_bits(), gl[1].to_bits());
        prop_assert_eq!(fr[2].to_bits(), (-gl[2]).to_bits());
        prop_assert_eq!(fr[3].to_bits(), (-gl[3]).to_bits());
    }

    #[test]
    fn flux_base_does_not_change_updates((p, a, b, c) in params().prop_flat_map(|p| (
        Just(p), state(p.extensibility), state(p.extensibility), state(p.extensibility)))) {
        let q = [a.to_conserved(), b.to_conserved(), c.to_conserved()];
        let update = |base: FluxBase| {
            let opts = RiemannOptions { flux_base: base, ..Default::default() };
            let (left, _) = interface_fluxes_with(&q[0], &q[1], &p, &opts).unwrap();
            let (right, _) = interface_fluxes_with(&q[1], &q[2], &p, &opts).unwrap();
            (right.f_left - left.f_right).to_array()
        };
        let (exact, zero) = (update(FluxBase::Exact), update(FluxBase::Zero));
        let f_mid = physical_flux(&q[1], &p).unwrap().to_array();
        for j in 0..4 {
            let scale = exact[j].abs().max(f_mid[j].abs()).max(f64::MIN_POSITIVE);
            prop_assert!((exact[j] - zero[j]).abs() <= 1e-13 * scale,
                "component {}: {} vs {}", j, exact[j], zero[j]);
        }
    }
}
