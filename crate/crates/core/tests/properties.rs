//! Property tests over the public API.

use std::f64::consts::{FRAC_PI_2, PI};

use nematic_core::angle::{line_diff, wrap_angle, wrap_line};
use nematic_core::gvm::{Gvm, GvmParams};
use nematic_core::hyperbolicity::{characteristic_discriminant, direct_discriminant};
use nematic_core::macro1d::{reaction_step, reversal_source, run, MacroState, SolverParams};
use nematic_core::numerics::{cubic_roots, integrate_adaptive, Interval};
use nematic_core::particles::{step, ParticleState, SimParams};
use proptest::prelude::*;

use nematic_core::coefficients::{coefficients_for, CoefficientSet};
use std::sync::OnceLock;

fn coeffs() -> CoefficientSet {
    static C: OnceLock<CoefficientSet> = OnceLock::new();
    *C.get_or_init(|| coefficients_for(2.0).unwrap())
}

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..2.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn angles_fold_into_their_ranges(t in -1e3..1e3f64) {
        let a = wrap_angle(t);
        prop_assert!((-PI..PI).contains(&a));
        prop_assert!(((a - t) / (2.0 * PI)).round() * 2.0 * PI - (a - t) < 1e-9);
        let l = wrap_line(t);
        prop_assert!((-FRAC_PI_2..FRAC_PI_2).contains(&l));
        prop_assert_eq!(wrap_line(l), l);
        prop_assert!(line_diff(t, t + PI).abs() < 1e-9);
    }

    #[test]
    fn gvm_halves_are_normalized(kappa in 0.2..30.0f64, theta0 in -PI..PI) {
        let m = Gvm::new(GvmParams::new(kappa, theta0).unwrap()).unwrap();
        let t0 = m.params().theta0();
        for start in [t0 - FRAC_PI_2, t0 + FRAC_PI_2] {
            let r = integrate_adaptive(|t| m.density(t), Interval::new(start, start + PI).unwrap(), 1e-12, 1e-15).unwrap();
            prop_assert!((r.value - 1.0).abs() < 1e-10, "{}", r.value);
        }
    }

    #[test]
    fn gvm_is_translation_covariant(kappa in 0.2..30.0f64, theta in -PI..PI, shift in -PI..PI) {
        let a = Gvm::new(GvmParams::new(kappa, 0.0).unwrap()).unwrap();
        let b = Gvm::new(GvmParams::new(kappa, shift).unwrap()).unwrap();
        let (x, y) = (a.density(theta), b.density(theta + shift));
        prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300), "{x} vs {y}");
    }

    #[test]
    fn discriminant_forms_agree(c in 0.0..1.0f64, x in 0.0..1.0f64, d2 in 0.05..1.0f64, mu in 0.01..1.0f64) {
        let a = characteristic_discriminant(c, x, d2, mu);
        let b = direct_discriminant(c, x, d2, mu);
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn cubic_roots_annihilate(r0 in -3.0..3.0f64, r1 in -3.0..3.0f64, r2 in -3.0..3.0f64) {
        // monic with prescribed real roots
        let (a2, a1, a0) = (-(r0 + r1 + r2), r0 * r1 + r1 * r2 + r0 * r2, -r0 * r1 * r2);
        let roots = cubic_roots(1.0, a2, a1, a0).unwrap();
        let mut want = [r0, r1, r2];
        want.sort_by(f64::total_cmp);
        for (z, w) in roots.iter().zip(want) {
            prop_assert!((z.re - w).abs() < 1e-4 && z.im.abs() < 1e-4, "{roots:?} vs {want:?}");
        }
    }

    #[test]
    fn reversal_source_is_antisymmetric(a in 0.0..5.0f64, b in 0.0..5.0f64, l0 in 0.0..2.0f64, l1 in 0.0..2.0f64) {
        let (sp, sm) = reversal_source(a, b, l0, l1);
        prop_assert_eq!(sp, -sm);
        let (tp, _) = reversal_source(b, a, l0, l1);
        prop_assert!((sp + tp).abs() <= 1e-12 * (1.0 + sp.abs()));
    }

    #[test]
    fn reaction_keeps_cell_density(rp in field(8), rm in field(8), l0 in 0.0..2.0f64, l1 in 0.0..2.0f64) {
        let mut p = SolverParams::new(coeffs(), 1.0);
        p.lambda0 = l0;
        p.lambda1 = l1;
        let s0 = MacroState::new(0.1, rp, rm, vec![0.0; 8]).unwrap();
        let mut s = s0.clone();
        for _ in 0..50 {
            s = reaction_step(&s, &p, 0.01);
        }
        for (a, b) in s0.rho().iter().zip(s.rho()) {
            prop_assert!((a - b).abs() <= 1e-14 * a.max(1.0));
        }
        prop_assert!(s.rho_plus.iter().chain(&s.rho_minus).all(|&v| v >= 0.0));
    }

    #[test]
    fn macro_run_conserves_mass_and_positivity(rp in field(32), rm in field(32), th in prop::collection::vec(-0.5..0.5f64, 32)) {
        let mut p = SolverParams::new(coeffs(), 1e9);
        p.k_nonlocal = 0.05;
        p.lambda0 = 0.5;
        p.lambda1 = 0.3;
        p.max_steps = Some(100);
        let s0 = MacroState::new(0.25, rp, rm, th).unwrap();
        let out = run(&s0, &p).unwrap();
        let s = out.final_state();
        prop_assert!((s.mass() - s0.mass()).abs() <= 1e-12 * s0.mass());
        prop_assert!(s.rho_plus.iter().chain(&s.rho_minus).all(|&v| v >= 0.0));
    }

    #[test]
    fn reflecting_the_angle_field_mirrors_the_solution(rp in field(24), rm in field(24), th in prop::collection::vec(-0.5..0.5f64, 24)) {
        let mut p = SolverParams::new(coeffs(), 0.5);
        p.k_nonlocal = 0.02;
        let a = run(&MacroState::new(0.2, rp.clone(), rm.clone(), th.clone()).unwrap(), &p).unwrap();
        let neg: Vec<f64> = th.iter().map(|t| -t).collect();
        let b = run(&MacroState::new(0.2, rp, rm, neg).unwrap(), &p).unwrap();
        let (sa, sb) = (a.final_state(), b.final_state());
        prop_assert_eq!(&sa.rho_plus, &sb.rho_plus);
        prop_assert_eq!(&sa.rho_minus, &sb.rho_minus);
        for (x, y) in sa.theta_bar.iter().zip(&sb.theta_bar) {
            prop_assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn particle_steps_stay_in_range_and_repeat(seed in any::<u64>(), n in 1usize..60) {
        let params = SimParams { n, radius: 0.2, v0: 0.5, dt: 0.02, seed, ..SimParams::default() };
        let mut rng = nematic_core::numerics::RngStream::new(seed);
        let s0 = ParticleState::homogeneous(&params, GvmParams::new(1.0, 0.3).unwrap(), 0.5, &mut rng);
        let a = step(&step(&s0, &params), &params);
        let b = step(&step(&s0, &params), &params);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.positions.iter().flatten().all(|&x| (0.0..params.box_length).contains(&x)));
        prop_assert!(a.angles.iter().all(|&t| (-PI..PI).contains(&t)));
        prop_assert_eq!(a.steps, 2);
    }

    #[test]
    fn particle_dynamics_commute_with_translation(seed in any::<u64>(), dx in 0.0..1.0f64, dy in 0.0..1.0f64) {
        let params = SimParams { n: 40, radius: 0.2, v0: 0.5, dt: 0.02, seed, ..SimParams::default() };
        let mut rng = nematic_core::numerics::RngStream::new(seed);
        let s0 = ParticleState::homogeneous(&params, GvmParams::new(1.0, 0.0).unwrap(), 0.5, &mut rng);
        let moved = ParticleState::new(
            s0.positions.iter().map(|[x, y]| [x + dx, y + dy]).collect(),
            s0.angles.clone(),
            params.box_length,
        )
        .unwrap();
        let (a, b) = (step(&s0, &params), step(&moved, &params));
        for (pa, pb) in a.positions.iter().zip(&b.positions) {
            for k in 0..2 {
                let d = (pb[k] - pa[k] - [dx, dy][k]).rem_euclid(1.0);
                prop_assert!(d.min(1.0 - d) < 1e-9);
            }
        }
        for (x, y) in a.angles.iter().zip(&b.angles) {
            prop_assert!(wrap_angle(x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}
