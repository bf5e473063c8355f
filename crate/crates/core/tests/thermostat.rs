//! Thermostat properties: friction bound, integral-controller response,
//! overdamped limit and determinism.

use fanos_core::optim::{
    fanos_step, target_temperature, FanosConfig, FanosState, FrictionMode, MassMode, ScheduleMode,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gradient stream with magnitudes spanning many decades and random signs.
fn adversarial_gradient(rng: &mut ChaCha8Rng, d: usize, max_exp: i32) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let e = rng.random_range(-max_exp..=max_exp);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * rng.random::<f64>() * 10f64.powi(e)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn friction_stays_within_clip(
        seed in any::<u64>(),
        d in 1usize..6,
        lr in 1e-4f64..0.1,
        q in 1e-3f64..10.0,
        zeta_max in 0.1f64..20.0,
        clip in prop::option::of(0.1f64..10.0),
        identity in any::<bool>(),
    ) {
        let cfg = FanosConfig {
            lr,
            q,
            zeta_max,
            grad_clip: clip,
            mass_mode: if identity { MassMode::Identity } else { MassMode::Rms },
            ..FanosConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = FanosState::new(vec![0.0; d], &cfg);
        for _ in 0..100_000 {
            let g = adversarial_gradient(&mut rng, d, 6);
            fanos_step(&mut state, &g, &cfg).unwrap();
            prop_assert!(state.zeta.abs() <= zeta_max, "zeta {} at k {}", state.zeta, state.k);
            prop_assert!(state.s.iter().all(|s| *s >= 0.0));
        }
    }

    #[test]
    fn identical_inputs_give_identical_trajectories(seed in any::<u64>(), d in 1usize..8) {
        let cfg = FanosConfig { lr: 1e-2, ..FanosConfig::default() };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = FanosState::new(vec![0.5; d], &cfg);
            let mut samples = Vec::new();
            for _ in 0..500 {
                let g = adversarial_gradient(&mut rng, d, 3);
                samples.push(fanos_step(&mut state, &g, &cfg).unwrap());
            }
            (state, samples)
        };
        let (a, sa) = run();
        let (b, sb) = run();
        prop_assert_eq!(a.theta.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                        b.theta.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.zeta.to_bits(), b.zeta.to_bits());
        prop_assert_eq!(sa, sb);
    }
}

/// Holds the velocity at `v_star` (identity mass, `ρ_T = 0`) so that the
/// temperature estimate is the constant `v_star²`, and records ζ.
fn held_velocity_run(
    v_star: f64,
    t_target: f64,
    steps: usize,
) -> (FanosConfig, Vec<(f64, f64, f64)>) {
    let cfg = FanosConfig {
        lr: 0.05,
        q: 0.5,
        t_max: t_target,
        rho_t: 0.0,
        zeta_max: 2.0,
        grad_clip: None,
        mass_mode: MassMode::Identity,
        schedule_mode: ScheduleMode::Constant,
        ..FanosConfig::default()
    };
    let mut state = FanosState::new(vec![0.0], &cfg);
    let mut out = Vec::new();
    for _ in 0..steps {
        state.v[0] = v_star;
        // g = -ζ v* cancels the damping, so v_new = v* up to rounding
        let g = -state.zeta * v_star;
        let before = state.zeta;
        let sample = fanos_step(&mut state, &[g], &cfg).unwrap();
        out.push((before, sample.zeta, sample.t_ema));
    }
    (cfg, out)
}

#[test]
fn friction_integrates_excess_temperature_until_clipped() {
    let t0 = 1e-3;
    let (cfg, trace) = held_velocity_run(0.2, t0, 400);
    let gain = cfg.lr / cfg.q;
    let mut clipped_at = None;
    for (k, &(before, after, t_ema)) in trace.iter().enumerate() {
        assert!(
            (t_ema - 0.04).abs() <= 1e-12,
            "temperature drifted to {t_ema}"
        );
        let unclipped = before + gain * (t_ema - t0);
        if unclipped < cfg.zeta_max {
            assert!(
                (after - unclipped).abs() <= 1e-15 * unclipped.abs().max(1.0),
                "step {k}"
            );
            assert!(after > before);
        } else {
            assert_eq!(after, cfg.zeta_max);
            clipped_at.get_or_insert(k);
        }
    }
    // 0.05 / 0.5 * 0.039 per step reaches 2 after about 513 steps
    assert!(clipped_at.is_none());

    let (_, trace) = held_velocity_run(0.2, t0, 700);
    let k = trace
        .iter()
        .position(|t| t.1 == 2.0)
        .expect("clip never bound");
    assert!((510..=516).contains(&k), "bound at {k}");
    assert!(trace[k..].iter().all(|t| t.1 == 2.0));
}

#[test]
fn friction_falls_when_too_cold() {
    let (cfg, trace) = held_velocity_run(0.01, 1e-3, 25_000);
    let gain = cfg.lr / cfg.q;
    for &(before, after, t_ema) in &trace {
        assert!(t_ema < 1e-3);
        if after > -cfg.zeta_max {
            assert!(after < before);
            let expected = before + gain * (t_ema - 1e-3);
            assert!((after - expected).abs() <= 1e-15 * expected.abs().max(1.0));
        }
    }
    assert_eq!(trace.last().unwrap().1, -cfg.zeta_max);
}

#[test]
fn overdamped_velocity_reaches_terminal_value() {
    let h = 0.01;
    let zeta0 = 0.5 / h;
    let cfg = FanosConfig {
        lr: h,
        zeta_max: 100.0,
        grad_clip: None,
        mass_mode: MassMode::Identity,
        friction_mode: FrictionMode::Fixed(zeta0),
        ..FanosConfig::default()
    };
    let g = [3.0, -1.5, 0.25, 40.0];
    let mut state = FanosState::new(vec![0.0; 4], &cfg);
    // contraction factor 1 - hζ₀ = 0.5 per step
    for _ in 0..60 {
        fanos_step(&mut state, &g, &cfg).unwrap();
        assert_eq!(state.zeta, zeta0);
    }
    let terminal: Vec<f64> = g.iter().map(|gi| -gi / zeta0).collect();
    let err: f64 = state
        .v
        .iter()
        .zip(&terminal)
        .map(|(v, t)| (v - t).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = terminal.iter().map(|t| t * t).sum::<f64>().sqrt();
    assert!(err <= 1e-6 * scale, "err {err} scale {scale}");
}

#[test]
fn schedule_values() {
    let cfg = FanosConfig::default();
    assert_eq!(target_temperature(0, &cfg), 1e-3);
    assert!((target_temperature(20_000, &cfg) - 1e-3 * (-1f64).exp()).abs() < 1e-18);
    assert!(target_temperature(10_000_000, &cfg) < 1e-200);
    let mut prev = f64::INFINITY;
    for k in (0..100_000).step_by(997) {
        let t = target_temperature(k, &cfg);
        assert!(t <= prev);
        prev = t;
    }
    let constant = FanosConfig {
        schedule_mode: ScheduleMode::Constant,
        ..cfg
    };
    assert_eq!(target_temperature(123_456, &constant), 1e-3);
}
