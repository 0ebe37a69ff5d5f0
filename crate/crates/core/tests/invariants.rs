use nschb_core::config::{Mode, PhaseInit, SimConfig, TemperatureInit, VelocityInit};
use nschb_core::driver::run;
use nschb_core::initial::initial_state;
use nschb_core::io;
use proptest::prelude::*;

fn small(seed: u64, mean: f64, mode: Mode) -> SimConfig {
    let mut c = SimConfig::unit(12, 2e-3, 2e-2);
    c.mode = mode;
    c.initial.phi = Some(PhaseInit::Random {
        seed,
        modes: 3,
        amplitude: 0.8,
        mean,
    });
    c.initial.theta = Some(TemperatureInit::Random {
        seed: seed + 1,
        modes: 2,
        amplitude: 1.0,
    });
    c.initial.u = Some(VelocityInit::Random {
        seed: seed + 2,
        modes: 2,
        amplitude: 0.5,
    });
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coupled_runs_keep_mass_and_bounds(seed in 0u64..1000, mean in -0.1f64..0.1) {
        let cfg = small(seed, mean, Mode::Full);
        let (s, summary) = run(cfg).unwrap();
        prop_assert!(summary.invariants.mass_drift <= 1e-12);
        prop_assert!(summary.invariants.theta_max_excess <= 1e-12);
        prop_assert!(s.phi.max_abs() < 1.0);
        prop_assert!(summary.invariants.min_separation > 0.0);
    }

    #[test]
    fn decoupled_ch_energy_never_rises(seed in 0u64..1000) {
        let (_, summary) = run(small(seed, 0.0, Mode::DecoupledCh)).unwrap();
        prop_assert_eq!(summary.invariants.energy_violations, 0);
    }

    #[test]
    fn snapshots_round_trip_exactly(seed in 0u64..1000) {
        let s = initial_state(&small(seed, 0.05, Mode::Full)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        io::write_state(dir.path(), "x", &s).unwrap();
        let back = io::read_state(dir.path(), "x").unwrap();
        prop_assert_eq!(back.phi.values, s.phi.values);
        prop_assert_eq!(back.theta.values, s.theta.values);
        prop_assert_eq!(back.u.ux, s.u.ux);
        prop_assert_eq!(back.u.uy, s.u.uy);
    }
}

#[test]
fn identical_configs_give_identical_states() {
    let a = run(small(3, 0.0, Mode::Full)).unwrap().0;
    let b = run(small(3, 0.0, Mode::Full)).unwrap().0;
    assert_eq!(a.phi.values, b.phi.values);
    assert_eq!(a.u.ux, b.u.ux);
    assert_eq!(a.p.values, b.p.values);
}
