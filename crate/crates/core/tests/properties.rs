use geophase::dynamics::{evolve_bloch, evolve_state};
use geophase::{ControlPoint, DeviceParams, IntegratorConfig, Schedule, SpinState};
use proptest::prelude::*;

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    (1.0f64..15.0, prop::collection::vec((-0.5f64..0.5, 0.0f64..1.0), 2..7)).prop_map(|(tau, knots)| {
        let n = knots.len() - 1;
        let rows = knots
            .into_iter()
            .enumerate()
            .map(|(k, (flux, nx))| (tau * k as f64 / n as f64, ControlPoint::new(flux, nx)))
            .collect();
        Schedule::from_samples(rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn schrodinger_and_bloch_pictures_agree(
        sched in schedule_strategy(),
        theta in 0.0f64..std::f64::consts::PI,
        varphi in 0.0f64..std::f64::consts::TAU,
    ) {
        let p = DeviceParams::reference();
        let cfg = IntegratorConfig::default().with_samples(257);
        let psi0 = SpinState::from_angles(theta, varphi);
        let s = evolve_state(&p, &sched, psi0, &cfg).unwrap();
        let b = evolve_bloch(&p, &sched, psi0.bloch(), &cfg).unwrap();
        for (x, y) in s.bloch.iter().zip(&b.bloch) {
            prop_assert!(x.distance(y) < 1e-6);
        }
    }

    #[test]
    fn evolution_is_norm_preserving_and_reversible(
        sched in schedule_strategy(),
        theta in 0.0f64..std::f64::consts::PI,
    ) {
        let p = DeviceParams::reference();
        let drive = geophase::ScheduledDrive::new(&p, &sched);
        let cfg = IntegratorConfig::default().with_tolerances(1e-11, 1e-13);
        let psi0 = SpinState::from_angles(theta, 0.2);
        let fwd = geophase::dynamics::propagate(&drive, psi0, 0.0, sched.duration(), &cfg).unwrap();
        prop_assert!((fwd.norm() - 1.0).abs() < 1e-8);
        let back = geophase::dynamics::propagate(&drive, fwd, sched.duration(), 0.0, &cfg).unwrap();
        prop_assert!((back.amp0 - psi0.amp0).norm() + (back.amp1 - psi0.amp1).norm() < 1e-7);
    }
}
