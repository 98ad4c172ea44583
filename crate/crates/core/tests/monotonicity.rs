use spinfactor::divergence::{bregman, shifted_generator};
use spinfactor::monotonicity::{
    dilation_criterion, dilation_violation_search, empirical_monotonicity, equality_set_probe,
    replay_trial, ChannelFamily, SearchGrid, EQUALITY_TOL, MONOTONE_TOL,
};
use spinfactor::{Channel, Generator, State};

#[test]
fn criterion_implies_no_grid_violation() {
    let grid = SearchGrid {
        points: 1000,
        factors: 9,
        ..Default::default()
    };
    for f in [
        Generator::Shannon,
        Generator::Quadratic,
        Generator::ELambda { lambda: 1.0 },
        Generator::Tsallis { alpha: 1.5 },
        Generator::Tsallis { alpha: 4.0 },
        Generator::Tsallis { alpha: 6.0 },
    ] {
        assert!(dilation_criterion(&f, 4001).holds, "{f}");
        assert_eq!(dilation_violation_search(&f, &grid), None, "{f}");
    }
}

#[test]
fn failing_criterion_has_witness() {
    let grid = SearchGrid::default();
    for alpha in [2.5, 7.0] {
        let f = Generator::Tsallis { alpha };
        assert!(!dilation_criterion(&f, 4001).holds);
        let w = dilation_violation_search(&f, &grid).expect("witness");
        assert!(w.excess > MONOTONE_TOL, "alpha {alpha}");
    }
}

#[test]
fn interval_witness_lifts_to_higher_dimensions() {
    let f = Generator::Tsallis { alpha: 2.5 };
    let w = dilation_violation_search(&f, &SearchGrid::default()).unwrap();
    for d in [2, 3, 5] {
        let lift = |t: f64| {
            let mut v = vec![0.0; d];
            v[0] = t - 0.5;
            State::from_bloch(v).unwrap()
        };
        let (x, y, z) = (lift(w.x), lift(w.y), lift(w.endpoint));
        let phi = Channel::dilation(&z, w.r).unwrap();
        let before = bregman(&f, &x, &y).unwrap();
        let after = bregman(&f, &phi.apply_state(&x).unwrap(), &phi.apply_state(&y).unwrap()).unwrap();
        assert!((after - before - w.excess).abs() <= 1e-9, "d = {d}");
    }
}

#[test]
fn violation_status_matches_across_dimensions() {
    for f in [Generator::Shannon, Generator::Tsallis { alpha: 2.5 }, Generator::Tsallis { alpha: 7.0 }] {
        let status: Vec<bool> = [2, 3, 5]
            .iter()
            .map(|&d| {
                !empirical_monotonicity(&f, d, 10_000, 9, MONOTONE_TOL, ChannelFamily::General)
                    .unwrap()
                    .violations
                    .is_empty()
            })
            .collect();
        assert!(status.iter().all(|&s| s == status[0]), "{f}: {status:?}");
    }
}

#[test]
fn shifted_generators_stay_monotone() {
    for f in [Generator::Shannon, Generator::Quadratic, Generator::ELambda { lambda: 1.0 }] {
        assert!(empirical_monotonicity(&f, 3, 2000, 4, MONOTONE_TOL, ChannelFamily::General)
            .unwrap()
            .violations
            .is_empty());
        for r in [0.25, 0.5, 0.9] {
            let g = shifted_generator(&f, r).unwrap();
            for family in [ChannelFamily::General, ChannelFamily::Dilations] {
                let rep = empirical_monotonicity(&g, 3, 2000, 4, MONOTONE_TOL, family).unwrap();
                assert!(rep.violations.is_empty(), "{g}: {:?}", rep.violations.first());
            }
        }
    }
}

#[test]
fn violations_replay_exactly() {
    let f = Generator::Tsallis { alpha: 2.5 };
    let rep = empirical_monotonicity(&f, 1, 3000, 17, MONOTONE_TOL, ChannelFamily::Dilations).unwrap();
    assert!(!rep.violations.is_empty());
    for v in &rep.violations {
        let t = replay_trial(&f, 1, 17, v.trial, ChannelFamily::Dilations).unwrap();
        assert_eq!(t.channel, v.channel);
        assert_eq!(t.rho, v.rho);
        assert_eq!(t.sigma, v.sigma);
        assert_eq!(t.d_after.to_bits(), v.d_after.to_bits());
        assert_eq!(t.d_before.to_bits(), v.d_before.to_bits());
    }
    let again = empirical_monotonicity(&f, 1, 3000, 17, MONOTONE_TOL, ChannelFamily::Dilations).unwrap();
    assert_eq!(rep, again);
}

#[test]
fn report_serializes() {
    let f = Generator::Tsallis { alpha: 2.5 };
    let rep = empirical_monotonicity(&f, 1, 1000, 2, MONOTONE_TOL, ChannelFamily::Dilations).unwrap();
    let text = serde_json::to_string(&rep).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["generator"]["name"], "tsallis");
    assert_eq!(v["violations"].as_array().unwrap().len(), rep.violations.len());
}

#[test]
fn equality_set_for_isometries_and_contractions() {
    let sigma = State::from_bloch(vec![0.2, -0.1]).unwrap();
    let refl = Channel::axis_reflection(2, 0).unwrap();
    let rep = equality_set_probe(&Generator::Shannon, &refl, &sigma, 100, 3, EQUALITY_TOL).unwrap();
    assert_eq!(rep.equality_states.len(), rep.probes);
    assert_eq!(rep.midpoint_failures, 0);
    assert!(rep.recovery_max_error.unwrap() <= 1e-8);

    // A conditional expectation keeps pairs inside its image.
    let sigma = State::from_bloch(vec![0.2, 0.0]).unwrap();
    let e = Channel::coordinate_projection(2, &[0]).unwrap();
    let rep = equality_set_probe(&Generator::Shannon, &e, &sigma, 200, 3, EQUALITY_TOL).unwrap();
    assert!(rep.includes_sigma);
    for rho in &rep.equality_states {
        assert!(rho.bloch()[1].abs() < 1e-3, "{:?}", rho.bloch());
    }
    assert!(rep.recovery_max_error.unwrap() <= 1e-6);
}
