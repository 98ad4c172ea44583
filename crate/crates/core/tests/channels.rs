use nalgebra::DVector;
use rand::Rng;
use spinfactor::channels::petz_recovery;
use spinfactor::sampling::{
    random_channel, random_channel_with_radius, random_direction, random_interior_state,
    random_orthogonal, random_state, trial_rng,
};
use spinfactor::spin::trace_inner;
use spinfactor::{Channel, SpinElement, State};

/// Brute-force lower bound on `max ‖A u + c‖` over the unit sphere.
fn sampled_max_norm<R: Rng>(rng: &mut R, phi: &Channel, samples: usize) -> f64 {
    let d = phi.dim();
    (0..samples)
        .map(|_| {
            let u = DVector::from_vec(random_direction(rng, d));
            (phi.linear() * u + phi.offset()).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn validity_certificate_dominates_sampling() {
    let mut rng = trial_rng(21, 0);
    for _ in 0..200 {
        let d = rng.random_range(1..=4);
        let phi = random_channel(&mut rng, d);
        let cert = phi.validity();
        let sampled = sampled_max_norm(&mut rng, &phi, 2000);
        assert!(cert.max_norm >= sampled - 1e-12);
        // The maximizer attains the certificate value.
        let u = DVector::from_vec(cert.maximizer.clone());
        assert!(((phi.linear() * u + phi.offset()).norm() - cert.max_norm).abs() < 1e-12);
        assert!(cert.valid);
    }
}

#[test]
fn composition_of_valid_channels_is_valid() {
    let mut rng = trial_rng(22, 0);
    for _ in 0..300 {
        let d = rng.random_range(1..=5);
        let a = random_channel(&mut rng, d);
        let b = random_channel(&mut rng, d);
        assert!(a.compose(&b).unwrap().is_valid());
    }
}

#[test]
fn adjoint_pairing() {
    let mut rng = trial_rng(23, 0);
    for d in 1..=5 {
        let mut channels = vec![
            random_channel(&mut rng, d),
            Channel::orthogonal(random_orthogonal(&mut rng, d)).unwrap(),
            Channel::dilation(&random_state(&mut rng, d), 0.3).unwrap(),
            Channel::constant(&random_state(&mut rng, d)),
            Channel::central_inversion(d),
        ];
        if d >= 2 {
            channels.push(Channel::coordinate_projection(d, &[0]).unwrap());
        }
        for phi in channels {
            for _ in 0..20 {
                let x = random_state(&mut rng, d).into_element();
                let w = SpinElement::new(spinfactor::sampling::gaussian_vector(&mut rng, d), rng.random()).unwrap();
                let lhs = trace_inner(&phi.apply(&x).unwrap(), &w).unwrap();
                let rhs = trace_inner(&x, &phi.adjoint().apply(&w).unwrap()).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }
    }
}

#[test]
fn retraction_commutes_with_channel() {
    let mut rng = trial_rng(24, 0);
    let mut cases = vec![
        Channel::planar_rotation(3, 0, 1, 0.7).unwrap(),
        Channel::axis_reflection(4, 1).unwrap(),
        Channel::central_inversion(2),
    ];
    for d in 1..=4 {
        cases.push(random_channel_with_radius(&mut rng, d, 0.9));
        let z = random_state(&mut rng, d);
        cases.push(Channel::dilation(&z, 0.5).unwrap());
    }
    for phi in cases {
        let p = phi.fixpoint_retraction().unwrap();
        assert!(p.idempotence_residual() <= 1e-8);
        for _ in 0..20 {
            let x = random_state(&mut rng, phi.dim());
            let a = p.apply_state(&phi.apply_state(&x).unwrap()).unwrap();
            let b = phi.apply_state(&p.apply_state(&x).unwrap()).unwrap();
            assert!(a.element().max_abs_diff(b.element()) <= 1e-8);
            // Images of the retraction are fixed points of the channel.
            let y = p.apply_state(&x).unwrap();
            assert!(phi.apply_state(&y).unwrap().element().max_abs_diff(y.element()) <= 1e-8);
        }
    }
}

#[test]
fn poissonization_converges() {
    let phi = Channel::planar_rotation(2, 0, 1, 1.0).unwrap();
    let p = phi.fixpoint_retraction().unwrap();
    let mut prev = f64::INFINITY;
    for mu in [1.0, 10.0, 50.0, 200.0] {
        let diff = phi.poissonize(mu).unwrap().max_abs_diff(&p);
        assert!(diff < prev);
        prev = diff;
    }
    assert!(prev < 1e-6);
    assert_eq!(phi.poissonize(0.0).unwrap().max_abs_diff(&Channel::identity(2)), 0.0);
    assert!(phi.poissonize(-1.0).is_err());
}

#[test]
fn petz_fixes_anchor() {
    let mut rng = trial_rng(25, 0);
    for _ in 0..1000 {
        let d = rng.random_range(1..=5);
        let phi = random_channel(&mut rng, d);
        let sigma = random_interior_state(&mut rng, d, 0.02);
        let psi = petz_recovery(&phi, &sigma).unwrap();
        assert!(psi.round_trip(&sigma).unwrap().max_abs_diff(sigma.element()) <= 1e-9);
    }
}

#[test]
fn petz_output_is_a_state() {
    let mut rng = trial_rng(26, 0);
    for _ in 0..500 {
        let d = rng.random_range(1..=4);
        let phi = random_channel(&mut rng, d);
        let sigma = random_interior_state(&mut rng, d, 0.05);
        let psi = petz_recovery(&phi, &sigma).unwrap();
        // Ψ maps the image of a state back to a positive element.
        let rho = random_state(&mut rng, d);
        let out = psi.round_trip(&rho).unwrap();
        assert!(out.is_positive(1e-9));
    }
}

#[test]
fn sufficient_channels_fix_the_pair() {
    // Conditional expectation onto the first k coordinates fixes every pair
    // supported there, so the recovery map undoes it on that pair.
    let mut rng = trial_rng(27, 0);
    for _ in 0..200 {
        let d = rng.random_range(2..=5);
        let k = rng.random_range(1..d);
        let keep: Vec<usize> = (0..k).collect();
        let e = Channel::coordinate_projection(d, &keep).unwrap();
        let embed = |s: State| {
            let mut v = vec![0.0; d];
            v[..k].copy_from_slice(s.bloch());
            State::from_bloch(v).unwrap()
        };
        let rho = embed(random_state(&mut rng, k));
        let sigma = embed(random_interior_state(&mut rng, k, 0.05));
        let psi = petz_recovery(&e, &sigma).unwrap();
        assert!(psi.round_trip(&rho).unwrap().max_abs_diff(rho.element()) <= 1e-9);
        assert!(psi.round_trip(&sigma).unwrap().max_abs_diff(sigma.element()) <= 1e-9);
    }
}

#[test]
fn singular_image_has_no_recovery() {
    let pure = State::basis_pure(3, 0).unwrap();
    let phi = Channel::constant(&pure);
    assert!(petz_recovery(&phi, &State::center(3)).is_err());
}
