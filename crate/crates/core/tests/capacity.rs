use std::f64::consts::{LN_2, PI};

use rand::Rng;
use spinfactor::capacity::{
    bregman_project, capacity_closed_form, capacity_finite, minimax_inequalities_check, CAPACITY_MAX_ITER,
    CAPACITY_TOL,
};
use spinfactor::divergence::{bregman, builtin_generators};
use spinfactor::sampling::{random_interior_state, random_orthogonal, random_pure, random_state, trial_rng};
use spinfactor::{Channel, Generator, State};

fn st(v: &[f64]) -> State {
    State::from_bloch(v.to_vec()).unwrap()
}

/// Regular `n`-gon of pure states in the plane of the first two axes.
fn polygon(n: usize, d: usize, phase: f64) -> Vec<State> {
    (0..n)
        .map(|k| {
            let t = phase + 2.0 * PI * k as f64 / n as f64;
            let mut v = vec![0.0; d];
            v[0] = 0.5 * t.cos();
            v[1] = 0.5 * t.sin();
            st(&v)
        })
        .collect()
}

#[test]
fn symmetric_pure_sets_reach_closed_form() {
    for f in builtin_generators() {
        for d in [2, 3] {
            let closed = capacity_closed_form(&f, d).unwrap();
            let mut sets: Vec<Vec<State>> = (2..=6).map(|n| polygon(n, d, 0.3)).collect();
            if d == 3 {
                // Octahedron.
                let mut oct = Vec::new();
                for k in 0..3 {
                    for s in [0.5, -0.5] {
                        let mut v = vec![0.0; 3];
                        v[k] = s;
                        oct.push(st(&v));
                    }
                }
                sets.push(oct);
            }
            for states in sets {
                let r = capacity_finite(&f, &states, CAPACITY_TOL, CAPACITY_MAX_ITER).unwrap();
                assert!(r.converged);
                assert!((r.value - closed.value).abs() <= 1e-7, "{f}: {} vs {}", r.value, closed.value);
                assert!(r.optimizer.radius() <= 1e-5);
            }
        }
    }
}

#[test]
fn skewed_start_still_reaches_center() {
    // Non-uniform multiplicities make the uniform start off-center.
    let f = Generator::Shannon;
    let states = vec![st(&[0.5, 0.0]), st(&[0.5, 0.0]), st(&[0.5, 0.0]), st(&[-0.5, 0.0])];
    let r = capacity_finite(&f, &states, 1e-10, CAPACITY_MAX_ITER).unwrap();
    assert!(r.converged);
    assert!((r.value - LN_2).abs() <= 1e-10);
    assert!(r.optimizer.radius() <= 1e-5);
    assert!((r.weights[3] - 0.5).abs() <= 1e-5);
}

#[test]
fn weights_and_optimizer_are_consistent() {
    let mut rng = trial_rng(41, 0);
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(2..=7);
        let states: Vec<State> = (0..n).map(|_| random_state(&mut rng, d)).collect();
        let f = Generator::Shannon;
        let r = capacity_finite(&f, &states, CAPACITY_TOL, CAPACITY_MAX_ITER).unwrap();
        assert!(r.converged, "d={d} gap={}", r.gap);
        assert!(r.gap >= 0.0 && r.gap <= CAPACITY_TOL);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(r.weights.iter().all(|&w| w >= 0.0));
        let bar = State::barycenter(&states, &r.weights).unwrap();
        assert!(bar.element().max_abs_diff(r.optimizer.element()) <= 1e-10);
        assert!(r.identity_residual <= 1e-11);
        for w in r.gap_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        // The value never exceeds the ball capacity.
        assert!(r.value <= LN_2 + 1e-12);
    }
}

#[test]
fn damping_keeps_barycenter_interior() {
    // Uniform start sits at a pure state's neighbour; steps toward the pure
    // vertex must not make the barycenter singular.
    let f = Generator::Shannon;
    let states = vec![st(&[0.5, 0.0]), st(&[0.4999, 0.0])];
    let r = capacity_finite(&f, &states, CAPACITY_TOL, CAPACITY_MAX_ITER).unwrap();
    assert!(r.optimizer.min_eigenvalue() >= 1e-9 || r.optimizer.min_eigenvalue() > 0.0);
    assert!(r.value.is_finite());
}

#[test]
fn single_state_is_trivial() {
    let r = capacity_finite(&Generator::Quadratic, &[st(&[0.2, 0.1])], CAPACITY_TOL, 10).unwrap();
    assert_eq!((r.value, r.weights.clone(), r.gap), (0.0, vec![1.0], 0.0));
    let check = minimax_inequalities_check(&Generator::Quadratic, &[st(&[0.2, 0.1])], &r, &[1.0], &r.optimizer).unwrap();
    assert_eq!(check.redundancy_slack, 0.0);
    assert_eq!(check.maxred_slack, 0.0);
}

#[test]
fn minimax_inequalities_hold() {
    let mut rng = trial_rng(42, 0);
    for f in [Generator::Shannon, Generator::Quadratic, Generator::Tsallis { alpha: 1.5 }] {
        for _ in 0..30 {
            let d = rng.random_range(1..=4);
            let n = rng.random_range(2..=6);
            let states: Vec<State> = (0..n).map(|_| random_state(&mut rng, d)).collect();
            let r = capacity_finite(&f, &states, CAPACITY_TOL, CAPACITY_MAX_ITER).unwrap();
            let at_opt = minimax_inequalities_check(&f, &states, &r, &r.weights, &r.optimizer).unwrap();
            assert!(at_opt.passed, "{at_opt:?}");
            assert!(at_opt.redundancy_slack <= r.gap + 1e-9);
            for _ in 0..5 {
                let probe = random_interior_state(&mut rng, d, 1e-3);
                let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let s: f64 = t.iter().sum();
                t.iter_mut().for_each(|x| *x /= s);
                let rep = minimax_inequalities_check(&f, &states, &r, &t, &probe).unwrap();
                assert!(rep.passed, "{f}: {rep:?}");
            }
        }
    }
}

#[test]
fn projection_of_center_onto_segment() {
    let f = Generator::Shannon;
    let mut rng = trial_rng(43, 0);
    for _ in 0..20 {
        let a = random_pure(&mut rng, 2);
        let b = random_pure(&mut rng, 2);
        if a.element().max_abs_diff(b.element()) < 0.1 {
            continue;
        }
        let sigma = State::center(2);
        let p = bregman_project(&f, &sigma, &[a.clone(), b.clone()], 1e-12).unwrap();
        let mid = a.mix(&b, 0.5).unwrap();
        assert!(p.point.element().max_abs_diff(mid.element()) <= 1e-6);
        assert!(p.min_slack() >= -1e-8);
    }
}

/// Euclidean projection of `p` onto the hull of `verts` by brute force over
/// the simplex edges and vertices (valid for at most three vertices).
fn euclidean_projection(p: &[f64], verts: &[Vec<f64>]) -> Vec<f64> {
    let dist = |x: &[f64]| x.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut best: Vec<f64> = verts[0].clone();
    let mut candidates: Vec<Vec<f64>> = verts.to_vec();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            let (a, b) = (&verts[i], &verts[j]);
            let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
            let ap: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
            let t = (ab.iter().zip(&ap).map(|(x, y)| x * y).sum::<f64>() / ab.iter().map(|x| x * x).sum::<f64>())
                .clamp(0.0, 1.0);
            candidates.push(a.iter().zip(&ab).map(|(x, y)| x + t * y).collect());
        }
    }
    if verts.len() == 3 && p.len() == 2 {
        // Interior case: p itself if inside the triangle.
        let (a, b, c) = (&verts[0], &verts[1], &verts[2]);
        let cross = |o: &[f64], u: &[f64], w: &[f64]| (u[0] - o[0]) * (w[1] - o[1]) - (u[1] - o[1]) * (w[0] - o[0]);
        let s = [cross(a, b, p), cross(b, c, p), cross(c, a, p)];
        if s.iter().all(|&x| x >= 0.0) || s.iter().all(|&x| x <= 0.0) {
            candidates.push(p.to_vec());
        }
    }
    for c in candidates {
        if dist(&c) < dist(&best) {
            best = c;
        }
    }
    best
}

#[test]
fn quadratic_projection_matches_least_squares() {
    let f = Generator::Quadratic;
    let mut rng = trial_rng(44, 0);
    for _ in 0..50 {
        let k = rng.random_range(2..=3);
        let poly: Vec<State> = (0..k).map(|_| random_state(&mut rng, 2)).collect();
        let sigma = random_state(&mut rng, 2);
        let p = bregman_project(&f, &sigma, &poly, 1e-14).unwrap();
        let verts: Vec<Vec<f64>> = poly.iter().map(|s| s.bloch().to_vec()).collect();
        let expect = euclidean_projection(sigma.bloch(), &verts);
        for (a, b) in p.point.bloch().iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-8, "{:?} vs {expect:?}", p.point.bloch());
        }
    }
}

#[test]
fn pythagorean_certificate_on_hull() {
    let mut rng = trial_rng(45, 0);
    for f in [Generator::Shannon, Generator::Quadratic, Generator::ELambda { lambda: 1.0 }] {
        for _ in 0..10 {
            let d = rng.random_range(2..=4);
            let k = rng.random_range(1..=4);
            let poly: Vec<State> = (0..k).map(|_| random_interior_state(&mut rng, d, 1e-3)).collect();
            let sigma = random_interior_state(&mut rng, d, 1e-3);
            let p = bregman_project(&f, &sigma, &poly, 1e-12).unwrap();
            assert!(p.converged);
            assert!(p.min_slack() >= -1e-8, "{f}: {:?}", p.vertex_slacks);
            for _ in 0..100 {
                let mut t: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let s: f64 = t.iter().sum();
                t.iter_mut().for_each(|x| *x /= s);
                let rho = State::barycenter(&poly, &t).unwrap();
                assert!(p.slack(&f, &rho, &sigma).unwrap() >= -1e-8);
            }
        }
    }
}

#[test]
fn projection_inside_returns_sigma() {
    let f = Generator::ELambda { lambda: 0.5 };
    let poly = vec![st(&[0.45, 0.0, 0.0]), st(&[-0.2, 0.4, 0.0]), st(&[-0.2, -0.4, 0.1]), st(&[0.0, 0.0, -0.45])];
    let sigma = st(&[0.0, 0.0, 0.0]);
    let p = bregman_project(&f, &sigma, &poly, 1e-13).unwrap();
    assert!(p.point.element().max_abs_diff(sigma.element()) <= 1e-6);
    for s in &p.vertex_slacks {
        assert!(s.abs() <= 1e-8);
    }
}

#[test]
fn capacity_is_rotation_invariant() {
    let mut rng = trial_rng(46, 0);
    let f = Generator::Tsallis { alpha: 1.5 };
    for _ in 0..10 {
        let d = 3;
        let states: Vec<State> = (0..4).map(|_| random_state(&mut rng, d)).collect();
        let o = Channel::orthogonal(random_orthogonal(&mut rng, d)).unwrap();
        let rotated: Vec<State> = states.iter().map(|s| o.apply_state(s).unwrap()).collect();
        let a = capacity_finite(&f, &states, 1e-10, CAPACITY_MAX_ITER).unwrap();
        let b = capacity_finite(&f, &rotated, 1e-10, CAPACITY_MAX_ITER).unwrap();
        assert!((a.value - b.value).abs() <= 1e-9);
        let sup = states.iter().map(|s| bregman(&f, s, &a.optimizer).unwrap()).fold(0.0, f64::max);
        assert!(sup >= a.value - 1e-12);
    }
}
