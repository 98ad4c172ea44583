use proptest::prelude::*;
use spinfactor::oracle::{embed, oracle_function, trace_scale};
use spinfactor::spin::{apply_function, bullet, eigenvalues, quadratic_rep, spectral_decompose, trace_inner};
use spinfactor::SpinElement;

fn element(d: usize) -> impl Strategy<Value = SpinElement> {
    (prop::collection::vec(-2.0..2.0f64, d), -2.0..2.0f64)
        .prop_map(|(v, s)| SpinElement::new(v, s).unwrap())
}

fn pair() -> impl Strategy<Value = (SpinElement, SpinElement)> {
    (1usize..7).prop_flat_map(|d| (element(d), element(d)))
}

/// Polynomial with coefficients `c` (lowest degree first).
fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * t + k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bullet_commutes_and_traces((x, y) in pair()) {
        let xy = bullet(&x, &y).unwrap();
        prop_assert_eq!(&xy, &bullet(&y, &x).unwrap());
        prop_assert!((xy.trace() - trace_inner(&x, &y).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn spectral_reconstruction((x, _) in pair()) {
        prop_assert!(spectral_decompose(&x).reconstruct().max_abs_diff(&x) <= 1e-12);
    }

    #[test]
    fn sum_of_squares_trace((x, y) in pair()) {
        let sq = |t: f64| t * t;
        let total = &apply_function(sq, &x).unwrap() + &apply_function(sq, &y).unwrap();
        let (a, b) = eigenvalues(&x);
        let (c, d) = eigenvalues(&y);
        let expect = a * a + b * b + c * c + d * d;
        prop_assert!((total.trace() - expect).abs() <= 1e-11 * expect.max(1.0));
        prop_assert!(total.is_positive(0.0) || total.trace() == 0.0);
    }

    #[test]
    fn calculus_is_multiplicative(
        (x, _) in pair(),
        f in prop::collection::vec(-1.0..1.0f64, 5),
        g in prop::collection::vec(-1.0..1.0f64, 5),
    ) {
        let fg = apply_function(|t| poly(&f, t) * poly(&g, t), &x).unwrap();
        let prod = bullet(&apply_function(|t| poly(&f, t), &x).unwrap(), &apply_function(|t| poly(&g, t), &x).unwrap()).unwrap();
        let scale = fg.norm_v().max(fg.s().abs()).max(1.0);
        prop_assert!(fg.max_abs_diff(&prod) <= 1e-10 * scale);
    }

    #[test]
    fn nonnegative_functions_give_positive_elements((x, _) in pair(), shift in 0.0..1.0f64) {
        let (lo, _) = eigenvalues(&x);
        // (t - lo)² + shift ≥ shift on the spectrum.
        let y = apply_function(|t| (t - lo) * (t - lo) + shift, &x).unwrap();
        prop_assert!(y.is_positive(1e-12));
    }

    #[test]
    fn matches_matrix_oracle((x, y) in pair()) {
        let d = x.dim();
        let mx = embed(&x).unwrap();
        let my = embed(&y).unwrap();
        let prod = embed(&bullet(&x, &y).unwrap()).unwrap();
        prop_assert!((prod.matrix() - mx.jordan(&my).matrix()).amax() <= 1e-10);
        let u = embed(&quadratic_rep(&x, &y).unwrap()).unwrap();
        prop_assert!((u.matrix() - mx.sandwich(&my).matrix()).amax() <= 1e-10 * mx.matrix().amax().powi(2).max(1.0));
        prop_assert!((mx.trace() - trace_scale(d) * x.trace()).abs() <= 1e-10);
        prop_assert!((mx.trace_product(&my) - trace_scale(d) * trace_inner(&x, &y).unwrap()).abs() <= 1e-10);
        let cube = |t: f64| t * t * t - t;
        let a = apply_function(cube, &x).unwrap();
        prop_assert!(a.max_abs_diff(&oracle_function(cube, &x).unwrap()) <= 1e-10 * a.max_abs_diff(&SpinElement::zero(d)).max(1.0));
    }
}

#[test]
fn spectral_reconstruction_bulk() {
    use rand::Rng;
    let mut rng = spinfactor::sampling::trial_rng(1, 0);
    for _ in 0..10_000 {
        let d = rng.random_range(1..=8);
        let v = spinfactor::sampling::gaussian_vector(&mut rng, d);
        let x = SpinElement::new(v, rng.random_range(-3.0..3.0)).unwrap();
        assert!(spectral_decompose(&x).reconstruct().max_abs_diff(&x) <= 1e-12);
    }
}
