//! Pauli tensor embedding of `JSpin_d` into real symmetric `2^(d−1)` matrices.
//!
//! `S(𝟙) = 𝟙⊗…⊗𝟙`, `S(e_k) = σ₃^{⊗(k−1)} ⊗ σ₁ ⊗ 𝟙…` for `k < d` and
//! `S(e_d) = σ₃^{⊗(d−1)}`. The images of the basis vectors anticommute and
//! square to the identity, so `S` is a Jordan homomorphism. This module is
//! a brute-force cross-check for the closed-form spin-factor routines and
//! deliberately goes through dense matrices and a generic eigen-solver.
//!
//! `d = 1` uses the diagonal embedding `diag(s + v₁, s − v₁)`.
//!
//! The matrix trace of `S(x)` is `n/2 · tr(x)` with `n` the matrix size
//! (`2^(d−2) · tr(x)` for `d ≥ 2`); see [`trace_scale`].

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::spin::SpinElement;

/// Largest algebra dimension accepted by [`embed`] (2048×2048 matrices).
pub const D_MAX: usize = 12;

/// Dense real symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m` after checking symmetry to 1e-13 relative to the largest entry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::MatrixShape {
                d: 0,
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-13 * scale {
            return Err(Error::Parse(format!("matrix not symmetric (residual {asym:e})")));
        }
        Ok(Self(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Matrix Jordan product `(AB + BA)/2`.
    pub fn jordan(&self, other: &SymMatrix) -> SymMatrix {
        let ab = &self.0 * &other.0;
        let sym = (&ab + ab.transpose()) * 0.5;
        SymMatrix(sym)
    }

    /// Sandwich `A B A`.
    pub fn sandwich(&self, other: &SymMatrix) -> SymMatrix {
        let m = &self.0 * &other.0 * &self.0;
        SymMatrix((&m + m.transpose()) * 0.5)
    }

    /// `tr(A B)`.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.0.component_mul(&other.0).sum()
    }

    /// `f(M)` through a symmetric eigendecomposition.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> Result<SymMatrix> {
        let eig = SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, 0).ok_or(
            Error::NonConvergence {
                residual: f64::NAN,
                iterations: 0,
            },
        )?;
        let mut vals = eig.eigenvalues.clone();
        for lam in vals.iter_mut() {
            let y = f(*lam);
            if !y.is_finite() {
                return Err(Error::Domain { eigenvalue: *lam });
            }
            *lam = y;
        }
        let q = &eig.eigenvectors;
        let m = q * DMatrix::from_diagonal(&vals) * q.transpose();
        Ok(SymMatrix((&m + m.transpose()) * 0.5))
    }
}

/// One tensor basis element as a signed permutation: row `i` has its single
/// nonzero entry `sign(i)` in column `i ^ flip`.
#[derive(Clone, Copy, Debug)]
struct SignedPerm {
    flip: usize,
    sign_mask: usize,
}

impl SignedPerm {
    fn sign(&self, i: usize) -> f64 {
        if (i & self.sign_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Matrix size for algebra dimension `d`.
pub fn matrix_size(d: usize) -> usize {
    if d <= 1 {
        2
    } else {
        1 << (d - 1)
    }
}

/// Ratio of the matrix trace of `S(x)` to the algebra trace of `x`.
pub fn trace_scale(d: usize) -> f64 {
    matrix_size(d) as f64 / 2.0
}

fn basis(d: usize) -> Vec<SignedPerm> {
    if d == 1 {
        return vec![SignedPerm {
            flip: 0,
            sign_mask: 1,
        }];
    }
    let factors = d - 1;
    // Tensor position p (0 = leftmost) acts on bit factors-1-p of the index.
    let bit = |p: usize| 1usize << (factors - 1 - p);
    let mut out = Vec::with_capacity(d);
    for k in 0..factors {
        let sign_mask = (0..k).map(bit).fold(0, |a, b| a | b);
        out.push(SignedPerm {
            flip: bit(k),
            sign_mask,
        });
    }
    out.push(SignedPerm {
        flip: 0,
        sign_mask: (0..factors).map(bit).fold(0, |a, b| a | b),
    });
    out
}

pub fn embed(x: &SpinElement) -> Result<SymMatrix> {
    embed_with_limit(x, D_MAX)
}

pub fn embed_with_limit(x: &SpinElement, d_max: usize) -> Result<SymMatrix> {
    let d = x.dim();
    if d > d_max {
        return Err(Error::Resource { d, d_max });
    }
    let n = matrix_size(d);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = x.s();
    }
    for (coef, p) in x.v().iter().zip(basis(d)) {
        for i in 0..n {
            m[(i, i ^ p.flip)] += coef * p.sign(i);
        }
    }
    Ok(SymMatrix(m))
}

/// Orthogonal projection (trace inner product) onto `S(JSpin_d)`, read back
/// as an algebra element.
pub fn retract(m: &SymMatrix, d: usize) -> Result<SpinElement> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let n = matrix_size(d);
    if m.n() != n {
        return Err(Error::MatrixShape {
            d,
            expected: n,
            got: m.n(),
        });
    }
    let mat = m.matrix();
    let nf = n as f64;
    let s = mat.trace() / nf;
    let v = basis(d)
        .into_iter()
        .map(|p| (0..n).map(|j| p.sign(j) * mat[(j ^ p.flip, j)]).sum::<f64>() / nf)
        .collect();
    SpinElement::new(v, s)
}

/// Matrix functional calculus on `S(x)`, retracted back to the algebra.
pub fn oracle_function<F: Fn(f64) -> f64>(f: F, x: &SpinElement) -> Result<SpinElement> {
    let m = embed(x)?;
    retract(&m.apply(f)?, x.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::bullet;

    fn el(v: &[f64], s: f64) -> SpinElement {
        SpinElement::new(v.to_vec(), s).unwrap()
    }

    #[test]
    fn unit_maps_to_identity() {
        let m = embed(&SpinElement::unit(2)).unwrap();
        assert_eq!(m.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn d2_basis_is_sigma1_sigma3() {
        let s1 = embed(&el(&[1.0, 0.0], 0.0)).unwrap();
        let s3 = embed(&el(&[0.0, 1.0], 0.0)).unwrap();
        assert_eq!(s1.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(s3.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert_eq!(s1.jordan(&s3).matrix().amax(), 0.0);
    }

    #[test]
    fn basis_anticommutes_and_squares_to_one() {
        for d in 2..=6 {
            let n = matrix_size(d);
            let mats: Vec<_> = (0..d)
                .map(|k| {
                    let mut v = vec![0.0; d];
                    v[k] = 1.0;
                    embed(&el(&v, 0.0)).unwrap()
                })
                .collect();
            for (a, ma) in mats.iter().enumerate() {
                for (b, mb) in mats.iter().enumerate() {
                    let j = ma.jordan(mb);
                    let expect = if a == b {
                        DMatrix::identity(n, n)
                    } else {
                        DMatrix::zeros(n, n)
                    };
                    assert_eq!(j.matrix(), &expect, "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn d1_diagonal_embedding() {
        let m = embed(&el(&[0.25], 0.5)).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(2, 2, &[0.75, 0.0, 0.0, 0.25]));
        assert_eq!(retract(&m, 1).unwrap(), el(&[0.25], 0.5));
    }

    #[test]
    fn trace_scale_matches() {
        let x = el(&[0.3, 0.1, -0.2, 0.9], 0.7);
        let m = embed(&x).unwrap();
        assert!((m.trace() - trace_scale(4) * x.trace()).abs() < 1e-14);
        assert_eq!(trace_scale(4), 4.0);
    }

    #[test]
    fn retract_zero_and_mismatch() {
        let z = SymMatrix::new(DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(retract(&z, 3).unwrap(), SpinElement::zero(3));
        assert!(matches!(retract(&z, 4), Err(Error::MatrixShape { .. })));
    }

    #[test]
    fn dimension_limit() {
        let x = SpinElement::unit(13);
        assert_eq!(embed(&x).unwrap_err(), Error::Resource { d: 13, d_max: 12 });
    }

    #[test]
    fn homomorphism_small() {
        let x = el(&[0.3, -0.1, 0.25], 0.6);
        let y = el(&[-0.4, 0.2, 0.05], 0.45);
        let lhs = embed(&bullet(&x, &y).unwrap()).unwrap();
        let rhs = embed(&x).unwrap().jordan(&embed(&y).unwrap());
        assert!((lhs.matrix() - rhs.matrix()).amax() < 1e-15);
    }

    #[test]
    fn oracle_identity_function() {
        let x = el(&[0.3, -0.1, 0.25], 0.6);
        assert!(oracle_function(|t| t, &x).unwrap().max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(SymMatrix::new(m).is_err());
    }
}
