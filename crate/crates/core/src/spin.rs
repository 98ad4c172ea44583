//! The spin factor `JSpin_d = R^d ⊕ R`.
//!
//! An element is a pair `(v, s)` with product
//! `(v, s) • (w, t) = (t v + s w, <v, w> + s t)`. The unit is `(0, 1)`,
//! the trace is `2 s`, and the positive cone is `‖v‖ ≤ s`. Every element
//! has a spectral decomposition `λ₋ σ₋ + λ₊ σ₊` with `λ± = s ± ‖v‖` and
//! `σ± = (±v / 2‖v‖, ½)`, so functional calculus reduces to two scalar
//! evaluations.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Default positivity slack.
pub const EPS_POS: f64 = 1e-12;
/// Default threshold below which `‖v‖` is treated as zero in spectral decompositions.
pub const EPS_DEG: f64 = 1e-14;

/// Element `(v, s)` of `JSpin_d`, with `d = v.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct SpinElement {
    v: Vec<f64>,
    s: f64,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    d: usize,
    v: Vec<f64>,
    s: f64,
}

impl TryFrom<RawElement> for SpinElement {
    type Error = Error;

    fn try_from(raw: RawElement) -> Result<Self> {
        check_dim(raw.d, raw.v.len())?;
        SpinElement::new(raw.v, raw.s)
    }
}

impl From<SpinElement> for RawElement {
    fn from(x: SpinElement) -> Self {
        RawElement {
            d: x.v.len(),
            v: x.v,
            s: x.s,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl SpinElement {
    pub fn new(v: Vec<f64>, s: f64) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { v, s })
    }

    pub(crate) fn from_parts(v: Vec<f64>, s: f64) -> Self {
        debug_assert!(!v.is_empty());
        Self { v, s }
    }

    pub fn zero(d: usize) -> Self {
        Self::from_parts(vec![0.0; d.max(1)], 0.0)
    }

    /// The unit `𝟙 = (0, 1)`.
    pub fn unit(d: usize) -> Self {
        Self::from_parts(vec![0.0; d.max(1)], 1.0)
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.s
    }

    pub fn norm_v(&self) -> f64 {
        norm(&self.v)
    }

    pub fn is_positive(&self, eps: f64) -> bool {
        self.norm_v() <= self.s + eps
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_parts(self.v.iter().map(|x| a * x).collect(), a * self.s)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let v = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_parts(v, a * self.s + b * other.s))
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).abs())
            .fold((self.s - other.s).abs(), f64::max)
    }

    pub fn bullet(&self, other: &Self) -> Result<Self> {
        bullet(self, other)
    }
}

impl Add for &SpinElement {
    type Output = SpinElement;

    fn add(self, rhs: &SpinElement) -> SpinElement {
        self.combine(1.0, rhs, 1.0).expect("dimension mismatch")
    }
}

impl Sub for &SpinElement {
    type Output = SpinElement;

    fn sub(self, rhs: &SpinElement) -> SpinElement {
        self.combine(1.0, rhs, -1.0).expect("dimension mismatch")
    }
}

impl Neg for &SpinElement {
    type Output = SpinElement;

    fn neg(self) -> SpinElement {
        self.scale(-1.0)
    }
}

impl Mul<&SpinElement> for f64 {
    type Output = SpinElement;

    fn mul(self, rhs: &SpinElement) -> SpinElement {
        rhs.scale(self)
    }
}

/// Jordan product `(v,s)•(w,t) = (t v + s w, <v,w> + s t)`.
pub fn bullet(x: &SpinElement, y: &SpinElement) -> Result<SpinElement> {
    check_dim(x.dim(), y.dim())?;
    let v = x
        .v
        .iter()
        .zip(&y.v)
        .map(|(a, b)| y.s * a + x.s * b)
        .collect();
    Ok(SpinElement::from_parts(v, dot(&x.v, &y.v) + x.s * y.s))
}

/// `tr[x • y] = 2(<v,w> + s t)`.
pub fn trace_inner(x: &SpinElement, y: &SpinElement) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(2.0 * (dot(&x.v, &y.v) + x.s * y.s))
}

/// Jordan quadratic representation `U_a(x) = 2 a•(a•x) − (a•a)•x`.
///
/// Under the matrix embedding this is the sandwich `a x a`.
pub fn quadratic_rep(a: &SpinElement, x: &SpinElement) -> Result<SpinElement> {
    let ax = bullet(a, x)?;
    let a_ax = bullet(a, &ax)?;
    let aa_x = bullet(&bullet(a, a)?, x)?;
    a_ax.combine(2.0, &aa_x, -1.0)
}

/// A trace-one element. Positivity is checked with a slack on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpinElement", into = "SpinElement")]
pub struct State(SpinElement);

impl TryFrom<SpinElement> for State {
    type Error = Error;

    fn try_from(x: SpinElement) -> Result<Self> {
        State::new(x)
    }
}

impl From<State> for SpinElement {
    fn from(x: State) -> Self {
        x.0
    }
}

impl State {
    pub fn new(element: SpinElement) -> Result<Self> {
        Self::with_tolerance(element, EPS_POS)
    }

    pub fn with_tolerance(element: SpinElement, eps_pos: f64) -> Result<Self> {
        if element.s != 0.5 {
            return Err(Error::NotAState {
                reason: format!("trace {} is not 1", element.trace()),
            });
        }
        let r = element.norm_v();
        if !(r <= 0.5 + eps_pos) {
            return Err(Error::NotAState {
                reason: format!("Bloch radius {r} exceeds 1/2"),
            });
        }
        Ok(Self(element))
    }

    /// State with Bloch vector `v` (radius at most ½).
    pub fn from_bloch(v: Vec<f64>) -> Result<Self> {
        Self::new(SpinElement::new(v, 0.5)?)
    }

    /// Caller guarantees `s = ½` and the radius bound.
    pub(crate) fn from_bloch_unchecked(v: Vec<f64>) -> Self {
        Self(SpinElement::from_parts(v, 0.5))
    }

    /// The maximally mixed state `𝟙/2`.
    pub fn center(d: usize) -> Self {
        Self::from_bloch_unchecked(vec![0.0; d.max(1)])
    }

    /// Pure state pointing along `direction` (normalized internally).
    pub fn pure(direction: &[f64]) -> Result<Self> {
        let n = norm(direction);
        if direction.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter {
                name: "direction",
                value: n,
                reason: "pure-state direction must be a finite nonzero vector",
            });
        }
        Ok(Self::from_bloch_unchecked(
            direction.iter().map(|x| 0.5 * x / n).collect(),
        ))
    }

    /// Pure state along the `k`-th basis vector (0-based).
    pub fn basis_pure(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::DimensionMismatch { left: k + 1, right: d });
        }
        let mut v = vec![0.0; d];
        v[k] = 0.5;
        Ok(Self::from_bloch_unchecked(v))
    }

    pub fn element(&self) -> &SpinElement {
        &self.0
    }

    pub fn into_element(self) -> SpinElement {
        self.0
    }

    pub fn bloch(&self) -> &[f64] {
        &self.0.v
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn radius(&self) -> f64 {
        self.0.norm_v()
    }

    pub fn is_pure(&self, eps: f64) -> bool {
        (self.radius() - 0.5).abs() <= eps
    }

    pub fn is_center(&self, eps: f64) -> bool {
        self.radius() <= eps
    }

    /// Smallest eigenvalue `½ − ‖v‖`.
    pub fn min_eigenvalue(&self) -> f64 {
        0.5 - self.radius()
    }

    /// `(1 − t)·self + t·other`.
    pub fn mix(&self, other: &State, t: f64) -> Result<State> {
        check_dim(self.dim(), other.dim())?;
        let v = self
            .bloch()
            .iter()
            .zip(other.bloch())
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Ok(Self::from_bloch_unchecked(v))
    }

    /// Barycenter `Σ tᵢ ρᵢ`; weights are assumed to be a probability vector.
    pub fn barycenter(states: &[State], weights: &[f64]) -> Result<State> {
        let first = states.first().ok_or(Error::ZeroDimension)?;
        check_dim(states.len(), weights.len())?;
        let d = first.dim();
        let mut v = vec![0.0; d];
        for (st, &w) in states.iter().zip(weights) {
            check_dim(d, st.dim())?;
            for (acc, x) in v.iter_mut().zip(st.bloch()) {
                *acc += w * x;
            }
        }
        Ok(Self::from_bloch_unchecked(v))
    }
}

impl AsRef<SpinElement> for State {
    fn as_ref(&self) -> &SpinElement {
        &self.0
    }
}

/// Eigenvalues and the orthogonal pure idempotents of an element.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub sigma_minus: State,
    pub sigma_plus: State,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> SpinElement {
        self.sigma_minus
            .element()
            .combine(self.lambda_minus, self.sigma_plus.element(), self.lambda_plus)
            .expect("idempotents share a dimension")
    }

    /// Unit vector `û` with `σ± = (±û/2, ½)`.
    pub fn axis(&self) -> Vec<f64> {
        self.sigma_plus.bloch().iter().map(|x| 2.0 * x).collect()
    }
}

/// Controls the degenerate branch of [`spectral_decompose_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOptions {
    pub eps_deg: f64,
    /// Axis used when `‖v‖ < eps_deg`; `None` means `e₁`.
    pub degenerate_axis: Option<Vec<f64>>,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            eps_deg: EPS_DEG,
            degenerate_axis: None,
        }
    }
}

pub fn spectral_decompose(x: &SpinElement) -> SpectralDecomposition {
    spectral_decompose_with(x, &SpectralOptions::default())
}

pub fn spectral_decompose_with(x: &SpinElement, opts: &SpectralOptions) -> SpectralDecomposition {
    let r = x.norm_v();
    let d = x.dim();
    let axis: Vec<f64> = if r < opts.eps_deg {
        match &opts.degenerate_axis {
            Some(a) if a.len() == d && norm(a) > 0.0 => {
                let n = norm(a);
                a.iter().map(|c| c / n).collect()
            }
            _ => {
                let mut e = vec![0.0; d];
                e[0] = 1.0;
                e
            }
        }
    } else {
        x.v.iter().map(|c| c / r).collect()
    };
    let (lambda_minus, lambda_plus) = if r < opts.eps_deg {
        (x.s, x.s)
    } else {
        (x.s - r, x.s + r)
    };
    SpectralDecomposition {
        lambda_minus,
        lambda_plus,
        sigma_minus: State::from_bloch_unchecked(axis.iter().map(|c| -0.5 * c).collect()),
        sigma_plus: State::from_bloch_unchecked(axis.iter().map(|c| 0.5 * c).collect()),
    }
}

/// Eigenvalues `(λ₋, λ₊)` without building the idempotents.
pub fn eigenvalues(x: &SpinElement) -> (f64, f64) {
    let r = x.norm_v();
    (x.s - r, x.s + r)
}

/// Builds `f₋ σ₋ + f₊ σ₊` from the decomposition axis.
fn spectral_combination(axis: &[f64], f_minus: f64, f_plus: f64) -> SpinElement {
    let half_diff = 0.5 * (f_plus - f_minus);
    SpinElement::from_parts(
        axis.iter().map(|u| half_diff * u).collect(),
        0.5 * (f_plus + f_minus),
    )
}

/// Functional calculus `f(x) = f(λ₋) σ₋ + f(λ₊) σ₊`.
///
/// A non-finite value of `f` at either eigenvalue is a domain error.
pub fn apply_function<F: Fn(f64) -> f64>(f: F, x: &SpinElement) -> Result<SpinElement> {
    apply_function_with(f, x, &SpectralOptions::default())
}

pub fn apply_function_with<F: Fn(f64) -> f64>(
    f: F,
    x: &SpinElement,
    opts: &SpectralOptions,
) -> Result<SpinElement> {
    let dec = spectral_decompose_with(x, opts);
    let eval = |lambda: f64| {
        let y = f(lambda);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Domain { eigenvalue: lambda })
        }
    };
    let f_minus = eval(dec.lambda_minus)?;
    let f_plus = eval(dec.lambda_plus)?;
    Ok(spectral_combination(&dec.axis(), f_minus, f_plus))
}

fn check_nonsingular(x: &SpinElement, eps_pos: f64) -> Result<()> {
    let (lo, _) = eigenvalues(x);
    if lo <= eps_pos {
        Err(Error::Singular { eigenvalue: lo })
    } else {
        Ok(())
    }
}

/// Square root on the interior of the cone.
pub fn sqrt(x: &SpinElement, eps_pos: f64) -> Result<SpinElement> {
    check_nonsingular(x, eps_pos)?;
    apply_function(f64::sqrt, x)
}

/// Inverse square root on the interior of the cone.
pub fn inv_sqrt(x: &SpinElement, eps_pos: f64) -> Result<SpinElement> {
    check_nonsingular(x, eps_pos)?;
    apply_function(|t| 1.0 / t.sqrt(), x)
}

pub fn inverse(x: &SpinElement, eps_pos: f64) -> Result<SpinElement> {
    check_nonsingular(x, eps_pos)?;
    apply_function(|t| 1.0 / t, x)
}
