//! Affine channels of the state ball.
//!
//! In ball coordinates (center at the origin, pure states at radius ½) a
//! trace-preserving affinity acts on elements as `Φ(v, s) = (A v + s c, s)`.
//! On states this is `v ↦ A v + c/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::spin::{
    self, apply_function, quadratic_rep, SpinElement, State, EPS_POS,
};

/// Positive trace-preserving affinity `Φ(v, s) = (A v + s c, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel", into = "RawChannel")]
pub struct Channel {
    a: DMatrix<f64>,
    c: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawChannel {
    d: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
}

impl TryFrom<RawChannel> for Channel {
    type Error = Error;

    fn try_from(raw: RawChannel) -> Result<Self> {
        check_dim(raw.d, raw.c.len())?;
        Channel::from_rows(&raw.a, raw.c)
    }
}

impl From<Channel> for RawChannel {
    fn from(ch: Channel) -> Self {
        RawChannel {
            d: ch.dim(),
            a: ch.a_rows(),
            c: ch.c.iter().copied().collect(),
        }
    }
}

/// Outcome of the exact validity check: the largest image norm of the unit
/// ball and the unit vector attaining it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityCertificate {
    pub valid: bool,
    /// `max ‖A u + c‖` over `‖u‖ ≤ 1`.
    pub max_norm: f64,
    /// Maximizer `u` in unit-ball coordinates.
    pub maximizer: Vec<f64>,
}

impl Channel {
    pub fn new(a: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let d = c.len();
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::MatrixShape {
                d,
                expected: d,
                got: if a.nrows() != d { a.nrows() } else { a.ncols() },
            });
        }
        Ok(Self { a, c })
    }

    pub fn from_rows(rows: &[Vec<f64>], c: Vec<f64>) -> Result<Self> {
        let d = c.len();
        check_dim(d, rows.len())?;
        for r in rows {
            check_dim(d, r.len())?;
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(d, d, &flat), DVector::from_vec(c))
    }

    pub fn identity(d: usize) -> Self {
        Self {
            a: DMatrix::identity(d, d),
            c: DVector::zeros(d),
        }
    }

    /// Isometry `v ↦ O v`; `o` must be orthogonal.
    pub fn orthogonal(o: DMatrix<f64>) -> Result<Self> {
        let d = o.nrows();
        let resid = (&o.transpose() * &o - DMatrix::identity(d, d)).amax();
        if resid > 1e-10 {
            return Err(Error::InvalidParameter {
                name: "orthogonality residual",
                value: resid,
                reason: "matrix is not orthogonal",
            });
        }
        Self::new(o, DVector::zeros(d))
    }

    /// Rotation by `theta` in the `(i, j)` coordinate plane.
    pub fn planar_rotation(d: usize, i: usize, j: usize, theta: f64) -> Result<Self> {
        if i >= d || j >= d || i == j {
            return Err(Error::InvalidParameter {
                name: "plane",
                value: i.max(j) as f64,
                reason: "rotation plane needs two distinct coordinates below d",
            });
        }
        let mut a = DMatrix::identity(d, d);
        let (sn, cs) = theta.sin_cos();
        a[(i, i)] = cs;
        a[(j, j)] = cs;
        a[(i, j)] = -sn;
        a[(j, i)] = sn;
        Self::new(a, DVector::zeros(d))
    }

    /// Reflection fixing the `k`-th axis and negating the other coordinates.
    pub fn axis_reflection(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::DimensionMismatch { left: k + 1, right: d });
        }
        let mut a = -DMatrix::identity(d, d);
        a[(k, k)] = 1.0;
        Self::new(a, DVector::zeros(d))
    }

    /// Central inversion `σ ↦ 𝟙 − σ`.
    pub fn central_inversion(d: usize) -> Self {
        Self {
            a: -DMatrix::identity(d, d),
            c: DVector::zeros(d),
        }
    }

    /// Constant map onto the state `z`.
    pub fn constant(z: &State) -> Self {
        let d = z.dim();
        Self {
            a: DMatrix::zeros(d, d),
            c: DVector::from_iterator(d, z.bloch().iter().map(|x| 2.0 * x)),
        }
    }

    /// Dilation `x ↦ (1 − r) z + r x` around `z`.
    pub fn dilation(z: &State, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: "dilation factor must lie in [0, 1]",
            });
        }
        let d = z.dim();
        Ok(Self {
            a: DMatrix::identity(d, d) * r,
            c: DVector::from_iterator(d, z.bloch().iter().map(|x| 2.0 * (1.0 - r) * x)),
        })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a_rows(&self) -> Vec<Vec<f64>> {
        self.a
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn apply(&self, x: &SpinElement) -> Result<SpinElement> {
        check_dim(self.dim(), x.dim())?;
        let v = DVector::from_column_slice(x.v());
        let out = &self.a * v + &self.c * x.s();
        SpinElement::new(out.iter().copied().collect(), x.s())
    }

    /// Image of a state. The result is checked against the ball with the
    /// default positivity slack.
    pub fn apply_state(&self, x: &State) -> Result<State> {
        State::new(self.apply(x.element())?)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        check_dim(self.dim(), inner.dim())?;
        Ok(Channel {
            a: &self.a * &inner.a,
            c: &self.a * &inner.c + &self.c,
        })
    }

    /// `Ψ_r ∘ Φ ∘ Ψ_r⁻¹` for the dilation `Ψ_r` around the center: `(A, r c)`.
    pub fn conjugate_by_center_dilation(&self, r: f64) -> Result<Channel> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: "conjugating dilation factor must lie in (0, 1]",
            });
        }
        Ok(Channel {
            a: self.a.clone(),
            c: &self.c * r,
        })
    }

    /// Largest `‖u‖∞`-style distance between the affine parameters.
    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        (&self.a - &other.a).amax().max((&self.c - &other.c).amax())
    }

    /// Affine map as a `(d+1)×(d+1)` matrix acting on `(v, s)`.
    fn augmented(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(&self.a);
        m.view_mut((0, d), (d, 1)).copy_from(&self.c);
        m[(d, d)] = 1.0;
        m
    }

    fn from_augmented(m: &DMatrix<f64>) -> Channel {
        let d = m.nrows() - 1;
        Channel {
            a: m.view((0, 0), (d, d)).into_owned(),
            c: m.view((0, d), (d, 1)).column(0).into_owned(),
        }
    }

    pub fn validity(&self) -> ValidityCertificate {
        self.validity_with(EPS_POS)
    }

    /// Exact decision of `sup_{‖u‖≤1} ‖A u + c‖ ≤ 1 + 2 eps_pos`.
    ///
    /// The maximum of the convex quadratic `‖A u + c‖²` over the ball sits on
    /// the sphere at `(ν I − AᵀA) u = Aᵀ c` with `ν ≥ λ_max(AᵀA)`; `ν` is found
    /// from the secular equation in the eigenbasis of `AᵀA`.
    pub fn validity_with(&self, eps_pos: f64) -> ValidityCertificate {
        let u = maximize_norm_over_ball(&self.a, &self.c);
        let max_norm = (&self.a * &u + &self.c).norm();
        ValidityCertificate {
            valid: max_norm <= 1.0 + 2.0 * eps_pos,
            max_norm,
            maximizer: u.iter().copied().collect(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validity().valid
    }

    pub fn adjoint(&self) -> DualMap {
        DualMap {
            at: self.a.transpose(),
            c: self.c.clone(),
        }
    }

    /// Poisson average `Σ μⁿ/n! e^{−μ} Φⁿ`, summed on the affine parameters
    /// until the remaining Poisson mass is below 1e-16.
    pub fn poissonize(&self, mu: f64) -> Result<Channel> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "Poisson rate must be finite and non-negative",
            });
        }
        let l = self.augmented();
        let n = l.nrows();
        let mut power = DMatrix::identity(n, n);
        let mut acc = DMatrix::zeros(n, n);
        let ln_mu = mu.ln();
        let mut ln_fact = 0.0;
        let mut mass = 0.0;
        let mut k = 0usize;
        loop {
            let ln_w = if mu == 0.0 {
                if k == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                k as f64 * ln_mu - mu - ln_fact
            };
            if ln_w > -745.0 {
                let w = ln_w.exp();
                acc += &power * w;
                mass += w;
            }
            let kf = k as f64;
            if kf >= mu {
                // Terms now decay with ratio μ/(k+1) < 1.
                let ratio = mu / (kf + 1.0);
                let tail = ln_w.exp() * ratio / (1.0 - ratio);
                if tail < 1e-16 || mu == 0.0 {
                    break;
                }
            }
            power = &l * power;
            k += 1;
            ln_fact += (k as f64).ln();
        }
        // Renormalize the truncated mass so the result stays trace preserving.
        acc /= mass;
        Ok(Channel::from_augmented(&acc))
    }

    /// Limit of [`Channel::poissonize`] as `μ → ∞`: the spectral projection of
    /// the affine map onto its eigenvalue-one eigenspace, i.e. onto the fixed
    /// points along the range of `Φ − id`.
    pub fn fixpoint_retraction(&self) -> Result<Channel> {
        let l = self.augmented();
        let n = l.nrows();
        let gap = &l - DMatrix::identity(n, n);
        let svd = gap.clone().svd(true, true);
        let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let smax = svd.singular_values.max().max(1.0);
        let tol = 1e-9 * smax;
        let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol).collect();
        if null.is_empty() {
            // Cannot happen for a valid channel; an affinity of the ball has a fixed point.
            return Err(Error::NonConvergence {
                residual: svd.singular_values.min(),
                iterations: 0,
            });
        }
        let k = DMatrix::from_columns(
            &null
                .iter()
                .map(|&i| vt.row(i).transpose())
                .collect::<Vec<_>>(),
        );
        let w = DMatrix::from_columns(&null.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
        let pairing = w.transpose() * &k;
        let inv = pairing.try_inverse().ok_or(Error::NotIdempotent {
            residual: f64::INFINITY,
        })?;
        let p = &k * inv * w.transpose();
        let residual = (&p * &p - &p).amax();
        if residual > 1e-8 {
            return Err(Error::NotIdempotent { residual });
        }
        Ok(Channel::from_augmented(&p))
    }

    /// `‖Φ∘Φ − Φ‖` on the affine parameters.
    pub fn idempotence_residual(&self) -> f64 {
        let sq = self.compose(self).expect("same dimension");
        sq.max_abs_diff(self)
    }

    /// Orthogonal projection onto `span(basis)` with zero offset:
    /// `(v₁ ⊕ v₂, s) ↦ (v₁ ⊕ 0, s)`. An empty basis gives the constant map
    /// to the center.
    pub fn conditional_expectation(d: usize, basis: &[Vec<f64>]) -> Result<Channel> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut q: Vec<DVector<f64>> = Vec::new();
        for b in basis {
            check_dim(d, b.len())?;
            let mut w = DVector::from_column_slice(b);
            for e in &q {
                let proj = e.dot(&w);
                w -= e * proj;
            }
            let n = w.norm();
            if n > 1e-12 {
                q.push(w / n);
            }
        }
        let mut a = DMatrix::zeros(d, d);
        for e in &q {
            a += e * e.transpose();
        }
        Channel::new(a, DVector::zeros(d))
    }

    /// Projection keeping the listed coordinates.
    pub fn coordinate_projection(d: usize, keep: &[usize]) -> Result<Channel> {
        let basis: Vec<Vec<f64>> = keep
            .iter()
            .map(|&k| {
                if k >= d {
                    Err(Error::DimensionMismatch { left: k + 1, right: d })
                } else {
                    let mut e = vec![0.0; d];
                    e[k] = 1.0;
                    Ok(e)
                }
            })
            .collect::<Result<_>>()?;
        Channel::conditional_expectation(d, &basis)
    }
}

/// `‖E(a•x) − a•E(x)‖∞` for an idempotent, unital `E`.
pub fn check_conditional(e: &Channel, a: &SpinElement, x: &SpinElement) -> Result<f64> {
    let residual = e.idempotence_residual();
    if residual > 1e-10 {
        return Err(Error::NotIdempotent { residual });
    }
    let unital = e.offset().amax();
    if unital > 1e-12 {
        return Err(Error::InvalidParameter {
            name: "offset",
            value: unital,
            reason: "conditional expectation must fix the center",
        });
    }
    let lhs = e.apply(&a.bullet(x)?)?;
    let rhs = a.bullet(&e.apply(x)?)?;
    Ok(lhs.max_abs_diff(&rhs))
}

/// Adjoint of a channel with respect to `tr[x • y]`:
/// `Φ*(w, t) = (Aᵀ w, t + <c, w>)`. Unital and positive, not trace preserving.
#[derive(Clone, Debug, PartialEq)]
pub struct DualMap {
    at: DMatrix<f64>,
    c: DVector<f64>,
}

impl DualMap {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn apply(&self, x: &SpinElement) -> Result<SpinElement> {
        check_dim(self.dim(), x.dim())?;
        let w = DVector::from_column_slice(x.v());
        let t = x.s() + self.c.dot(&w);
        let v = &self.at * w;
        SpinElement::new(v.iter().copied().collect(), t)
    }
}

/// Petz recovery `Ψ(ρ) = U_{σ^{1/2}} Φ*( U_{Φ(σ)^{−1/2}} ρ )` for an anchor `σ`.
#[derive(Clone, Debug)]
pub struct RecoveryMap {
    forward: Channel,
    anchor: State,
    dual: DualMap,
    anchor_sqrt: SpinElement,
    image_inv_sqrt: SpinElement,
}

impl RecoveryMap {
    pub fn forward(&self) -> &Channel {
        &self.forward
    }

    pub fn anchor(&self) -> &State {
        &self.anchor
    }

    pub fn apply(&self, rho: &SpinElement) -> Result<SpinElement> {
        let inner = quadratic_rep(&self.image_inv_sqrt, rho)?;
        let pulled = self.dual.apply(&inner)?;
        quadratic_rep(&self.anchor_sqrt, &pulled)
    }

    /// `Ψ(Φ(ρ))`.
    pub fn round_trip(&self, rho: &State) -> Result<SpinElement> {
        self.apply(&self.forward.apply(rho.element())?)
    }
}

pub fn petz_recovery(phi: &Channel, sigma: &State) -> Result<RecoveryMap> {
    petz_recovery_with(phi, sigma, EPS_POS)
}

pub fn petz_recovery_with(phi: &Channel, sigma: &State, eps_pos: f64) -> Result<RecoveryMap> {
    check_dim(phi.dim(), sigma.dim())?;
    let image = phi.apply(sigma.element())?;
    let image_inv_sqrt = spin::inv_sqrt(&image, eps_pos)?;
    let anchor_sqrt = apply_function(|t| t.max(0.0).sqrt(), sigma.element())?;
    Ok(RecoveryMap {
        forward: phi.clone(),
        anchor: sigma.clone(),
        dual: phi.adjoint(),
        anchor_sqrt,
        image_inv_sqrt,
    })
}

/// Maximizer of `‖A u + c‖` over the closed unit ball.
fn maximize_norm_over_ball(a: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
    let d = c.len();
    let m = a.transpose() * a;
    let b = a.transpose() * c;
    let eig = SymmetricEigen::new(m);
    let lam = &eig.eigenvalues;
    let q = &eig.eigenvectors;
    let beta = q.transpose() * &b;
    let lam_max = lam.max();
    let eig_tol = 1e-12 * lam_max.abs().max(1.0);
    let top: Vec<bool> = lam.iter().map(|&l| l >= lam_max - eig_tol).collect();
    let beta_top: f64 = (0..d).filter(|&i| top[i]).map(|i| beta[i] * beta[i]).sum();
    let beta_norm = beta.norm();

    let coords = |nu: f64, skip_top: bool| -> DVector<f64> {
        DVector::from_iterator(
            d,
            (0..d).map(|i| {
                if skip_top && top[i] {
                    0.0
                } else {
                    beta[i] / (nu - lam[i])
                }
            }),
        )
    };

    let solve_secular = |skip_top: bool| -> DVector<f64> {
        // ‖u(ν)‖ decreases on ν > λ_max and is at most 1 at ν = λ_max + ‖β‖.
        let mut lo = lam_max;
        let mut hi = lam_max + beta_norm.max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if coords(mid, skip_top).norm() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = coords(hi, skip_top);
        let n = u.norm();
        if n > 0.0 {
            u / n
        } else {
            u
        }
    };

    let y = if beta_top > 1e-30 * beta_norm.powi(2).max(1e-300) {
        solve_secular(false)
    } else {
        // Hard case: no gradient component along the top eigenspace.
        let rest = coords(lam_max, true);
        let rn = rest.norm();
        if rn <= 1.0 {
            let idx = (0..d).find(|&i| top[i]).expect("top eigenspace is non-empty");
            let mut y = rest;
            y[idx] = (1.0 - rn * rn).max(0.0).sqrt();
            y
        } else {
            solve_secular(true)
        }
    };
    q * y
}
