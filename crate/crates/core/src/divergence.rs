//! Trace-form potentials `F(x) = tr[f(x)]` and their Bregman divergences.
//!
//! Because `F` only sees the spectrum, everything reduces to the two
//! eigenvalues of each argument plus the overlap of the first argument with
//! the eigen-idempotents of the second.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::spin::{dot, eigenvalues, spectral_decompose, trace_inner, SpinElement, State, EPS_POS};

/// Point mass of the mixing measure over `e_λ` generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: f64,
    pub weight: f64,
}

/// Convex entropy generator `f`, inducing the potential `F(x) = tr[f(x)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Generator {
    /// `x ln x` (minus the von Neumann entropy).
    Shannon,
    /// `(x^α − x)/(α − 1)`; equals `Shannon` at `α = 1`.
    Tsallis { alpha: f64 },
    /// `x²`.
    Quadratic,
    /// `(λ + x) ln(λ + x)`.
    #[serde(rename = "e_lambda")]
    ELambda { lambda: f64 },
    /// `a₀ + a₁ x + γ/2 x² + Σ wᵢ e_{λᵢ}(x)`.
    Mixture {
        #[serde(default)]
        affine: [f64; 2],
        gamma: f64,
        measure: Vec<Atom>,
    },
    /// `x ↦ f((1 − r)/2 + r x)`.
    Shifted { base: Box<Generator>, r: f64 },
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}

impl Generator {
    pub fn tsallis(alpha: f64) -> Result<Self> {
        let g = Generator::Tsallis { alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn e_lambda(lambda: f64) -> Result<Self> {
        let g = Generator::ELambda { lambda };
        g.validate()?;
        Ok(g)
    }

    /// `γ/2·q + Σ wᵢ e_{λᵢ}` for a finitely supported measure.
    pub fn mixture(gamma: f64, measure: Vec<Atom>) -> Result<Self> {
        let g = Generator::Mixture {
            affine: [0.0, 0.0],
            gamma,
            measure,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Generator::Shannon | Generator::Quadratic => Ok(()),
            Generator::Tsallis { alpha } => {
                if alpha.is_finite() && *alpha > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("alpha", *alpha, "Tsallis order must be positive"))
                }
            }
            Generator::ELambda { lambda } => {
                if lambda.is_finite() && *lambda >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid("lambda", *lambda, "shift must be non-negative"))
                }
            }
            Generator::Mixture {
                affine,
                gamma,
                measure,
            } => {
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(invalid("gamma", *gamma, "quadratic weight must be non-negative"));
                }
                if !affine.iter().all(|a| a.is_finite()) {
                    return Err(invalid("affine", f64::NAN, "affine part must be finite"));
                }
                for atom in measure {
                    if !(atom.lambda.is_finite() && atom.lambda >= 0.0) {
                        return Err(invalid("lambda", atom.lambda, "shift must be non-negative"));
                    }
                    if !(atom.weight.is_finite() && atom.weight >= 0.0) {
                        return Err(invalid("weight", atom.weight, "measure must be non-negative"));
                    }
                }
                Ok(())
            }
            Generator::Shifted { base, r } => {
                if !(*r > 0.0 && *r <= 1.0) {
                    return Err(invalid("r", *r, "shift factor must lie in (0, 1]"));
                }
                base.validate()
            }
        }
    }

    fn is_shannon_like(alpha: f64) -> bool {
        alpha == 1.0
    }

    /// Left end of the domain of `f` (`−∞` when unbounded).
    pub fn domain_lower(&self) -> f64 {
        match self {
            Generator::Shannon | Generator::Tsallis { .. } => 0.0,
            Generator::Quadratic => f64::NEG_INFINITY,
            Generator::ELambda { lambda } => -lambda,
            Generator::Mixture { measure, .. } => measure
                .iter()
                .filter(|a| a.weight > 0.0)
                .map(|a| -a.lambda)
                .fold(f64::NEG_INFINITY, f64::max),
            Generator::Shifted { base, r } => (base.domain_lower() - 0.5 * (1.0 - r)) / r,
        }
    }

    /// Whether `f′` diverges at the left end of the domain.
    pub fn gradient_diverges_at_edge(&self) -> bool {
        match self {
            Generator::Shannon | Generator::ELambda { .. } => true,
            Generator::Tsallis { alpha } => *alpha <= 1.0,
            Generator::Quadratic => false,
            Generator::Mixture { measure, .. } => measure.iter().any(|a| a.weight > 0.0),
            Generator::Shifted { base, .. } => base.gradient_diverges_at_edge(),
        }
    }

    /// Strict convexity on `(0, 1)`.
    pub fn strictly_convex(&self) -> bool {
        match self {
            Generator::Mixture { gamma, measure, .. } => {
                *gamma > 0.0 || measure.iter().any(|a| a.weight > 0.0)
            }
            Generator::Shifted { base, .. } => base.strictly_convex(),
            _ => true,
        }
    }

    /// `f(x)`; `NaN` outside the domain.
    pub fn f(&self, x: f64) -> f64 {
        match self {
            Generator::Shannon => {
                if x < 0.0 {
                    f64::NAN
                } else {
                    xlogx(x)
                }
            }
            Generator::Tsallis { alpha } => {
                if x < 0.0 {
                    f64::NAN
                } else if Self::is_shannon_like(*alpha) {
                    xlogx(x)
                } else if x == 0.0 {
                    0.0
                } else {
                    let a1 = alpha - 1.0;
                    x * (a1 * x.ln()).exp_m1() / a1
                }
            }
            Generator::Quadratic => x * x,
            Generator::ELambda { lambda } => {
                let y = lambda + x;
                if y < 0.0 {
                    f64::NAN
                } else {
                    xlogx(y)
                }
            }
            Generator::Mixture {
                affine,
                gamma,
                measure,
            } => {
                let mut acc = affine[0] + affine[1] * x + 0.5 * gamma * x * x;
                for a in measure.iter().filter(|a| a.weight > 0.0) {
                    let y = a.lambda + x;
                    if y < 0.0 {
                        return f64::NAN;
                    }
                    acc += a.weight * xlogx(y);
                }
                acc
            }
            Generator::Shifted { base, r } => base.f(0.5 * (1.0 - r) + r * x),
        }
    }

    /// `f′(x)`; `−∞` at a divergent domain edge.
    pub fn f1(&self, x: f64) -> f64 {
        match self {
            Generator::Shannon => {
                if x < 0.0 {
                    f64::NAN
                } else {
                    x.ln() + 1.0
                }
            }
            Generator::Tsallis { alpha } => {
                if x < 0.0 {
                    f64::NAN
                } else if Self::is_shannon_like(*alpha) {
                    x.ln() + 1.0
                } else if x == 0.0 {
                    if *alpha < 1.0 {
                        f64::NEG_INFINITY
                    } else {
                        -1.0 / (alpha - 1.0)
                    }
                } else {
                    let a1 = alpha - 1.0;
                    alpha * (a1 * x.ln()).exp_m1() / a1 + 1.0
                }
            }
            Generator::Quadratic => 2.0 * x,
            Generator::ELambda { lambda } => {
                let y = lambda + x;
                if y < 0.0 {
                    f64::NAN
                } else {
                    y.ln() + 1.0
                }
            }
            Generator::Mixture {
                affine,
                gamma,
                measure,
            } => {
                let mut acc = affine[1] + gamma * x;
                for a in measure.iter().filter(|a| a.weight > 0.0) {
                    let y = a.lambda + x;
                    if y < 0.0 {
                        return f64::NAN;
                    }
                    acc += a.weight * (y.ln() + 1.0);
                }
                acc
            }
            Generator::Shifted { base, r } => r * base.f1(0.5 * (1.0 - r) + r * x),
        }
    }

    /// `f″(x)`; `+∞` where it diverges.
    pub fn f2(&self, x: f64) -> f64 {
        match self {
            Generator::Shannon => {
                if x < 0.0 {
                    f64::NAN
                } else {
                    1.0 / x
                }
            }
            Generator::Tsallis { alpha } => {
                if x < 0.0 {
                    f64::NAN
                } else if Self::is_shannon_like(*alpha) {
                    1.0 / x
                } else {
                    alpha * x.powf(alpha - 2.0)
                }
            }
            Generator::Quadratic => 2.0,
            Generator::ELambda { lambda } => {
                let y = lambda + x;
                if y < 0.0 {
                    f64::NAN
                } else {
                    1.0 / y
                }
            }
            Generator::Mixture { gamma, measure, .. } => {
                let mut acc = *gamma;
                for a in measure.iter().filter(|a| a.weight > 0.0) {
                    let y = a.lambda + x;
                    if y < 0.0 {
                        return f64::NAN;
                    }
                    acc += a.weight / y;
                }
                acc
            }
            Generator::Shifted { base, r } => r * r * base.f2(0.5 * (1.0 - r) + r * x),
        }
    }

    /// Pulls an eigenvalue that undershoots the domain edge by at most
    /// `eps` back onto the edge.
    fn clamp(&self, lambda: f64, eps: f64) -> Result<f64> {
        let lo = self.domain_lower();
        if lambda >= lo {
            Ok(lambda)
        } else if lambda >= lo - eps {
            Ok(lo)
        } else {
            Err(Error::Domain { eigenvalue: lambda })
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Shannon => write!(f, "shannon"),
            Generator::Tsallis { alpha } => write!(f, "tsallis:{alpha}"),
            Generator::Quadratic => write!(f, "quadratic"),
            Generator::ELambda { lambda } => write!(f, "e_lambda:{lambda}"),
            Generator::Mixture { .. } => write!(f, "mixture"),
            Generator::Shifted { base, r } => write!(f, "shifted:{r}:{base}"),
        }
    }
}

/// Parses `shannon`, `quadratic`, `tsallis:α`, `e_lambda:λ`, `shifted:r:<gen>`
/// or a JSON object such as `{"name": "tsallis", "alpha": 2.5}`.
impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let g: Generator =
                serde_json::from_str(s).map_err(|e| Error::Parse(format!("generator: {e}")))?;
            g.validate()?;
            return Ok(g);
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad generator parameter {t:?}")))
        };
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let g = match (head, rest) {
            ("shannon", None) => Generator::Shannon,
            ("quadratic", None) => Generator::Quadratic,
            ("tsallis", Some(a)) => Generator::Tsallis { alpha: num(a)? },
            ("e_lambda", Some(l)) => Generator::ELambda { lambda: num(l)? },
            ("shifted", Some(r)) => {
                let (r, base) = r
                    .split_once(':')
                    .ok_or_else(|| Error::Parse("shifted:<r>:<generator>".into()))?;
                Generator::Shifted {
                    base: Box::new(base.parse()?),
                    r: num(r)?,
                }
            }
            _ => return Err(Error::Parse(format!("unknown generator {s:?}"))),
        };
        g.validate()?;
        Ok(g)
    }
}

/// The catalog of built-in generators with representative parameters.
pub fn builtin_generators() -> Vec<Generator> {
    vec![
        Generator::Shannon,
        Generator::Tsallis { alpha: 1.5 },
        Generator::Tsallis { alpha: 2.5 },
        Generator::Quadratic,
        Generator::ELambda { lambda: 1.0 },
        Generator::Mixture {
            affine: [0.0, 0.0],
            gamma: 1.0,
            measure: vec![
                Atom {
                    lambda: 0.1,
                    weight: 0.5,
                },
                Atom {
                    lambda: 10.0,
                    weight: 2.0,
                },
            ],
        },
    ]
}

/// `λ ↦ f((1 − r)/2 + r λ)`; its Bregman divergence is that of `f` after the
/// dilation by `r` around the center.
pub fn shifted_generator(f: &Generator, r: f64) -> Result<Generator> {
    if r == 1.0 {
        f.validate()?;
        return Ok(f.clone());
    }
    let g = Generator::Shifted {
        base: Box::new(f.clone()),
        r,
    };
    g.validate()?;
    Ok(g)
}

/// `tr[f(x)] = f(λ₋) + f(λ₊)`.
pub fn potential(f: &Generator, x: &SpinElement) -> Result<f64> {
    let (lo, hi) = eigenvalues(x);
    let lo = f.clamp(lo, EPS_POS)?;
    let hi = f.clamp(hi, EPS_POS)?;
    let v = f.f(lo) + f.f(hi);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain { eigenvalue: lo })
    }
}

/// Bregman divergence of the trace potential between two elements whose
/// spectra lie in the domain of `f`.
fn bregman_elements(f: &Generator, x: &SpinElement, y: &SpinElement) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    if x == y {
        return Ok(0.0);
    }
    let fx = potential(f, x)?;
    let dec = spectral_decompose(y);
    let mu_minus = f.clamp(dec.lambda_minus, EPS_POS)?;
    let mu_plus = f.clamp(dec.lambda_plus, EPS_POS)?;
    let fy = f.f(mu_minus) + f.f(mu_plus);
    // Weight of x on each eigen-idempotent of y.
    let p_minus = trace_inner(dec.sigma_minus.element(), x)?;
    let p_plus = trace_inner(dec.sigma_plus.element(), x)?;
    let mut linear = 0.0;
    for (mu, p) in [(mu_minus, p_minus), (mu_plus, p_plus)] {
        let g = f.f1(mu);
        let delta = p - mu;
        if g.is_infinite() {
            if delta > 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        linear += g * delta;
    }
    Ok((fx - fy - linear).max(0.0))
}

/// `D_F(ρ, σ) = F(ρ) − F(σ) − tr[f′(σ)•(ρ − σ)]`.
///
/// Returns `+∞` when `σ` sits on the edge of the domain of `f′` (for example
/// a pure `σ` with the Shannon generator) and `ρ` has weight on that edge.
pub fn bregman(f: &Generator, rho: &State, sigma: &State) -> Result<f64> {
    bregman_elements(f, rho.element(), sigma.element())
}

/// Bregman divergence of `tr[f(·)]` on the positive cone.
pub fn bregman_cone(f: &Generator, x: &SpinElement, y: &SpinElement) -> Result<f64> {
    for e in [x, y] {
        let (lo, _) = eigenvalues(e);
        if lo < -EPS_POS {
            return Err(Error::NotPositive { eigenvalue: lo });
        }
    }
    bregman_elements(f, x, y)
}

/// Information divergence `tr[x(ln x − ln y) − x + y]` on the positive cone.
pub fn information_divergence(x: &SpinElement, y: &SpinElement) -> Result<f64> {
    bregman_cone(&Generator::Shannon, x, y)
}

/// Hessian quadratic form `<h | H(z) | h>` of the trace potential at `z`.
///
/// Along `z + t h` the eigenvalues are `τ(t) ± r(t)` with `τ` affine, so the
/// second derivative is `f″(λ₊)(τ′ + r′)² + f″(λ₋)(τ′ − r′)² + (f′(λ₊) − f′(λ₋)) r″`.
pub fn hessian_form(f: &Generator, z: &SpinElement, h: &SpinElement) -> Result<f64> {
    check_dim(z.dim(), h.dim())?;
    let r = z.norm_v();
    let tau1 = h.s();
    let hh = dot(h.v(), h.v());
    let (lo, hi) = (z.s() - r, z.s() + r);
    for lam in [lo, hi] {
        if lam < f.domain_lower() {
            return Err(Error::Domain { eigenvalue: lam });
        }
    }
    let (f2_lo, f2_hi) = (f.f2(lo), f.f2(hi));
    if !(f2_lo.is_finite() && f2_hi.is_finite()) {
        let bad = if f2_lo.is_finite() { hi } else { lo };
        return Err(Error::Domain { eigenvalue: bad });
    }
    const SMALL_R: f64 = 1e-7;
    let value = if r > SMALL_R {
        let r1 = dot(z.v(), h.v()) / r;
        // (f′(λ₊) − f′(λ₋)) r″ with r″ = (‖h_v‖² − r′²)/r.
        let divided = (f.f1(hi) - f.f1(lo)) / (2.0 * r);
        f2_hi * (tau1 + r1).powi(2) + f2_lo * (tau1 - r1).powi(2) + 2.0 * divided * (hh - r1 * r1)
    } else {
        // Degenerate spectrum: the form is f″(s)·tr[h•h].
        let f2 = 0.5 * (f2_lo + f2_hi);
        2.0 * f2 * (tau1 * tau1 + hh)
    };
    Ok(value)
}

/// `D^F(x, y) = d²/ds² F((1 − s) x + s y)` at `s = 1`.
pub fn local_divergence(f: &Generator, x: &State, y: &State) -> Result<f64> {
    let h = x.element() - y.element();
    hessian_form(f, y.element(), &h)
}

/// `∫₀¹ D^F(x, x_s)/s ds` with `x_s = (1 − s) x + s y`.
pub fn integral_representation(f: &Generator, x: &State, y: &State) -> Result<f64> {
    integral_representation_with(f, x, y, &QuadratureOptions::default())
}

pub fn integral_representation_with(
    f: &Generator,
    x: &State,
    y: &State,
    opts: &QuadratureOptions,
) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    if x == y {
        return Ok(0.0);
    }
    let h = x.element() - y.element();
    // D^F(x, x_s) = s² <h|H(x_s)|h>, so the integrand is s <h|H(x_s)|h>.
    let integrand = |s: f64| -> Result<f64> {
        let xs = x.element().combine(1.0 - s, y.element(), s)?;
        Ok(s * hessian_form(f, &xs, &h)?)
    };
    integrate(integrand, 0.0, 1.0, opts)
}

/// `|Σ tᵢ D(ρᵢ, σ) − Σ tᵢ D(ρᵢ, ρ̄) − D(ρ̄, σ)|` with `ρ̄ = Σ tᵢ ρᵢ`.
pub fn bregman_identity_residual(
    f: &Generator,
    weights: &[f64],
    rhos: &[State],
    sigma: &State,
) -> Result<f64> {
    check_dim(weights.len(), rhos.len())?;
    let bar = State::barycenter(rhos, weights)?;
    let mut to_sigma = 0.0;
    let mut to_bar = 0.0;
    for (t, rho) in weights.iter().zip(rhos) {
        if *t == 0.0 {
            continue;
        }
        to_sigma += t * bregman(f, rho, sigma)?;
        to_bar += t * bregman(f, rho, &bar)?;
    }
    Ok((to_sigma - to_bar - bregman(f, &bar, sigma)?).abs())
}
