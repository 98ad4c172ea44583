//! Monotonicity of trace-form Bregman divergences under channels.
//!
//! On the interval `[0, 1]` (the one-dimensional spin factor) a symmetric
//! convex potential `F` gives a monotone divergence iff `y ↦ y² F″(y)` is
//! increasing, where `F(y) = f(y) + f(1 − y)`. For Tsallis generators this
//! reduces to the sign of `α + (2z + 2 − α) z^{α−3}` over `z > 0`, whose
//! minimum for `α ≥ 3` is `α − ((α − 3)/2)^{α−3}`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{petz_recovery, Channel};
use crate::divergence::{bregman, Generator};
use crate::error::{check_dim, Error, Result};
use crate::sampling::{random_channel, random_dilation, random_state, trial_rng};
use crate::spin::State;

/// Default excess tolerance for monotonicity checks.
pub const MONOTONE_TOL: f64 = 1e-9;
/// Default tolerance for equality detection.
pub const EQUALITY_TOL: f64 = 1e-8;

/// Which channels a Monte-Carlo run samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    /// Gaussian `(A, c)` rescaled to an image radius uniform in `[0.3, 1]`.
    General,
    /// Dilations around a random state with a uniform factor.
    Dilations,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub trial: u64,
    pub d: usize,
    pub channel: Channel,
    pub rho: State,
    pub sigma: State,
    pub d_before: f64,
    pub d_after: f64,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub generator: Generator,
    pub d: usize,
    pub trials: u64,
    pub seed: u64,
    pub tol: f64,
    pub family: ChannelFamily,
    pub violations: Vec<Violation>,
    /// Largest `D_after − D_before` over every trial with finite `D_before`.
    pub max_excess: f64,
}

/// Outcome of a single seeded trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub channel: Channel,
    pub rho: State,
    pub sigma: State,
    pub d_before: f64,
    pub d_after: f64,
}

impl Trial {
    pub fn excess(&self) -> f64 {
        self.d_after - self.d_before
    }
}

/// Regenerates trial `index` of a run; bit-identical across calls.
pub fn replay_trial(
    f: &Generator,
    d: usize,
    seed: u64,
    index: u64,
    family: ChannelFamily,
) -> Result<Trial> {
    let mut rng = trial_rng(seed, index);
    let channel = match family {
        ChannelFamily::General => random_channel(&mut rng, d),
        ChannelFamily::Dilations => random_dilation(&mut rng, d),
    };
    let rho = random_state(&mut rng, d);
    let sigma = random_state(&mut rng, d);
    let d_before = bregman(f, &rho, &sigma)?;
    let d_after = bregman(f, &channel.apply_state(&rho)?, &channel.apply_state(&sigma)?)?;
    Ok(Trial {
        channel,
        rho,
        sigma,
        d_before,
        d_after,
    })
}

/// Samples `trials` (channel, ρ, σ) triples and records every case with
/// `D_F(Φρ, Φσ) > D_F(ρ, σ) + tol`. Trials with infinite `D_F(ρ, σ)` never count.
pub fn empirical_monotonicity(
    f: &Generator,
    d: usize,
    trials: u64,
    seed: u64,
    tol: f64,
    family: ChannelFamily,
) -> Result<MonotonicityReport> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    f.validate()?;
    let outcomes: Vec<(u64, Trial)> = (0..trials)
        .into_par_iter()
        .map(|i| replay_trial(f, d, seed, i, family).map(|t| (i, t)))
        .collect::<Result<_>>()?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (i, t) in outcomes {
        if !t.d_before.is_finite() {
            continue;
        }
        let excess = t.excess();
        max_excess = max_excess.max(excess);
        if excess > tol {
            violations.push(Violation {
                trial: i,
                d,
                d_before: t.d_before,
                d_after: t.d_after,
                excess,
                channel: t.channel,
                rho: t.rho,
                sigma: t.sigma,
            });
        }
    }
    Ok(MonotonicityReport {
        generator: f.clone(),
        d,
        trials,
        seed,
        tol,
        family,
        violations,
        max_excess,
    })
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(sci).collect::<Vec<_>>().join(";")
}

/// Witness rows as CSV: `trial,d,excess,A,c,rho,sigma`. Vector columns are
/// `;`-separated (A row-major); floats carry 17 significant digits.
pub fn write_violations_csv<W: Write>(report: &MonotonicityReport, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "d", "excess", "A", "c", "rho", "sigma"])?;
    for v in &report.violations {
        w.write_record([
            v.trial.to_string(),
            v.d.to_string(),
            sci(v.excess),
            join(v.channel.a_rows().into_iter().flatten()),
            join(v.channel.offset().iter().copied()),
            join(v.rho.bloch().iter().copied()),
            join(v.sigma.bloch().iter().copied()),
        ])?;
    }
    w.flush()
}

/// A point `y` of `(0, 1)` stored together with `1 − y` so both ends keep
/// full relative precision.
#[derive(Clone, Copy, Debug, PartialEq)]
struct IntervalPoint {
    y: f64,
    ybar: f64,
}

impl IntervalPoint {
    /// Logistic parameterization `y = 1/(1 + e^{−t})`.
    fn logistic(t: f64) -> Self {
        Self {
            y: 1.0 / (1.0 + (-t).exp()),
            ybar: 1.0 / (1.0 + t.exp()),
        }
    }

    /// Image under the dilation by `r` around the endpoint `0` or `1`.
    fn dilate(self, r: f64, toward_one: bool) -> Self {
        if toward_one {
            Self {
                y: (1.0 - r) + r * self.y,
                ybar: r * self.ybar,
            }
        } else {
            Self {
                y: r * self.y,
                ybar: (1.0 - r) + r * self.ybar,
            }
        }
    }
}

fn logistic_grid(samples: usize, span: f64) -> Vec<IntervalPoint> {
    let n = samples.max(2);
    (0..n)
        .map(|k| IntervalPoint::logistic(-span + 2.0 * span * k as f64 / (n - 1) as f64))
        .collect()
}

/// `y² F″(y)` with `F″(y) = f″(y) + f″(1 − y)`.
fn weighted_curvature(f: &Generator, p: IntervalPoint) -> f64 {
    p.y * p.y * (f.f2(p.y) + f.f2(p.ybar))
}

/// Failure of the dilation criterion: `y₁ < y₂` but `y₁² F″(y₁) > y₂² F″(y₂)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionWitness {
    pub y1: f64,
    pub y2: f64,
    pub value1: f64,
    pub value2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub holds: bool,
    pub witness: Option<CriterionWitness>,
}

/// Checks that `y ↦ y² F″(y)` is non-decreasing on a grid of `samples`
/// points `y = 1/(1 + e^{−t})`, `t ∈ [−40, 40]`, which is log-spaced toward
/// both ends of the interval.
pub fn dilation_criterion(f: &Generator, samples: usize) -> CriterionResult {
    const REL: f64 = 1e-12;
    let grid = logistic_grid(samples, 40.0);
    let values: Vec<f64> = grid.iter().map(|&p| weighted_curvature(f, p)).collect();
    for k in 1..grid.len() {
        let (a, b) = (values[k - 1], values[k]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        if b < a - REL * a.abs() {
            return CriterionResult {
                holds: false,
                witness: Some(CriterionWitness {
                    y1: grid[k - 1].y,
                    y2: grid[k].y,
                    value1: a,
                    value2: b,
                }),
            };
        }
    }
    CriterionResult {
        holds: true,
        witness: None,
    }
}

/// `α + (2z + 2 − α) z^{α−3}`; its sign over `z > 0` decides dilation
/// monotonicity of the order-`α` divergence. `NaN` for `z ≤ 0`.
pub fn tsallis_sign_expression(alpha: f64, z: f64) -> f64 {
    if !(z > 0.0) {
        return f64::NAN;
    }
    alpha + (2.0 * z + 2.0 - alpha) * z.powf(alpha - 3.0)
}

/// `α − ((α − 3)/2)^{α−3}`, the minimum of the sign expression for `α ≥ 3`,
/// continued by its right limit `1` for the power at `α = 3`.
pub fn critical_function(alpha: f64) -> f64 {
    let base = 0.5 * (alpha - 3.0);
    let power = if base == 0.0 { 1.0 } else { base.powf(alpha - 3.0) };
    alpha - power
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalAlpha {
    pub alpha_star: f64,
    /// `|α* − ((α* − 3)/2)^{α*−3}|`.
    pub residual: f64,
    pub iterations: usize,
    /// z-derivative of the sign expression at `z = (α* − 3)/2`; zero at the minimizer.
    pub minimizer_residual: f64,
}

/// Root of [`critical_function`] on `(3, 10)`: bisection, then secant polish
/// until the residual is at most `tol`.
pub fn critical_alpha(tol: f64) -> Result<CriticalAlpha> {
    let g = critical_function;
    let (mut lo, mut hi) = (3.0_f64, 10.0_f64);
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo > 0.0 && ghi < 0.0) {
        return Err(Error::NonConvergence {
            residual: glo.min(ghi.abs()),
            iterations: 0,
        });
    }
    let mut iterations = 0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        let (ga, gb) = (g(a), g(b));
        if ga == gb {
            break;
        }
        x = b - gb * (b - a) / (gb - ga);
        iterations += 1;
        if g(x).abs() <= tol {
            break;
        }
        a = b;
        b = x;
    }
    let residual = g(x).abs();
    if residual > tol {
        return Err(Error::NonConvergence {
            residual,
            iterations,
        });
    }
    let z = 0.5 * (x - 3.0);
    let minimizer_residual =
        2.0 * z.powf(x - 3.0) + (2.0 * z + 2.0 - x) * (x - 3.0) * z.powf(x - 4.0);
    Ok(CriticalAlpha {
        alpha_star: x,
        residual,
        iterations,
        minimizer_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TsallisClass {
    pub alpha: f64,
    pub monotone: bool,
    pub reason: String,
}

/// Dilation monotonicity of the order-`α` Tsallis divergence:
/// monotone on `(0, 2] ∪ [3, α*]`, not monotone elsewhere.
pub fn tsallis_classification(alpha: f64) -> Result<TsallisClass> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "Tsallis order must be positive",
        });
    }
    let star = critical_alpha(1e-12)?.alpha_star;
    let (monotone, reason) = if alpha <= 2.0 {
        (true, "sign expression is positive for every z when alpha <= 2".to_string())
    } else if alpha < 3.0 {
        (
            false,
            "sign expression tends to -infinity as z -> 0 when 2 < alpha < 3".to_string(),
        )
    } else if alpha <= star {
        (
            true,
            format!("minimum alpha - ((alpha-3)/2)^(alpha-3) is non-negative for 3 <= alpha <= {star:.6}"),
        )
    } else {
        (
            false,
            format!("minimum alpha - ((alpha-3)/2)^(alpha-3) is negative for alpha > {star:.6}"),
        )
    };
    Ok(TsallisClass {
        alpha,
        monotone,
        reason,
    })
}

/// Grid for [`dilation_violation_search`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchGrid {
    /// Interval points per axis (logistic spacing over `t ∈ [−span, span]`).
    pub points: usize,
    pub span: f64,
    /// Dilation factors `r`, evenly spaced in `(0, 1)`.
    pub factors: usize,
    pub tol: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            points: 241,
            span: 12.0,
            factors: 99,
            tol: MONOTONE_TOL,
        }
    }
}

/// Interval pair and dilation whose divergence grows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DilationWitness {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    /// Dilation center, `0` or `1`.
    pub endpoint: f64,
    pub before: f64,
    pub after: f64,
    pub excess: f64,
}

impl DilationWitness {
    /// The witness as states of `JSpin_1` and a dilation channel.
    pub fn as_states(&self) -> Result<(State, State, Channel)> {
        let x = State::from_bloch(vec![self.x - 0.5])?;
        let y = State::from_bloch(vec![self.y - 0.5])?;
        let z = State::from_bloch(vec![self.endpoint - 0.5])?;
        Ok((x, y, Channel::dilation(&z, self.r)?))
    }
}

/// Bregman divergence of `F(y) = f(y) + f(1 − y)` on the interval.
fn interval_bregman(f: &Generator, x: IntervalPoint, y: IntervalPoint) -> f64 {
    let fx = f.f(x.y) + f.f(x.ybar);
    let fy = f.f(y.y) + f.f(y.ybar);
    let grad = f.f1(y.y) - f.f1(y.ybar);
    // x − y computed from whichever side keeps precision.
    let diff = if y.y < 0.5 { x.y - y.y } else { y.ybar - x.ybar };
    fx - fy - grad * diff
}

/// Deterministic grid search over interval states `x, y` and dilations by
/// `r` around `0` or `1` for `D_F(Φx, Φy) > D_F(x, y) + tol`. Returns the
/// witness with the largest excess.
pub fn dilation_violation_search(f: &Generator, grid: &SearchGrid) -> Option<DilationWitness> {
    let pts = logistic_grid(grid.points, grid.span);
    let m = grid.factors.max(1);
    let cases: Vec<(f64, bool)> = (1..=m)
        .flat_map(|k| {
            let r = k as f64 / (m + 1) as f64;
            [(r, false), (r, true)]
        })
        .collect();
    let best = cases
        .par_iter()
        .filter_map(|&(r, toward_one)| {
            let mut best: Option<DilationWitness> = None;
            for &x in &pts {
                let xd = x.dilate(r, toward_one);
                for &y in &pts {
                    let before = interval_bregman(f, x, y);
                    if !before.is_finite() {
                        continue;
                    }
                    let after = interval_bregman(f, xd, y.dilate(r, toward_one));
                    let excess = after - before;
                    if excess > grid.tol && best.as_ref().is_none_or(|b| excess > b.excess) {
                        best = Some(DilationWitness {
                            x: x.y,
                            y: y.y,
                            r,
                            endpoint: if toward_one { 1.0 } else { 0.0 },
                            before,
                            after,
                            excess,
                        });
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>();
    // Deterministic reduction independent of thread scheduling.
    best.into_iter().fold(None, |acc: Option<DilationWitness>, w| match acc {
        Some(a) if a.excess >= w.excess => Some(a),
        _ => Some(w),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EqualityReport {
    pub probes: usize,
    /// States with `|D_F(Φρ, Φσ) − D_F(ρ, σ)| ≤ tol`; `σ` itself is probed first.
    pub equality_states: Vec<State>,
    pub includes_sigma: bool,
    pub midpoint_checks: usize,
    pub midpoint_failures: usize,
    /// Largest `‖Ψ(Φρ) − ρ‖∞` over the equality states; `None` when `Φ(σ)`
    /// is singular and no recovery map exists.
    pub recovery_max_error: Option<f64>,
}

/// Probes the equality set `{ρ : D_F(Φρ, Φσ) = D_F(ρ, σ)}` with `samples`
/// random states, checks closure under midpoints of consecutive members, and
/// runs the Petz recovery map anchored at `σ` on every member.
pub fn equality_set_probe(
    f: &Generator,
    phi: &Channel,
    sigma: &State,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<EqualityReport> {
    check_dim(phi.dim(), sigma.dim())?;
    let d = sigma.dim();
    let phi_sigma = phi.apply_state(sigma)?;
    let is_equal = |rho: &State| -> Result<bool> {
        let before = bregman(f, rho, sigma)?;
        if !before.is_finite() {
            return Ok(false);
        }
        let after = bregman(f, &phi.apply_state(rho)?, &phi_sigma)?;
        Ok((after - before).abs() <= tol)
    };
    let mut probes = vec![sigma.clone()];
    let mut rng = trial_rng(seed, 0);
    probes.extend((0..samples).map(|_| random_state(&mut rng, d)));
    let mut members = Vec::new();
    for rho in &probes {
        if is_equal(rho)? {
            members.push(rho.clone());
        }
    }
    let includes_sigma = members.first() == Some(sigma);
    let mut midpoint_checks = 0;
    let mut midpoint_failures = 0;
    for pair in members.windows(2) {
        midpoint_checks += 1;
        if !is_equal(&pair[0].mix(&pair[1], 0.5)?)? {
            midpoint_failures += 1;
        }
    }
    let recovery_max_error = match petz_recovery(phi, sigma) {
        Ok(psi) => {
            let mut worst = 0.0_f64;
            for rho in &members {
                worst = worst.max(psi.round_trip(rho)?.max_abs_diff(rho.element()));
            }
            Some(worst)
        }
        Err(Error::Singular { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(EqualityReport {
        probes: probes.len(),
        equality_states: members,
        includes_sigma,
        midpoint_checks,
        midpoint_failures,
        recovery_max_error,
    })
}
