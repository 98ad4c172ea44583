//! Minimax regret `C_F = inf_σ sup_ρ D_F(ρ, σ)`.
//!
//! On the full ball the center is optimal, so `C_F = D_F(pure, center)`. For
//! a finite set of input states the capacity is the maximum over the simplex
//! of the concave `J(t) = Σ tᵢ F(ρᵢ) − F(ρ̄(t))`, solved here by Frank–Wolfe
//! with pairwise away steps. The linear subproblem picks `argmaxᵢ D_F(ρᵢ, ρ̄)`.

use serde::{Serialize, Serializer};

use crate::divergence::{bregman, potential, Generator};
use crate::error::{check_dim, Error, Result};
use crate::spin::{apply_function, trace_inner, SpinElement, State};

/// Default duality-gap tolerance.
pub const CAPACITY_TOL: f64 = 1e-7;
/// Default iteration budget.
pub const CAPACITY_MAX_ITER: usize = 100_000;
/// Smallest eigenvalue kept by damped steps when `f′` diverges at `0`.
pub const DAMPING_FLOOR: f64 = 1e-9;

fn finite_or_inf<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_infinite() && *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityResult {
    #[serde(serialize_with = "finite_or_inf")]
    pub value: f64,
    pub optimizer: State,
    pub weights: Vec<f64>,
    /// Upper bound on `C_F − value`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest `|J(t) − Σ tᵢ D_F(ρᵢ, ρ̄)|` seen over the iterates.
    pub identity_residual: f64,
    /// Gap after every iteration (index 0 is the starting point).
    #[serde(skip)]
    pub gap_history: Vec<f64>,
}

/// Closed form on the whole ball of `JSpin_d`: value `D_F(pure, center)`,
/// optimizer the center. The weights refer to the antipodal pair `±e₁/2`,
/// which already attains the capacity.
pub fn capacity_closed_form(f: &Generator, d: usize) -> Result<CapacityResult> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    f.validate()?;
    let center = State::center(d);
    let value = bregman(f, &State::basis_pure(d, 0)?, &center)?;
    Ok(CapacityResult {
        value,
        optimizer: center,
        weights: vec![0.5, 0.5],
        gap: 0.0,
        iterations: 0,
        converged: true,
        identity_residual: 0.0,
        gap_history: vec![0.0],
    })
}

fn check_states(states: &[State]) -> Result<usize> {
    let d = states.first().ok_or(Error::ZeroDimension)?.dim();
    for s in states {
        check_dim(d, s.dim())?;
    }
    Ok(d)
}

/// Largest `γ ∈ [0, γ_max]` keeping `λ_min((1 − γ) x + γ y) ≥ floor`, for
/// `x` already above the floor. `λ_min` is concave along the segment.
fn damped_cap(x: &State, y: &State, gamma_max: f64, floor: f64) -> Result<f64> {
    if x.min_eigenvalue() < floor || x.mix(y, gamma_max)?.min_eigenvalue() >= floor {
        return Ok(gamma_max);
    }
    let (mut lo, mut hi) = (0.0, gamma_max);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if x.mix(y, mid)?.min_eigenvalue() >= floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Root of a non-increasing `phi` on `[0, hi]`, or `hi` if `phi(hi) ≥ 0`.
fn line_search<F: FnMut(f64) -> Result<f64>>(mut phi: F, hi: f64) -> Result<f64> {
    if hi <= 0.0 {
        return Ok(0.0);
    }
    if phi(hi)? >= 0.0 {
        return Ok(hi);
    }
    if phi(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut up) = (0.0, hi);
    while up - lo > 1e-16 * hi.max(1.0) {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if phi(mid)? > 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    Ok(0.5 * (lo + up))
}

fn lowest_argmax(xs: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    xs.fold(None, |acc, (i, x)| match acc {
        Some((_, best)) if best >= x => acc,
        _ => Some((i, x)),
    })
}

fn lowest_argmin(xs: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    lowest_argmax(xs.map(|(i, x)| (i, -x))).map(|(i, x)| (i, -x))
}

/// Direction of a Frank–Wolfe or away step on the simplex.
enum Step {
    Toward(usize),
    Away(usize),
    /// Mass moved from the second vertex to the first.
    Pairwise(usize, usize),
}

impl Step {
    /// Vertex mixed in: `t + γ(e_s − t)` or `t + γ(t − e_a)`.
    fn apply(&self, t: &mut [f64], gamma: f64) {
        match *self {
            Step::Toward(s) => {
                for w in t.iter_mut() {
                    *w *= 1.0 - gamma;
                }
                t[s] += gamma;
            }
            Step::Away(a) => {
                for w in t.iter_mut() {
                    *w *= 1.0 + gamma;
                }
                t[a] -= gamma;
                if t[a] < 0.0 {
                    t[a] = 0.0;
                }
            }
            Step::Pairwise(s, a) => {
                let g = gamma.min(t[a]);
                t[s] += g;
                t[a] -= g;
            }
        }
    }

    fn gamma_max(&self, t: &[f64]) -> f64 {
        match *self {
            Step::Toward(_) => 1.0,
            Step::Away(a) if t[a] >= 1.0 => 0.0,
            Step::Away(a) => t[a] / (1.0 - t[a]),
            Step::Pairwise(_, a) => t[a],
        }
    }

    /// Barycenter at the far end `γ = γ_max` for `Toward`, or the reflected
    /// endpoint for `Away`, so the segment is `bar.mix(end, ·)`.
    fn end(&self, states: &[State], t: &[f64], bar: &State) -> Result<(State, f64)> {
        match *self {
            Step::Toward(s) => Ok((states[s].clone(), 1.0)),
            Step::Away(a) => {
                // bar + γ(bar − ρ_a) = bar.mix(end, γ/g) with end = bar + g(bar − ρ_a).
                let g = self.gamma_max(t);
                let v = bar
                    .bloch()
                    .iter()
                    .zip(states[a].bloch())
                    .map(|(b, r)| b + g * (b - r))
                    .collect();
                Ok((State::from_bloch_unchecked(v), g))
            }
            Step::Pairwise(s, a) => {
                let g = t[a];
                let v = bar
                    .bloch()
                    .iter()
                    .zip(states[s].bloch().iter().zip(states[a].bloch()))
                    .map(|(b, (rs, ra))| b + g * (rs - ra))
                    .collect();
                Ok((State::from_bloch_unchecked(v), g))
            }
        }
    }
}

/// Pair `(s, a)` with `a` active maximizing `(D_s − D_a)² / ‖ρ_s − ρ_a‖²`,
/// the gain of an exact step under a Euclidean curvature model. Nearly equal
/// inputs otherwise only trade weight through a distant vertex and zigzag.
fn best_pair(states: &[State], div: &[f64], t: &[f64]) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for (a, ra) in states.iter().enumerate().filter(|&(a, _)| t[a] > 0.0) {
        for (s, rs) in states.iter().enumerate() {
            let gain = div[s] - div[a];
            if gain <= 0.0 {
                continue;
            }
            let dist2: f64 = rs.bloch().iter().zip(ra.bloch()).map(|(x, y)| (x - y).powi(2)).sum();
            let score = gain * gain / dist2.max(f64::MIN_POSITIVE);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some(((s, a), score));
            }
        }
    }
    best.map(|(p, _)| p)
}

fn normalize(t: &mut [f64]) {
    let sum: f64 = t.iter().sum();
    for w in t.iter_mut() {
        *w /= sum;
    }
}

/// Capacity of a finite input set by Frank–Wolfe with pairwise away steps on
/// `J(t) = Σ tᵢ F(ρᵢ) − F(ρ̄)`. Starts from uniform weights; ties go to the
/// lowest index. Stops when `maxᵢ D_F(ρᵢ, ρ̄) − J(t) ≤ tol`; the reported
/// gap uses the smallest upper bound seen so far and is non-increasing.
pub fn capacity_finite(
    f: &Generator,
    states: &[State],
    tol: f64,
    max_iter: usize,
) -> Result<CapacityResult> {
    check_states(states)?;
    f.validate()?;
    let n = states.len();
    let potentials: Vec<f64> = states
        .iter()
        .map(|s| potential(f, s.element()))
        .collect::<Result<_>>()?;
    let damp = f.gradient_diverges_at_edge();
    let mut t = vec![1.0 / n as f64; n];
    let mut upper = f64::INFINITY;
    let mut gap_history = Vec::new();
    let mut identity_residual = 0.0_f64;
    let mut iterations = 0;
    let divergences = |bar: &State| -> Result<Vec<f64>> {
        states.iter().map(|r| bregman(f, r, bar)).collect()
    };
    loop {
        let bar = State::barycenter(states, &t)?;
        let div = divergences(&bar)?;
        let j = t.iter().zip(&potentials).map(|(w, p)| w * p).sum::<f64>()
            - potential(f, bar.element())?;
        let j_div: f64 = t.iter().zip(&div).filter(|(w, _)| **w > 0.0).map(|(w, d)| w * d).sum();
        identity_residual = identity_residual.max((j - j_div).abs());
        let (s, dmax) = lowest_argmax(div.iter().copied().enumerate()).expect("non-empty");
        upper = upper.min(dmax);
        let gap = (upper - j).max(0.0);
        gap_history.push(gap);
        let converged = gap <= tol;
        if converged || iterations >= max_iter {
            normalize(&mut t);
            return Ok(CapacityResult {
                value: j,
                optimizer: State::barycenter(states, &t)?,
                weights: t,
                gap,
                iterations,
                converged,
                identity_residual,
                gap_history,
            });
        }
        iterations += 1;
        let active = div.iter().copied().enumerate().filter(|&(i, _)| t[i] > 0.0);
        let (a, dmin) = lowest_argmin(active).expect("some weight is positive");
        let fw_gap = dmax - j_div;
        let away_gap = j_div - dmin;
        let step = if fw_gap >= away_gap || t[a] >= 1.0 || s == a {
            Step::Toward(s)
        } else {
            let (s, a) = best_pair(states, &div, &t).unwrap_or((s, a));
            Step::Pairwise(s, a)
        };
        let (end, scale) = step.end(states, &t, &bar)?;
        let mut hi = 1.0;
        if damp {
            hi = damped_cap(&bar, &end, hi, DAMPING_FLOOR)?;
        }
        // dJ/dγ along the step is Σ dᵢ D_F(ρᵢ, ρ̄(γ)), non-increasing in γ.
        let dir: Vec<f64> = match step {
            Step::Toward(s) => (0..n).map(|i| f64::from(i == s) - t[i]).collect(),
            Step::Away(a) => (0..n).map(|i| t[i] - f64::from(i == a)).collect(),
            Step::Pairwise(s, a) => (0..n).map(|i| f64::from(i == s) - f64::from(i == a)).collect(),
        };
        let slope = |u: f64| -> Result<f64> {
            let point = bar.mix(&end, u)?;
            let mut acc = 0.0;
            for (di, r) in dir.iter().zip(states) {
                if *di != 0.0 {
                    acc += di * bregman(f, r, &point)?;
                }
            }
            Ok(acc)
        };
        let u = line_search(slope, hi)?;
        let gamma = u * scale;
        step.apply(&mut t, gamma);
        if let Step::Away(a) | Step::Pairwise(_, a) = step {
            if u >= hi && hi == 1.0 {
                t[a] = 0.0;
            }
        }
        normalize(&mut t);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimaxReport {
    /// `C_F − Σ tᵢ D_F(ρᵢ, ρ̄) − D_F(ρ̄, σ_opt)`.
    pub redundancy_slack: f64,
    /// `maxᵢ D_F(ρᵢ, σ) − C_F − D_F(σ_opt, σ)`.
    pub maxred_slack: f64,
    pub passed: bool,
}

/// Slack tolerance of [`minimax_inequalities_check`].
pub const MINIMAX_SLACK: f64 = -1e-8;

/// Evaluates the two minimax inequalities for a mixture `weights` of the
/// inputs and a probe `sigma`, using `C_F` and `σ_opt` from `result`. The
/// redundancy bound uses the upper estimate `value + gap` of `C_F`.
pub fn minimax_inequalities_check(
    f: &Generator,
    states: &[State],
    result: &CapacityResult,
    weights: &[f64],
    sigma: &State,
) -> Result<MinimaxReport> {
    check_states(states)?;
    check_dim(states.len(), weights.len())?;
    let bar = State::barycenter(states, weights)?;
    let mut mix = 0.0;
    for (w, r) in weights.iter().zip(states) {
        if *w > 0.0 {
            mix += w * bregman(f, r, &bar)?;
        }
    }
    let redundancy_slack = result.value + result.gap - mix - bregman(f, &bar, &result.optimizer)?;
    let mut sup = f64::NEG_INFINITY;
    for r in states {
        sup = sup.max(bregman(f, r, sigma)?);
    }
    let to_probe = bregman(f, &result.optimizer, sigma)?;
    let maxred_slack = if sup.is_infinite() {
        f64::INFINITY
    } else {
        sup - result.value - to_probe
    };
    Ok(MinimaxReport {
        redundancy_slack,
        maxred_slack,
        passed: redundancy_slack >= MINIMAX_SLACK && maxred_slack >= MINIMAX_SLACK,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub point: State,
    pub weights: Vec<f64>,
    /// Frank–Wolfe gap `maxᵢ <∇F(σ) − ∇F(σ*), ρᵢ − σ*>`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `D_F(ρᵢ, σ) − D_F(ρᵢ, σ*) − D_F(σ*, σ)` per vertex.
    pub vertex_slacks: Vec<f64>,
}

impl Projection {
    /// Pythagorean slack at any point `rho` of the hull.
    pub fn slack(&self, f: &Generator, rho: &State, sigma: &State) -> Result<f64> {
        Ok(bregman(f, rho, sigma)? - bregman(f, rho, &self.point)? - bregman(f, &self.point, sigma)?)
    }

    pub fn min_slack(&self) -> f64 {
        self.vertex_slacks.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn gradient(f: &Generator, x: &SpinElement) -> Result<SpinElement> {
    apply_function(|t| f.f1(t), x)
}

/// Bregman projection `argmin_{ρ ∈ hull} D_F(ρ, σ)` by Frank–Wolfe with away
/// steps over the hull weights, with the Pythagorean certificate
/// `D_F(ρ, σ) ≥ D_F(ρ, σ*) + D_F(σ*, σ)` evaluated at every vertex.
pub fn bregman_project(
    f: &Generator,
    sigma: &State,
    polytope: &[State],
    tol: f64,
) -> Result<Projection> {
    bregman_project_with(f, sigma, polytope, tol, CAPACITY_MAX_ITER)
}

pub fn bregman_project_with(
    f: &Generator,
    sigma: &State,
    polytope: &[State],
    tol: f64,
    max_iter: usize,
) -> Result<Projection> {
    let d = check_states(polytope)?;
    check_dim(d, sigma.dim())?;
    f.validate()?;
    let n = polytope.len();
    let grad_sigma = gradient(f, sigma.element())?;
    let damp = f.gradient_diverges_at_edge();
    let mut t = vec![1.0 / n as f64; n];
    // Directional derivatives <∇F(ρ̄) − ∇F(σ), ρᵢ − ρ̄>.
    let slopes = |bar: &State| -> Result<Vec<f64>> {
        let g = &gradient(f, bar.element())? - &grad_sigma;
        polytope
            .iter()
            .map(|r| trace_inner(&g, &(r.element() - bar.element())))
            .collect()
    };
    let mut iterations = 0;
    loop {
        let bar = State::barycenter(polytope, &t)?;
        let g = slopes(&bar)?;
        let (s, gmin) = lowest_argmin(g.iter().copied().enumerate()).expect("non-empty");
        let gap = (-gmin).max(0.0);
        let converged = gap <= tol;
        if converged || iterations >= max_iter {
            normalize(&mut t);
            let point = State::barycenter(polytope, &t)?;
            let mut proj = Projection {
                point,
                weights: t,
                gap,
                iterations,
                converged,
                vertex_slacks: Vec::new(),
            };
            proj.vertex_slacks = polytope
                .iter()
                .map(|r| proj.slack(f, r, sigma))
                .collect::<Result<_>>()?;
            return Ok(proj);
        }
        iterations += 1;
        let active = g.iter().copied().enumerate().filter(|&(i, _)| t[i] > 0.0);
        let (a, gmax) = lowest_argmax(active).expect("some weight is positive");
        let step = if -gmin >= gmax || t[a] >= 1.0 {
            Step::Toward(s)
        } else {
            Step::Away(a)
        };
        let (end, scale) = step.end(polytope, &t, &bar)?;
        let mut hi = 1.0;
        if damp {
            hi = damped_cap(&bar, &end, hi, DAMPING_FLOOR)?;
        }
        let dir = end.element() - bar.element();
        // Negated derivative of D_F(ρ̄(u), σ): non-increasing in u.
        let slope = |u: f64| -> Result<f64> {
            let point = bar.mix(&end, u)?;
            let g = &gradient(f, point.element())? - &grad_sigma;
            Ok(-trace_inner(&g, &dir)?)
        };
        let u = line_search(slope, hi)?;
        step.apply(&mut t, u * scale);
        if let Step::Away(a) = step {
            if u >= hi && hi == 1.0 {
                t[a] = 0.0;
            }
        }
        normalize(&mut t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn st(v: &[f64]) -> State {
        State::from_bloch(v.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_values() {
        for d in 1..6 {
            let c = capacity_closed_form(&Generator::Shannon, d).unwrap();
            assert!((c.value - LN_2).abs() < 1e-12);
            assert!(c.optimizer.is_center(0.0));
        }
        let q = capacity_closed_form(&Generator::Quadratic, 2).unwrap();
        assert!((q.value - 0.5).abs() < 1e-14);
        let t2 = capacity_closed_form(&Generator::tsallis(2.0).unwrap(), 3).unwrap();
        assert!((t2.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn antipodal_pair() {
        let states = [st(&[0.5, 0.0]), st(&[-0.5, 0.0])];
        let r = capacity_finite(&Generator::Shannon, &states, CAPACITY_TOL, CAPACITY_MAX_ITER).unwrap();
        assert!(r.converged);
        assert!((r.value - LN_2).abs() < 1e-7);
        assert_eq!(r.weights, vec![0.5, 0.5]);
        assert!(r.optimizer.radius() < 1e-12);
    }

    #[test]
    fn single_state() {
        let r = capacity_finite(&Generator::Shannon, &[st(&[0.1, 0.2])], CAPACITY_TOL, 10).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.weights, vec![1.0]);
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn asymmetric_set_converges() {
        // Two pure states plus interior clutter: the optimum ignores the clutter.
        let states = [
            st(&[0.5, 0.0]),
            st(&[0.1, 0.1]),
            st(&[-0.5, 0.0]),
            st(&[0.0, -0.2]),
        ];
        let f = Generator::Shannon;
        let r = capacity_finite(&f, &states, 1e-9, CAPACITY_MAX_ITER).unwrap();
        assert!(r.converged, "gap {}", r.gap);
        assert!((r.value - LN_2).abs() < 1e-8);
        for w in r.gap_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(r.identity_residual < 1e-11);
        let check = minimax_inequalities_check(&f, &states, &r, &r.weights, &r.optimizer).unwrap();
        assert!(check.passed, "{check:?}");
    }

    #[test]
    fn projection_inside_is_identity() {
        let poly = [st(&[0.4, 0.0]), st(&[-0.3, 0.2]), st(&[0.0, -0.4])];
        let sigma = st(&[0.0, 0.0]);
        let p = bregman_project(&Generator::Shannon, &sigma, &poly, 1e-12).unwrap();
        assert!(p.point.element().max_abs_diff(sigma.element()) < 1e-6);
        assert!(p.min_slack() >= -1e-8);
    }

    #[test]
    fn quadratic_projection_is_euclidean() {
        let poly = [st(&[0.5, 0.0]), st(&[0.0, 0.5])];
        let sigma = st(&[0.0, 0.0]);
        let p = bregman_project(&Generator::Quadratic, &sigma, &poly, 1e-12).unwrap();
        assert!((p.point.bloch()[0] - 0.25).abs() < 1e-8);
        assert!((p.point.bloch()[1] - 0.25).abs() < 1e-8);
    }
}
