//! Shared machinery for maximizing the two log-likelihoods over a restricted
//! parameter space.
//!
//! Both models have likelihood equations of the form
//! `d_i = e^{beta_i} * S_i(beta)` with `S_i` a sum over the other nodes, so a
//! single solver handles both: coordinates are partitioned into frozen
//! coordinates and free groups sharing one value, and each group solves the
//! aggregated equation `sum_{i in g} d_i = sum_{i in g} e^{beta_i} S_i`.

use crate::error::{Result, WilksError};
use crate::numerics::{cholesky_solve, Tolerance};
use crate::params::{NullHypothesis, NullKind};

/// Sup-norm bound on free parameters past which the MLE is declared nonexistent.
pub(crate) const DIVERGENCE_BOUND: f64 = 30.0;
/// Window (in iterations) for stall detection before switching to Newton.
pub(crate) const STALL_WINDOW: usize = 50;
/// Residual must shrink by at least this factor per window to count as progress.
const WINDOW_CONTRACTION: f64 = 0.5;
const MAX_HALVINGS: usize = 40;
/// Newton steps taken after the tolerance is met, to push the residual toward rounding level.
const POLISH_STEPS: usize = 2;

/// A likelihood whose equations read `suff_i = e^{beta_i} * pair_sum_i(e^beta)`.
pub(crate) trait ExpFamily {
    fn n(&self) -> usize;
    /// Sufficient statistic `d_i`.
    fn suff(&self, i: usize) -> f64;
    /// Largest attainable value of `d_i`.
    fn suff_max(&self, i: usize) -> f64;
    /// `S_i` evaluated at `x = e^beta`.
    fn pair_sums(&self, x: &[f64]) -> Vec<f64>;
    /// Entry `(i, j)`, `i != j`, of the negative Hessian at `x = e^beta`.
    fn hessian_offdiag(&self, x: &[f64], i: usize, j: usize) -> f64;
    /// Whether the likelihood is unchanged by adding a constant to every parameter.
    fn shift_invariant(&self) -> bool {
        false
    }
    /// Starting point used when the caller gives none.
    fn initial_guess(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Partition of the coordinates into frozen values and free tied groups.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    groups: Vec<Vec<usize>>,
    group_of: Vec<Option<usize>>,
    base: Vec<f64>,
    /// Pinned coordinate, when it is the only frozen one.
    sole_pin: Option<usize>,
}

impl Layout {
    /// `pinned` is a coordinate frozen at zero (the Bradley–Terry reference).
    pub(crate) fn new(n: usize, null: Option<&NullHypothesis>, pinned: Option<usize>) -> Layout {
        let mut frozen = vec![false; n];
        let mut base = vec![0.0; n];
        let mut tied: Vec<usize> = Vec::new();
        if let Some(p) = pinned {
            frozen[p] = true;
        }
        if let Some(h) = null {
            match h.kind() {
                NullKind::Specified => {
                    for (&i, &v) in h.indices().iter().zip(h.values()) {
                        frozen[i] = true;
                        base[i] = v;
                    }
                }
                NullKind::Homogeneous => {
                    if pinned.is_some_and(|p| h.indices().contains(&p)) {
                        // tied to the reference, hence all pinned at zero
                        for &i in h.indices() {
                            frozen[i] = true;
                        }
                    } else {
                        tied = h.indices().to_vec();
                    }
                }
            }
        }
        let mut groups = Vec::new();
        let mut group_of = vec![None; n];
        let mut tied_group = None;
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            if tied.binary_search(&i).is_ok() {
                match tied_group {
                    Some(g) => {
                        let members: &mut Vec<usize> = &mut groups[g];
                        members.push(i);
                        group_of[i] = Some(g);
                    }
                    None => {
                        tied_group = Some(groups.len());
                        group_of[i] = Some(groups.len());
                        groups.push(vec![i]);
                    }
                }
            } else {
                group_of[i] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
        let n_frozen = frozen.iter().filter(|&&f| f).count();
        let sole_pin = pinned.filter(|_| n_frozen == 1);
        Layout {
            groups,
            group_of,
            base,
            sole_pin,
        }
    }

    pub(crate) fn n_free(&self) -> usize {
        self.groups.len()
    }

    fn expand(&self, theta: &[f64]) -> Vec<f64> {
        self.group_of
            .iter()
            .zip(&self.base)
            .map(|(g, &b)| g.map_or(b, |g| theta[g]))
            .collect()
    }

    fn project(&self, beta: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .map(|members| members.iter().map(|&i| beta[i]).sum::<f64>() / members.len() as f64)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub residual_inf: f64,
}

struct State {
    theta: Vec<f64>,
    beta: Vec<f64>,
    x: Vec<f64>,
    sums: Vec<f64>,
    residual: Vec<f64>,
    res_inf: f64,
}

fn evaluate<M: ExpFamily>(model: &M, layout: &Layout, group_suff: &[f64], theta: Vec<f64>) -> State {
    let beta = layout.expand(&theta);
    let x: Vec<f64> = beta.iter().map(|b| b.exp()).collect();
    let sums = model.pair_sums(&x);
    let residual: Vec<f64> = layout
        .groups
        .iter()
        .zip(group_suff)
        .map(|(members, &d)| d - members.iter().map(|&i| x[i] * sums[i]).sum::<f64>())
        .collect();
    let res_inf = residual.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    State {
        theta,
        beta,
        x,
        sums,
        residual,
        res_inf,
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, t| m.max(t.abs()))
}

fn diverged(theta: &[f64]) -> Result<()> {
    if theta.iter().any(|t| !t.is_finite()) || sup_norm(theta) > DIVERGENCE_BOUND {
        return Err(WilksError::MleNonexistent(format!(
            "parameter iterates left the ball of radius {DIVERGENCE_BOUND}"
        )));
    }
    Ok(())
}

/// Solves the (restricted) likelihood equations. `start` is a full-length
/// vector whose free coordinates seed the iteration (group means for tied blocks).
pub(crate) fn solve<M: ExpFamily>(model: &M, layout: &Layout, start: Option<&[f64]>, tol: &Tolerance) -> Result<Solution> {
    tol.validate()?;
    let n = model.n();
    let group_suff: Vec<f64> = layout
        .groups
        .iter()
        .map(|m| m.iter().map(|&i| model.suff(i)).sum())
        .collect();
    for (members, &d) in layout.groups.iter().zip(&group_suff) {
        let cap: f64 = members.iter().map(|&i| model.suff_max(i)).sum();
        if d <= 0.0 || d >= cap {
            let who = members.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
            return Err(WilksError::MleNonexistent(format!(
                "sufficient statistic of node(s) {who} is at its boundary ({d} of {cap})"
            )));
        }
    }
    let theta0 = match start {
        Some(s) if s.len() == n => layout.project(s),
        Some(s) => return Err(WilksError::DimensionMismatch { expected: n, found: s.len() }),
        None => match model.initial_guess() {
            Some(g) => layout.project(&g),
            None => vec![0.0; layout.n_free()],
        },
    };
    let mut state = evaluate(model, layout, &group_suff, theta0);
    if layout.n_free() == 0 {
        return Ok(Solution {
            beta: state.beta,
            iterations: 0,
            residual_inf: 0.0,
        });
    }

    // Update every coordinate, the pin included, then shift back so the pin is
    // zero again. Only valid for shift-invariant likelihoods with no other
    // frozen coordinate; it removes the slowly converging common-shift mode.
    let renormalize_on = layout.sole_pin.filter(|_| model.shift_invariant());
    let pin_suff = renormalize_on.map(|p| model.suff(p));

    let mut best = state.res_inf;
    let mut since_progress = 0;
    let mut history = vec![state.res_inf];
    let mut use_newton = false;
    let mut iterations = 0;
    while state.res_inf > tol.abs_eps {
        if iterations >= tol.max_iter {
            return Err(WilksError::MleNonexistent(format!(
                "no convergence after {} iterations (residual {:e})",
                tol.max_iter, state.res_inf
            )));
        }
        iterations += 1;
        let next = if use_newton {
            newton_step(model, layout, &group_suff, &state)?
        } else {
            let shift = match (renormalize_on, pin_suff) {
                (Some(p), Some(d)) => d.ln() - state.sums[p].ln() + state.beta[p],
                _ => 0.0,
            };
            let theta: Vec<f64> = layout
                .groups
                .iter()
                .zip(&group_suff)
                .map(|(members, &d)| d.ln() - members.iter().map(|&i| state.sums[i]).sum::<f64>().ln() - shift)
                .collect();
            diverged(&theta)?;
            evaluate(model, layout, &group_suff, theta)
        };
        state = next;
        history.push(state.res_inf);
        if state.res_inf < best * (1.0 - tol.rel_eps) {
            best = state.res_inf;
            since_progress = 0;
        } else {
            since_progress += 1;
        }
        if !use_newton {
            let slow = history.len() > STALL_WINDOW
                && state.res_inf > WINDOW_CONTRACTION * history[history.len() - 1 - STALL_WINDOW];
            if since_progress >= STALL_WINDOW || slow {
                use_newton = true;
            }
        }
    }
    for _ in 0..POLISH_STEPS {
        match newton_step(model, layout, &group_suff, &state) {
            Ok(next) if next.res_inf < state.res_inf => state = next,
            _ => break,
        }
    }
    Ok(Solution {
        beta: state.beta,
        iterations,
        residual_inf: state.res_inf,
    })
}

/// Damped Newton step on the group parameters with residual-norm halving.
fn newton_step<M: ExpFamily>(model: &M, layout: &Layout, group_suff: &[f64], state: &State) -> Result<State> {
    let n = model.n();
    let m = layout.n_free();
    let mut h = vec![0.0; m * m];
    for i in 0..n {
        let Some(gi) = layout.group_of[i] else { continue };
        for j in 0..n {
            if j == i {
                continue;
            }
            let v = model.hessian_offdiag(&state.x, i, j);
            // both models have H_ii = sum_j |H_ij|
            h[gi * m + gi] += v.abs();
            if let Some(gj) = layout.group_of[j] {
                h[gi * m + gj] += v;
            }
        }
    }
    let step = cholesky_solve(&mut h, m, &state.residual)?;
    let mut scale = 1.0;
    for _ in 0..MAX_HALVINGS {
        let theta: Vec<f64> = state.theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
        if sup_norm(&theta) <= DIVERGENCE_BOUND {
            let trial = evaluate(model, layout, group_suff, theta);
            if trial.res_inf < state.res_inf {
                return Ok(trial);
            }
        }
        scale *= 0.5;
    }
    let theta: Vec<f64> = state.theta.iter().zip(&step).map(|(t, s)| t + s).collect();
    diverged(&theta)?;
    Err(WilksError::MleNonexistent("Newton line search failed to reduce the residual".into()))
}
