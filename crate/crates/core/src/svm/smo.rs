//! Sequential minimal optimization for the soft-margin dual
//!
//! ```text
//! max  W(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t. 0 <= a_i <= C,  sum a_i y_i = 0
//! ```
//!
//! Each iteration takes the most violating `i`, pairs it with the `j` giving
//! the largest second-order gain, and solves the two-variable subproblem
//! exactly, so `W` never decreases. Variables stuck at a bound are shrunk
//! out of the working set and checked again before stopping.

use serde::{Deserialize, Serialize};

use super::kernel::KernelRows;
use crate::scalar::Scalar;

/// What the solver did, for auditing convergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainingDiagnostics<T> {
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation `m(a) - M(a)` when the solver stopped.
    pub final_violation: T,
    /// Dual objective after every pass of `n` iterations, and at exit.
    pub objective_trace: Vec<T>,
}

pub(crate) struct Solution<T> {
    pub alpha: Vec<T>,
    /// Decision function is `sum a_i y_i K(x_i, x) - rho`.
    pub rho: T,
    pub diagnostics: TrainingDiagnostics<T>,
}

const TAU: f64 = 1e-12;

pub(crate) fn solve<T: Scalar>(
    kernel: &KernelRows<'_, T>,
    y: &[T],
    c: T,
    eps: T,
    max_passes: usize,
) -> Solution<T> {
    let n = y.len();
    debug_assert_eq!(kernel.len(), n);
    let max_iter = max_passes.saturating_mul(n.max(1));
    let tau = T::of(TAU);

    let mut alpha = vec![T::zero(); n];
    // v = -y G, where G = Qa - e is the gradient of the minimization form
    let mut v: Vec<T> = y.to_vec();
    // membership in I_up and I_low
    let mut up: Vec<bool> = y.iter().map(|&s| s > T::zero()).collect();
    let mut low: Vec<bool> = up.iter().map(|&u| !u).collect();
    let flags = |t: usize, a: T| {
        let (above, below) = (a > T::zero(), a < c);
        if y[t] > T::zero() {
            (below, above)
        } else {
            (above, below)
        }
    };

    let mut trace = vec![T::zero()];
    let mut iterations = 0;
    let mut converged = false;
    let mut violation = T::infinity();

    // variables that look settled at a bound are dropped from the working
    // set; their entries of v go stale until refreshed
    let mut active: Vec<usize> = (0..n).collect();
    let mut unshrunk = false;
    let shrink_every = n.clamp(1, 1000);
    let mut counter = shrink_every;

    // i maximizes v over I_up; j over I_low gives the best second-order
    // decrease; the smallest v over I_low decides convergence
    let select = |active: &[usize], v: &[T], up: &[bool], low: &[bool]| -> (usize, usize, T) {
        let mut g_max = T::neg_infinity();
        let mut i = usize::MAX;
        for &t in active {
            if up[t] && v[t] > g_max {
                g_max = v[t];
                i = t;
            }
        }
        if i == usize::MAX {
            return (i, usize::MAX, T::zero());
        }
        let diag = kernel.diagonal();
        kernel.with_row(i, |ki| {
            let kii = ki[i];
            let mut g_min = T::infinity();
            let mut best = T::infinity();
            let mut j = usize::MAX;
            for &t in active {
                if !low[t] {
                    continue;
                }
                let vt = v[t];
                if vt < g_min {
                    g_min = vt;
                }
                let b = g_max - vt;
                if b > T::zero() {
                    let mut a = kii + diag[t] - ki[t] - ki[t];
                    if a <= T::zero() {
                        a = tau;
                    }
                    let gain = -(b * b) / a;
                    if gain < best {
                        best = gain;
                        j = t;
                    }
                }
            }
            (i, j, g_max - g_min)
        })
    };

    while iterations < max_iter {
        counter -= 1;
        if counter == 0 {
            counter = shrink_every;
            let (mut g1, mut g2) = (T::neg_infinity(), T::neg_infinity());
            for &t in &active {
                if up[t] {
                    g1 = g1.max(v[t]);
                }
                if low[t] {
                    g2 = g2.max(-v[t]);
                }
            }
            if !unshrunk && g1 + g2 <= eps * T::of(10.0) {
                unshrunk = true;
                refresh(kernel, y, &alpha, &mut v, &active);
                active = (0..n).collect();
            }
            active.retain(|&t| match (up[t], low[t]) {
                (false, _) => v[t] <= g1,
                (_, false) => -v[t] <= g2,
                _ => true,
            });
        }

        let (mut i, mut j, mut gap) = select(&active, &v, &up, &low);
        if j == usize::MAX || gap < eps {
            if active.len() < n {
                refresh(kernel, y, &alpha, &mut v, &active);
                active = (0..n).collect();
                (i, j, gap) = select(&active, &v, &up, &low);
                counter = 1;
            }
            if j == usize::MAX || gap < eps {
                violation = if i == usize::MAX { T::zero() } else { gap };
                converged = true;
                break;
            }
        }
        violation = gap;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (gi, gj) = (-y[i] * v[i], -y[j] * v[j]);
        kernel.with_rows(i, j, |ki, kj| {
            let kij = ki[j];
            let mut quad = ki[i] + kj[j] - kij - kij;
            if quad <= T::zero() {
                quad = tau;
            }
            if y[i] != y[j] {
                let delta = (-gi - gj) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > T::zero() {
                    if alpha[j] < T::zero() {
                        alpha[j] = T::zero();
                        alpha[i] = diff;
                    }
                } else if alpha[i] < T::zero() {
                    alpha[i] = T::zero();
                    alpha[j] = -diff;
                }
                if diff > T::zero() {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (gi - gj) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < T::zero() {
                    alpha[i] = T::zero();
                    alpha[j] = sum;
                }
            }
            let di = (alpha[i] - old_i) * y[i];
            let dj = (alpha[j] - old_j) * y[j];
            for &t in &active {
                v[t] -= ki[t] * di + kj[t] * dj;
            }
        });
        (up[i], low[i]) = flags(i, alpha[i]);
        (up[j], low[j]) = flags(j, alpha[j]);

        iterations += 1;
        if iterations % n.max(1) == 0 {
            if active.len() < n {
                refresh(kernel, y, &alpha, &mut v, &active);
            }
            trace.push(dual_objective(&alpha, &gradient(y, &v)));
        }
    }
    if active.len() < n {
        refresh(kernel, y, &alpha, &mut v, &active);
    }
    let grad = gradient(y, &v);
    trace.push(dual_objective(&alpha, &grad));

    let rho = compute_rho(&alpha, &grad, y, c);
    Solution {
        alpha,
        rho,
        diagnostics: TrainingDiagnostics {
            iterations,
            converged,
            final_violation: violation,
            objective_trace: trace,
        },
    }
}

fn gradient<T: Scalar>(y: &[T], v: &[T]) -> Vec<T> {
    y.iter().zip(v).map(|(&s, &vt)| -s * vt).collect()
}

/// Recomputes `v_t = -y_t G_t` for every `t` outside `active`.
fn refresh<T: Scalar>(kernel: &KernelRows<'_, T>, y: &[T], alpha: &[T], v: &mut [T], active: &[usize]) {
    let n = y.len();
    let mut stale = vec![true; n];
    for &t in active {
        stale[t] = false;
    }
    let stale: Vec<usize> = (0..n).filter(|&t| stale[t]).collect();
    if stale.is_empty() {
        return;
    }
    let mut acc = vec![T::zero(); stale.len()];
    for s in (0..n).filter(|&s| alpha[s] > T::zero()) {
        let w = alpha[s] * y[s];
        kernel.with_row(s, |ks| {
            for (a, &t) in acc.iter_mut().zip(&stale) {
                *a += w * ks[t];
            }
        });
    }
    for (a, &t) in acc.iter().zip(&stale) {
        v[t] = -y[t] * (y[t] * *a - T::one());
    }
}

/// `W(a) = sum a - 1/2 a'Qa`, recovered from the gradient `G = Qa - e`.
pub(crate) fn dual_objective<T: Scalar>(alpha: &[T], grad: &[T]) -> T {
    let s: T = alpha.iter().zip(grad).map(|(&a, &g)| a * (g - T::one())).sum();
    -s / T::of(2.0)
}

fn compute_rho<T: Scalar>(alpha: &[T], grad: &[T], y: &[T], c: T) -> T {
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut free_sum = T::zero();
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        let positive = y[t] > T::zero();
        if alpha[t] >= c {
            if positive {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= T::zero() {
            if positive {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    if n_free > 0 {
        free_sum / T::of_usize(n_free)
    } else {
        (ub + lb) / T::of(2.0)
    }
}
