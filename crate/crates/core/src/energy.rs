//! Discrete p-Dirichlet energy on grid domains and its projected descent
//! minimizer.
//!
//! Per cell, the gradient is the multilinear-element gradient at the cell
//! center: along each axis the average of the `2^{dim-1}` edge differences.
//! The regularized objective is
//!
//! ```text
//! J(u) = (1/p) sum_cells (|g_c|^2 + eps^2)^{p/2} h^n  -  sum_v f_v u_v
//! ```
//!
//! with an optional nodal source `f`. The minimizer runs diagonally
//! preconditioned projected gradient descent with Armijo backtracking; it is
//! deliberately single-threaded so one solve is deterministic regardless of
//! the thread budget.

use crate::grid::GridDomain;

/// Node constraint: pinned to a value, or free within `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum NodeState {
    Pinned(f64),
    Free,
}

pub(crate) struct EnergyProblem<'a> {
    pub domain: &'a GridDomain,
    pub p: f64,
    pub epsilon: f64,
    pub states: Vec<NodeState>,
    /// Nodal linear source; empty means none.
    pub source: Vec<f64>,
    /// Box constraint for free nodes.
    pub lower: f64,
    pub upper: f64,
}

pub(crate) struct DescentReport {
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the projected objective gradient at exit.
    pub residual: f64,
    pub objective: f64,
}

impl<'a> EnergyProblem<'a> {
    /// Raw p-Dirichlet energy `sum |g_c|^p h^n` (no regularization, no
    /// source).
    pub fn raw_energy(&self, u: &[f64]) -> f64 {
        self.scan_cells(u, |acc, g2, _| acc + g2.powf(0.5 * self.p))
            * self.domain.spacing().powi(self.domain.dim() as i32)
    }

    /// Regularized objective `J(u)`.
    pub fn objective(&self, u: &[f64]) -> f64 {
        let hn = self.domain.spacing().powi(self.domain.dim() as i32);
        let e2 = self.epsilon * self.epsilon;
        let reg = self.scan_cells(u, |acc, g2, _| acc + (g2 + e2).powf(0.5 * self.p));
        let mut j = reg * hn / self.p;
        if !self.source.is_empty() {
            for (uv, fv) in u.iter().zip(&self.source) {
                j -= uv * fv;
            }
        }
        j
    }

    /// Folds `f(acc, |g_c|^2, cell)` over all cells.
    fn scan_cells<F: FnMut(f64, f64, usize) -> f64>(&self, u: &[f64], mut f: F) -> f64 {
        let dim = self.domain.dim();
        let offs = self.domain.corner_offsets();
        let inv = 1.0 / ((1usize << (dim - 1)) as f64 * self.domain.spacing());
        let mut acc = 0.0;
        for cell in 0..self.domain.cell_count() {
            let base = self.domain.cell_base_node(cell);
            let mut g2 = 0.0;
            for a in 0..dim {
                let mut diff = 0.0;
                for (k, &off) in offs.iter().enumerate() {
                    let s = if k & (1 << a) != 0 { 1.0 } else { -1.0 };
                    diff += s * u[base + off];
                }
                let ga = diff * inv;
                g2 += ga * ga;
            }
            acc = f(acc, g2, cell);
        }
        acc
    }

    /// Objective gradient and a diagonal curvature estimate, fused in one
    /// cell sweep.
    fn gradient(&self, u: &[f64], grad: &mut [f64], diag: &mut [f64]) {
        let dim = self.domain.dim();
        let n = self.domain.node_count();
        grad[..n].fill(0.0);
        diag[..n].fill(0.0);
        let offs = self.domain.corner_offsets();
        let h = self.domain.spacing();
        let hn = h.powi(dim as i32);
        let inv = 1.0 / ((1usize << (dim - 1)) as f64 * h);
        let e2 = self.epsilon * self.epsilon;
        let half_pm2 = 0.5 * self.p - 1.0;
        // |dg/du_v|^2 summed over axes, constant on the regular grid
        let dg2 = dim as f64 * inv * inv;
        let mut g = [0.0f64; 4];
        for cell in 0..self.domain.cell_count() {
            let base = self.domain.cell_base_node(cell);
            let mut g2 = 0.0;
            for (a, ga) in g.iter_mut().enumerate().take(dim) {
                let mut diff = 0.0;
                for (k, &off) in offs.iter().enumerate() {
                    let s = if k & (1 << a) != 0 { 1.0 } else { -1.0 };
                    diff += s * u[base + off];
                }
                *ga = diff * inv;
                g2 += *ga * *ga;
            }
            let w = (g2 + e2).powf(half_pm2);
            let cdiag = w * dg2 * hn;
            for (k, &off) in offs.iter().enumerate() {
                let mut dot = 0.0;
                for a in 0..dim {
                    let s = if k & (1 << a) != 0 { 1.0 } else { -1.0 };
                    dot += s * g[a];
                }
                grad[base + off] += w * dot * inv * hn;
                diag[base + off] += cdiag;
            }
        }
        if !self.source.is_empty() {
            for v in 0..n {
                grad[v] -= self.source[v];
            }
        }
    }

    /// Flux residual `(1/p) d(sum |g_c|^p h^n)/du_v`: the discrete
    /// `-div(|grad u|^{p-2} grad u)` tested against the nodal basis.
    pub fn flux_residual(&self, u: &[f64]) -> Vec<f64> {
        let dim = self.domain.dim();
        let mut res = vec![0.0; self.domain.node_count()];
        let offs = self.domain.corner_offsets();
        let h = self.domain.spacing();
        let hn = h.powi(dim as i32);
        let inv = 1.0 / ((1usize << (dim - 1)) as f64 * h);
        let half_pm2 = 0.5 * self.p - 1.0;
        let mut g = [0.0f64; 4];
        for cell in 0..self.domain.cell_count() {
            let base = self.domain.cell_base_node(cell);
            let mut g2 = 0.0;
            for (a, ga) in g.iter_mut().enumerate().take(dim) {
                let mut diff = 0.0;
                for (k, &off) in offs.iter().enumerate() {
                    let s = if k & (1 << a) != 0 { 1.0 } else { -1.0 };
                    diff += s * u[base + off];
                }
                *ga = diff * inv;
                g2 += *ga * *ga;
            }
            if g2 == 0.0 {
                continue;
            }
            let w = g2.powf(half_pm2);
            for (k, &off) in offs.iter().enumerate() {
                let mut dot = 0.0;
                for a in 0..dim {
                    let s = if k & (1 << a) != 0 { 1.0 } else { -1.0 };
                    dot += s * g[a];
                }
                res[base + off] += w * dot * inv * hn;
            }
        }
        res
    }

    /// Applies pins and clamps free nodes into `[lower, upper]`.
    pub fn project(&self, u: &mut [f64]) {
        for (v, s) in self.states.iter().enumerate() {
            match s {
                NodeState::Pinned(val) => u[v] = *val,
                NodeState::Free => u[v] = u[v].clamp(self.lower, self.upper),
            }
        }
    }

    /// Projected, diagonally preconditioned gradient descent with Armijo
    /// backtracking. `u` carries the initial iterate in and the minimizer
    /// out. `tolerance` is an absolute bound on the projected-gradient
    /// sup-norm scaled by the diagonal (a quasi-Newton step size).
    pub fn minimize(&self, u: &mut [f64], max_iterations: usize, tolerance: f64) -> DescentReport {
        let n = self.domain.node_count();
        assert_eq!(u.len(), n);
        self.project(u);
        let mut grad = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut obj = self.objective(u);
        let mut alpha = 1.0f64;
        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        let armijo = 1e-4;
        let diag_floor = 1e-300;
        let mut stagnant = 0usize;

        while iterations < max_iterations {
            self.gradient(u, &mut grad, &mut diag);
            // projected residual: pins drop out, clamped nodes only count
            // when the gradient pushes inward
            residual = 0.0;
            for v in 0..n {
                match self.states[v] {
                    NodeState::Pinned(_) => {}
                    NodeState::Free => {
                        let step = grad[v] / diag[v].max(diag_floor);
                        let blocked_low = u[v] <= self.lower && grad[v] > 0.0;
                        let blocked_high = u[v] >= self.upper && grad[v] < 0.0;
                        if !(blocked_low || blocked_high) {
                            residual = residual.max(step.abs());
                        }
                    }
                }
            }
            if residual <= tolerance {
                return DescentReport {
                    iterations,
                    converged: true,
                    residual,
                    objective: obj,
                };
            }

            alpha = (alpha * 1.8).min(1.0);
            let mut accepted = false;
            while alpha > 1e-12 {
                for v in 0..n {
                    trial[v] = match self.states[v] {
                        NodeState::Pinned(val) => val,
                        NodeState::Free => (u[v]
                            - alpha * grad[v] / diag[v].max(diag_floor))
                        .clamp(self.lower, self.upper),
                    };
                }
                let obj_try = self.objective(&trial);
                let mut decrease = 0.0;
                for v in 0..n {
                    decrease += grad[v] * (u[v] - trial[v]);
                }
                if obj_try <= obj - armijo * decrease {
                    let drop = obj - obj_try;
                    u.copy_from_slice(&trial);
                    obj = obj_try;
                    accepted = true;
                    // objective differences at the floating-point floor mean
                    // the iterate is stationary for all practical purposes
                    if drop <= 1e-15 * (1.0 + obj.abs()) {
                        stagnant += 1;
                    } else {
                        stagnant = 0;
                    }
                    break;
                }
                alpha *= 0.5;
            }
            iterations += 1;
            if !accepted || stagnant >= 10 {
                // line search exhausted or objective no longer moving
                return DescentReport {
                    iterations,
                    converged: true,
                    residual,
                    objective: obj,
                };
            }
        }
        DescentReport {
            iterations,
            converged: false,
            residual,
            objective: obj,
        }
    }
}
