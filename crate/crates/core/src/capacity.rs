//! Variational p-capacity of discretized condensers.
//!
//! `cap_p(K, Omega)` is the infimum of `integral |grad u|^p` over fields
//! with `u = 1` on the compact `K` and `u = 0` on the domain boundary. Here
//! `Omega` is a masked grid, `K` a node set strictly inside it, and the
//! infimum runs over nodal fields in `[0, 1]` via the regularized energy of
//! [`crate::energy`]. The reported value is the unregularized energy of the
//! minimizer; the flux residual at the pinned nodes is the capacitary
//! distribution.

use crate::energy::{EnergyProblem, NodeState};
use crate::error::Error;
use crate::geometry::{unit_sphere_area, Point};
use crate::grid::GridDomain;
use crate::measure::{GridPart, RadonMeasure};
use crate::Result;
use rayon::prelude::*;

/// A discretized condenser `(K, Omega)`.
#[derive(Clone, Debug)]
pub struct CondenserProblem {
    pub domain: GridDomain,
    /// Node-level indicator of `K`.
    pub inner_mask: Vec<bool>,
    pub p: f64,
    /// Gradient regularization; defaults to `1e-6 / h`.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Convergence bound on the preconditioned projected-gradient sup-norm.
    pub tolerance: f64,
}

impl CondenserProblem {
    pub fn new(domain: GridDomain, inner_mask: Vec<bool>, p: f64) -> Result<Self> {
        let n = domain.dim();
        if !(p > 1.0 && p <= n as f64) {
            return Err(Error::ParameterDomain(format!("p = {p} outside (1, {n}]")));
        }
        if inner_mask.len() != domain.node_count() {
            return Err(Error::Geometry("inner mask length mismatch".into()));
        }
        let epsilon = 1e-6 / domain.spacing();
        let prob = CondenserProblem {
            domain,
            inner_mask,
            p,
            epsilon,
            max_iterations: 6000,
            tolerance: 1e-7,
        };
        prob.validate()?;
        Ok(prob)
    }

    /// Spherical condenser fixture: `K = closed ball r`, `Omega = ball R`.
    pub fn spherical(n: usize, p: f64, r: f64, rr: f64, cells_per_axis: usize) -> Result<Self> {
        if !(0.0 < r && r < rr) {
            return Err(Error::ParameterDomain("need 0 < r < R".into()));
        }
        let center = Point::origin(n)?;
        let domain = GridDomain::ball(center, rr, cells_per_axis)?;
        let mask: Vec<bool> = (0..domain.node_count())
            .map(|i| domain.node_pos(i).dist(&center) <= r)
            .collect();
        CondenserProblem::new(domain, mask, p)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_max_iterations(mut self, iters: usize) -> Self {
        self.max_iterations = iters;
        self
    }

    /// `K` must avoid the boundary and keep one node of clearance, so the
    /// condenser has somewhere to drop from 1 to 0.
    fn validate(&self) -> Result<()> {
        let g = &self.domain;
        let dim = g.dim();
        let strides = g.node_strides();
        for v in 0..g.node_count() {
            if !self.inner_mask[v] {
                continue;
            }
            if g.is_boundary(v) {
                return Err(Error::Geometry(
                    "inner set touches the domain boundary".into(),
                ));
            }
            let multi = g.node_multi(v);
            for a in 0..dim {
                for dir in [-1isize, 1] {
                    let m = multi[a] as isize + dir;
                    if m < 0 || m > g.cells()[a] as isize {
                        return Err(Error::Geometry(
                            "inner set touches the domain boundary".into(),
                        ));
                    }
                    let w = (v as isize + dir * strides[a] as isize) as usize;
                    if g.is_boundary(w) {
                        return Err(Error::Geometry(
                            "inner set touches the domain boundary".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn energy_problem(&self) -> EnergyProblem<'_> {
        let states: Vec<NodeState> = (0..self.domain.node_count())
            .map(|v| {
                if self.inner_mask[v] {
                    NodeState::Pinned(1.0)
                } else if self.domain.is_boundary(v) {
                    NodeState::Pinned(0.0)
                } else {
                    NodeState::Free
                }
            })
            .collect();
        EnergyProblem {
            domain: &self.domain,
            p: self.p,
            epsilon: self.epsilon,
            states,
            source: Vec::new(),
            lower: 0.0,
            upper: 1.0,
        }
    }
}

/// Capacity value with the minimizing field and solver diagnostics.
#[derive(Clone, Debug)]
pub struct CapacityResult {
    /// Unregularized discrete energy of the minimizer.
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub iterations: usize,
    /// Preconditioned projected-gradient sup-norm at exit.
    pub residual: f64,
    pub converged: bool,
}

/// Minimizes the condenser energy from a zero initial field.
pub fn capacity(problem: &CondenserProblem) -> Result<CapacityResult> {
    let u0 = vec![0.0; problem.domain.node_count()];
    capacity_with_initial(problem, u0)
}

/// Minimizes from a caller-supplied initial field (e.g. a prolongated
/// coarse-grid solution).
pub fn capacity_with_initial(problem: &CondenserProblem, mut u: Vec<f64>) -> Result<CapacityResult> {
    if u.len() != problem.domain.node_count() {
        return Err(Error::Geometry("initial field length mismatch".into()));
    }
    if !problem.inner_mask.iter().any(|&b| b) {
        return Ok(CapacityResult {
            value: 0.0,
            minimizer: vec![0.0; problem.domain.node_count()],
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let ep = problem.energy_problem();
    let report = ep.minimize(&mut u, problem.max_iterations, problem.tolerance);
    Ok(CapacityResult {
        value: ep.raw_energy(&u),
        minimizer: u,
        iterations: report.iterations,
        residual: report.residual,
        converged: report.converged,
    })
}

/// Closed-form capacity of the radial condenser `(ball r, ball R)`:
///
/// ```text
/// p < n:  |S^{n-1}| ((n-p)/(p-1))^{p-1} (r^{-(n-p)/(p-1)} - R^{-(n-p)/(p-1)})^{1-p}
/// p = n:  |S^{n-1}| (log(R/r))^{1-n}
/// ```
pub fn capacity_sphere_closed_form(n: usize, p: f64, r: f64, rr: f64) -> Result<f64> {
    if !(2..=4).contains(&n) {
        return Err(Error::ParameterDomain(format!("dimension {n} unsupported")));
    }
    if !(p > 1.0 && p <= n as f64) {
        return Err(Error::ParameterDomain(format!("p = {p} outside (1, {n}]")));
    }
    if !(0.0 < r && r < rr) {
        return Err(Error::ParameterDomain("need 0 < r < R".into()));
    }
    let area = unit_sphere_area(n);
    if p == n as f64 {
        return Ok(area * (rr / r).ln().powi(1 - n as i32));
    }
    let kappa = (n as f64 - p) / (p - 1.0);
    Ok(area * kappa.powf(p - 1.0) * (r.powf(-kappa) - rr.powf(-kappa)).powf(1.0 - p))
}

/// Capacitary distribution extracted from a converged solve.
#[derive(Clone, Debug)]
pub struct CapacitaryDistribution {
    /// The distribution as a grid-part measure over the condenser domain.
    pub measure: RadonMeasure,
    pub total_mass: f64,
    /// Negative residual mass that was clipped away.
    pub clipped: f64,
}

/// Discrete divergence of `|grad u|^{p-2} grad u` collected per cell. The
/// residual concentrates where the minimizer is pinned at 1; domain-boundary
/// outflux is excluded. More than 2% of the value in clipped negative
/// residuals flags a discretization failure.
pub fn capacitary_distribution(
    problem: &CondenserProblem,
    result: &CapacityResult,
) -> Result<CapacitaryDistribution> {
    if !result.converged {
        return Err(Error::Precondition(
            "capacitary distribution needs a converged solve".into(),
        ));
    }
    let g = &problem.domain;
    let dim = g.dim();
    if !problem.inner_mask.iter().any(|&b| b) {
        let masses = vec![0.0; g.cell_count()];
        let part = GridPart::new(g.clone(), masses)?;
        let mut measure = RadonMeasure::new();
        measure.push_grid(part)?;
        return Ok(CapacitaryDistribution {
            measure,
            total_mass: 0.0,
            clipped: 0.0,
        });
    }
    let ep = problem.energy_problem();
    let res = ep.flux_residual(&result.minimizer);
    let mut clipped = 0.0;
    let mut masses = vec![0.0; g.cell_count()];
    let cell_strides = g.cell_strides();
    for v in 0..g.node_count() {
        if g.is_boundary(v) {
            continue;
        }
        let r = res[v];
        if r < 0.0 {
            clipped += -r;
            continue;
        }
        // assign the node's residual to the cell whose base corner it is,
        // clamped at the upper faces
        let multi = g.node_multi(v);
        let mut cell = 0usize;
        for a in 0..dim {
            cell += multi[a].min(g.cells()[a] - 1) * cell_strides[a];
        }
        masses[cell] += r;
    }
    if result.value > 0.0 && clipped > 0.02 * result.value {
        return Err(Error::Discretization(format!(
            "clipped negative residual mass {clipped:.3e} exceeds 2% of the capacity {:.3e}",
            result.value
        )));
    }
    let total_mass: f64 = masses.iter().sum();
    let part = GridPart::new(g.clone(), masses)?;
    let mut measure = RadonMeasure::new();
    measure.push_grid(part)?;
    Ok(CapacitaryDistribution {
        measure,
        total_mass,
        clipped,
    })
}

/// Capacity of the super-level set `{u > lambda}` of a minimizer, in the
/// same domain.
pub fn level_set_capacity(
    problem: &CondenserProblem,
    result: &CapacityResult,
    lambda: f64,
) -> Result<CapacityResult> {
    if !(0.0 < lambda && lambda < 1.0) {
        return Err(Error::ParameterDomain("lambda must be in (0, 1)".into()));
    }
    let mask: Vec<bool> = result.minimizer.iter().map(|&u| u > lambda).collect();
    let sub = CondenserProblem::new(problem.domain.clone(), mask, problem.p)?
        .with_tolerance(problem.tolerance)
        .with_max_iterations(problem.max_iterations);
    capacity(&sub)
}

/// Solves a batch of independent condenser problems concurrently. Each solve
/// is single-threaded and deterministic; the batch order is preserved.
pub fn dyadic_capacities(problems: &[CondenserProblem]) -> Vec<Result<CapacityResult>> {
    problems.par_iter().map(capacity).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::prolong;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_values() {
        // n=3, p=2, r=1, R=2 -> 8 pi
        let v = capacity_sphere_closed_form(3, 2.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(v, 8.0 * PI, max_relative = 1e-14);
        // p = n = 3, r=1, R=e -> 4 pi
        let v = capacity_sphere_closed_form(3, 3.0, 1.0, std::f64::consts::E).unwrap();
        assert_relative_eq!(v, 4.0 * PI, max_relative = 1e-14);
        // scaling: value(r=lambda, R=2 lambda) = lambda^{n-p} value(1, 2)
        for &(n, p) in &[(3usize, 2.0f64), (4, 2.5), (3, 1.5)] {
            let base = capacity_sphere_closed_form(n, p, 1.0, 2.0).unwrap();
            for &lam in &[0.5, 2.0, 0.125] {
                let v = capacity_sphere_closed_form(n, p, lam, 2.0 * lam).unwrap();
                assert_relative_eq!(
                    v,
                    lam.powf(n as f64 - p) * base,
                    max_relative = 1e-12
                );
            }
        }
        // parameter domain violations
        assert!(capacity_sphere_closed_form(3, 1.0, 1.0, 2.0).is_err());
        assert!(capacity_sphere_closed_form(3, 2.0, 2.0, 1.0).is_err());
        assert!(capacity_sphere_closed_form(5, 2.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn empty_condenser_is_zero() {
        let prob = CondenserProblem::spherical(3, 2.0, 0.4, 1.0, 12).unwrap();
        let empty = CondenserProblem::new(
            prob.domain.clone(),
            vec![false; prob.domain.node_count()],
            2.0,
        )
        .unwrap();
        let res = capacity(&empty).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(res.minimizer.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn boundary_touching_inner_set_is_rejected() {
        let domain = GridDomain::ball(Point::origin(3).unwrap(), 1.0, 12).unwrap();
        // fill the whole interior
        let mask: Vec<bool> = (0..domain.node_count())
            .map(|v| !domain.is_boundary(v))
            .collect();
        assert!(CondenserProblem::new(domain, mask, 2.0).is_err());
    }

    #[test]
    fn spherical_condenser_coarse_grid() {
        // coarse sanity run; the acceptance suite drives the fine grids
        let prob = CondenserProblem::spherical(3, 2.0, 1.0, 2.0, 24).unwrap();
        let res = capacity(&prob).unwrap();
        assert!(res.converged);
        let rel = (res.value - 8.0 * PI).abs() / (8.0 * PI);
        assert!(rel < 0.10, "relative error {rel:.3} at 24 cells");
        // minimizer honors the box constraints
        assert!(res
            .minimizer
            .iter()
            .all(|&u| (0.0..=1.0).contains(&u)));
    }

    #[test]
    fn monotone_in_the_inner_set() {
        let small = CondenserProblem::spherical(3, 2.0, 0.5, 2.0, 16).unwrap();
        let big = CondenserProblem::spherical(3, 2.0, 0.8, 2.0, 16).unwrap();
        let vs = capacity(&small).unwrap();
        let vb = capacity(&big).unwrap();
        assert!(vs.value <= vb.value + 1e-9);
    }

    #[test]
    fn distribution_mass_matches_value() {
        let prob = CondenserProblem::spherical(3, 2.0, 1.0, 2.0, 20).unwrap();
        let res = capacity(&prob).unwrap();
        let dist = capacitary_distribution(&prob, &res).unwrap();
        let rel = (dist.total_mass - res.value).abs() / res.value;
        assert!(rel < 0.05, "distribution mass off by {rel:.3}");
        // support near the inner sphere
        let g = &prob.domain;
        let part = &dist.measure.grid_parts()[0];
        let h = g.spacing();
        for (cell, &m) in part.cell_masses().iter().enumerate() {
            if m > 1e-12 * res.value {
                let (lo, hi) = g.cell_bounds(cell);
                let mut c = lo;
                for a in 0..3 {
                    c.set_coord(a, 0.5 * (lo.coord(a) + hi.coord(a)));
                }
                let d = c.norm();
                assert!(
                    (d - 1.0).abs() <= 2.5 * h,
                    "mass {m} at distance {d} from the inner sphere"
                );
            }
        }
        // empty K has zero distribution
        let empty = CondenserProblem::new(
            prob.domain.clone(),
            vec![false; prob.domain.node_count()],
            2.0,
        )
        .unwrap();
        let res0 = capacity(&empty).unwrap();
        let dist0 = capacitary_distribution(&empty, &res0).unwrap();
        assert_eq!(dist0.total_mass, 0.0);
    }

    #[test]
    fn level_set_estimate() {
        let prob = CondenserProblem::spherical(3, 2.0, 1.0, 2.0, 20).unwrap();
        let res = capacity(&prob).unwrap();
        let dist = capacitary_distribution(&prob, &res).unwrap();
        for &lambda in &[0.25, 0.5, 0.75] {
            let lev = level_set_capacity(&prob, &res, lambda).unwrap();
            assert!(lev.converged);
            let lhs = lambda.powf(prob.p - 1.0) * lev.value;
            assert!(
                lhs <= dist.total_mass * 1.05,
                "lambda {lambda}: {lhs} vs {}",
                dist.total_mass
            );
        }
    }

    #[test]
    fn subadditive_on_unions() {
        // K1, K2 disjoint balls; cap(K1 u K2) <= cap(K1) + cap(K2)
        let center = Point::origin(3).unwrap();
        let domain = GridDomain::ball(center, 2.0, 20).unwrap();
        let c1 = Point::new(&[0.6, 0.0, 0.0]).unwrap();
        let c2 = Point::new(&[-0.6, 0.0, 0.0]).unwrap();
        let m1: Vec<bool> = (0..domain.node_count())
            .map(|v| domain.node_pos(v).dist(&c1) <= 0.35)
            .collect();
        let m2: Vec<bool> = (0..domain.node_count())
            .map(|v| domain.node_pos(v).dist(&c2) <= 0.35)
            .collect();
        let mu: Vec<bool> = m1.iter().zip(&m2).map(|(a, b)| a | b).collect();
        let p1 = CondenserProblem::new(domain.clone(), m1, 2.0).unwrap();
        let p2 = CondenserProblem::new(domain.clone(), m2, 2.0).unwrap();
        let pu = CondenserProblem::new(domain, mu, 2.0).unwrap();
        let caps = dyadic_capacities(&[p1, p2, pu]);
        let v1 = caps[0].as_ref().unwrap().value;
        let v2 = caps[1].as_ref().unwrap().value;
        let vu = caps[2].as_ref().unwrap().value;
        assert!(vu <= (v1 + v2) * (1.0 + 2e-2), "{vu} vs {v1} + {v2}");
        assert!(vu >= v1.max(v2) * (1.0 - 2e-2));
    }

    #[test]
    fn grid_scaling_matches_dilation() {
        // value scales by lambda^{n-p} under domain dilation
        for &lam in &[0.5, 2.0] {
            let base = capacity(&CondenserProblem::spherical(3, 2.0, 1.0, 2.0, 16).unwrap())
                .unwrap()
                .value;
            let scaled =
                capacity(&CondenserProblem::spherical(3, 2.0, lam, 2.0 * lam, 16).unwrap())
                    .unwrap()
                    .value;
            let expect = lam * base; // n - p = 1
            assert!(
                (scaled - expect).abs() / expect < 0.05,
                "lam {lam}: {scaled} vs {expect}"
            );
        }
    }

    #[test]
    fn cascade_initialization_refines_monotonically() {
        let coarse = CondenserProblem::spherical(3, 2.0, 1.0, 2.0, 16).unwrap();
        let rc = capacity(&coarse).unwrap();
        let fine = CondenserProblem::spherical(3, 2.0, 1.0, 2.0, 32).unwrap();
        let init = prolong(&coarse.domain, &rc.minimizer, &fine.domain);
        let rf = capacity_with_initial(&fine, init).unwrap();
        assert!(rf.converged);
        let exact = 8.0 * PI;
        let ec = (rc.value - exact).abs() / exact;
        let ef = (rf.value - exact).abs() / exact;
        assert!(ef < ec, "coarse {ec:.4} fine {ef:.4}");
    }
}
