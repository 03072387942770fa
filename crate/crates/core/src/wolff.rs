//! Wolff potentials, singular-ratio normalizations, four-term splits and
//! exclusion sets.
//!
//! The potential is
//!
//! ```text
//! W(x, r) = integral_0^r ( mu(B(x,t)) / t^{n-p} )^{1/(p-1)}  dt/t
//! ```
//!
//! for `p` in `(1, n]`. Between atom-jump radii the map `t -> mu(B(x,t))` is
//! smooth, so atoms are integrated with the exact antiderivative of
//! `t^{-(n-p)/(p-1)-1}` and continuous parts with composite Gauss-Legendre
//! panels spaced uniformly in `log t`. An atom sitting exactly at the
//! evaluation point makes the integral diverge; that is reported as
//! `f64::INFINITY`.

use crate::error::Error;
use crate::geometry::Point;
use crate::grid::GridDomain;
use crate::measure::{DyadicAnnuli, RadonMeasure};
use crate::quadrature::log_composite_gl;
use crate::Result;
use rayon::prelude::*;

/// Ceiling applied to diverging weight sequences.
pub const WEIGHT_CEILING: f64 = 1e12;

/// Parameters of a Wolff potential evaluation.
#[derive(Clone, Copy, Debug)]
pub struct WolffParams {
    p: f64,
    n: usize,
    r0: f64,
    nodes_per_decade: usize,
}

impl WolffParams {
    pub fn new(n: usize, p: f64, r0: f64) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(Error::ParameterDomain(format!("dimension {n} unsupported")));
        }
        if !(p > 1.0 && p <= n as f64) {
            return Err(Error::ParameterDomain(format!("p = {p} outside (1, {n}]")));
        }
        if !(r0 > 0.0) {
            return Err(Error::ParameterDomain("r0 must be > 0".into()));
        }
        Ok(WolffParams {
            p,
            n,
            r0,
            nodes_per_decade: 64,
        })
    }

    pub fn with_nodes_per_decade(mut self, nodes: usize) -> Self {
        self.nodes_per_decade = nodes.max(8);
        self
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// True in the borderline case `p = n`.
    pub fn is_borderline(&self) -> bool {
        self.p == self.n as f64
    }

    /// The singular exponent `kappa = (n - p)/(p - 1)`; zero when `p = n`.
    pub fn kappa(&self) -> f64 {
        (self.n as f64 - self.p) / (self.p - 1.0)
    }
}

/// The four partial integrals of the proof decomposition, ordered from the
/// outermost integration range inward.
#[derive(Clone, Copy, Debug)]
pub struct FourTermSplit {
    pub term_far: f64,
    pub term_mid: f64,
    pub term_near: f64,
    pub term_inner: f64,
    pub i0: i32,
    pub delta: f64,
}

impl FourTermSplit {
    pub fn sum(&self) -> f64 {
        self.term_far + self.term_mid + self.term_near + self.term_inner
    }
}

/// Wolff potential `W(x, r0)`; `f64::INFINITY` when an atom sits exactly at
/// `x`.
pub fn wolff_potential(mu: &RadonMeasure, params: &WolffParams, x: &Point) -> f64 {
    wolff_integral(mu, params, x, 0.0, params.r0)
}

/// Wolff potential truncated at radius `r <= r0`.
pub fn wolff_potential_truncated(
    mu: &RadonMeasure,
    params: &WolffParams,
    x: &Point,
    r: f64,
) -> f64 {
    wolff_integral(mu, params, x, 0.0, r.min(params.r0))
}

/// The potential integral over `[a, b]`, exact on atom-only stretches.
fn wolff_integral(mu: &RadonMeasure, params: &WolffParams, x: &Point, a: f64, b: f64) -> f64 {
    if !(b > a) || mu.is_empty() {
        return 0.0;
    }
    if a == 0.0 && mu.atom_mass_at(x) > 0.0 {
        return f64::INFINITY;
    }
    let kappa = params.kappa();
    let q = 1.0 / (params.p - 1.0);
    let distances = mu.atom_distances_from(x);
    let continuous = mu.has_continuous_part();

    // effective lower limit: nothing below the first atom without densities;
    // fixed relative cutoff with densities
    let start = if a > 0.0 {
        a
    } else if continuous {
        1e-14 * params.r0
    } else {
        match distances.iter().find(|&&d| d > 0.0) {
            Some(&d) if d < b => d,
            _ => return 0.0,
        }
    };
    if start >= b {
        return 0.0;
    }

    let mut cuts: Vec<f64> = vec![start];
    for &d in &distances {
        if d > start && d < b {
            cuts.push(d);
        }
    }
    if continuous {
        for c in mu.smoothness_breakpoints_from(x) {
            if c > start && c < b {
                cuts.push(c);
            }
        }
    }
    cuts.push(b);
    cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    cuts.dedup_by(|u, v| (*u - *v).abs() <= 1e-15 * v.abs());

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 <= s0 {
            continue;
        }
        if continuous {
            total += log_composite_gl(s0, s1, params.nodes_per_decade, |t| {
                let m = mu.ball_mass(x, t);
                if m <= 0.0 {
                    0.0
                } else {
                    (m / t.powf(params.n as f64 - params.p)).powf(q) / t
                }
            });
        } else {
            // atoms inside the closed ball throughout (s0, s1)
            let mass: f64 = mu
                .atoms()
                .iter()
                .filter(|at| at.point.dist(x) <= s0)
                .map(|at| at.mass)
                .sum();
            if mass > 0.0 {
                total += if params.is_borderline() {
                    mass.powf(q) * (s1 / s0).ln()
                } else {
                    mass.powf(q) * (s0.powf(-kappa) - s1.powf(-kappa)) / kappa
                };
            }
        }
    }
    total
}

/// Distance-normalized potential at `x` relative to the singular point `x0`:
/// `|x-x0|^{(n-p)/(p-1)} W(x, r0)` for `p < n` and `W(x, r0) / log(1/|x-x0|)`
/// for `p = n`.
pub fn singular_ratio(
    mu: &RadonMeasure,
    params: &WolffParams,
    x0: &Point,
    x: &Point,
) -> Result<f64> {
    let d = x.dist(x0);
    if !(d > 0.0) {
        return Err(Error::Precondition(
            "singular ratio needs x distinct from x0".into(),
        ));
    }
    let w = wolff_potential(mu, params, x);
    if params.is_borderline() {
        if d >= 1.0 {
            return Err(Error::ParameterDomain(
                "p = n normalization needs |x - x0| < 1".into(),
            ));
        }
        Ok(w / (1.0 / d).ln())
    } else {
        Ok(d.powf(params.kappa()) * w)
    }
}

/// Closed-form singular ratio of a pure atom `c delta_{x0}`:
/// `(p-1)/(n-p) c^{1/(p-1)} (1 - (d/r0)^{(n-p)/(p-1)})` for `p < n`, and
/// `c^{1/(n-1)} (1 - log r0 / log(1/d))^{-1}`-free form for `p = n`.
pub fn atom_singular_ratio(params: &WolffParams, c: f64, d: f64) -> f64 {
    let q = 1.0 / (params.p - 1.0);
    if params.is_borderline() {
        c.powf(q) * (params.r0 / d).ln() / (1.0 / d).ln()
    } else {
        let kappa = params.kappa();
        c.powf(q) / kappa * (1.0 - (d / params.r0).powf(kappa))
    }
}

/// Splits `W(x, r0)` into the four proof-decomposition integrals. For
/// `p < n` the breakpoints are `(1-delta)d, (1+delta)d, 2^{i0} d`; for
/// `p = n` they are `(1-delta)d, (1+delta)d, (1+delta)d^delta`.
pub fn four_term_split(
    mu: &RadonMeasure,
    params: &WolffParams,
    x0: &Point,
    x: &Point,
    i0: i32,
    delta: f64,
) -> Result<FourTermSplit> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParameterDomain("delta must be in (0, 1)".into()));
    }
    let d = x.dist(x0);
    if !(d > 0.0) {
        return Err(Error::Precondition("x must differ from x0".into()));
    }
    let b1 = (1.0 - delta) * d;
    let b2 = (1.0 + delta) * d;
    let b3 = if params.is_borderline() {
        (1.0 + delta) * d.powf(delta)
    } else {
        2f64.powi(i0) * d
    };
    if !(0.0 < b1 && b1 < b2 && b2 < b3 && b3 <= params.r0) {
        return Err(Error::BreakpointOrder(format!(
            "need 0 < {b1} < {b2} < {b3} <= {}",
            params.r0
        )));
    }
    Ok(FourTermSplit {
        term_inner: wolff_integral(mu, params, x, 0.0, b1),
        term_near: wolff_integral(mu, params, x, b1, b2),
        term_mid: wolff_integral(mu, params, x, b2, b3),
        term_far: wolff_integral(mu, params, x, b3, params.r0),
        i0,
        delta,
    })
}

/// Mode of a diverging-weight sequence: the subcritical case picks the
/// `alpha_i` weights of the `p < n` argument, the borderline case the
/// `gamma_i`/`tau_i` weights of `p = n`. Both use the same Dini-type rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Subcritical,
    Borderline,
}

/// Picks weights `alpha_i = (sum_{j >= i} masses_j + tail_bound)^{-1/2}`,
/// capped at [`WEIGHT_CEILING`]. The weights diverge whenever the tails
/// vanish, while `sum_i alpha_i masses_i <= 2 sqrt(total)` stays finite.
pub fn choose_weight_sequence(masses: &[f64], _mode: WeightMode, tail_bound: f64) -> Vec<f64> {
    let mut out = vec![0.0; masses.len()];
    let mut tail = tail_bound.max(0.0);
    for i in (0..masses.len()).rev() {
        tail += masses[i].max(0.0);
        out[i] = if tail > 0.0 {
            tail.powf(-0.5).min(WEIGHT_CEILING)
        } else {
            WEIGHT_CEILING
        };
    }
    out
}

/// Nodes of `sample_grid` lying in `omega_i(x0)` where the truncated
/// potential `W(y, (1-delta)|y - x0|)` reaches the divergence threshold
/// `weight^{-1/(p-1)} |y - x0|^{-(n-p)/(p-1)}` (log-normalized for `p = n`).
pub fn exclusion_set(
    mu: &RadonMeasure,
    params: &WolffParams,
    annuli: &DyadicAnnuli,
    i: i32,
    weight: f64,
    delta: f64,
    sample_grid: &GridDomain,
) -> Result<Vec<bool>> {
    if !(weight > 0.0) {
        return Err(Error::ParameterDomain("weight must be > 0".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParameterDomain("delta must be in (0, 1)".into()));
    }
    let q = 1.0 / (params.p - 1.0);
    let x0 = *annuli.center();
    let mask: Vec<bool> = (0..sample_grid.node_count())
        .into_par_iter()
        .map(|idx| {
            let y = sample_grid.node_pos(idx);
            if !annuli.in_omega(i, &y) {
                return false;
            }
            let d = y.dist(&x0);
            let threshold = if params.is_borderline() {
                weight.powf(-q) * (1.0 / d).ln()
            } else {
                weight.powf(-q) * d.powf(-params.kappa())
            };
            let w = wolff_potential_truncated(mu, params, &y, (1.0 - delta) * d);
            w >= threshold
        })
        .collect();
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::RadialPart;
    use approx::assert_relative_eq;

    fn origin3() -> Point {
        Point::origin(3).unwrap()
    }

    fn dirac3(mass: f64) -> RadonMeasure {
        RadonMeasure::dirac(origin3(), mass).unwrap()
    }

    #[test]
    fn atom_potential_closed_forms() {
        // n=3, p=2: W = 1/|x| - 1/r0
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let x = Point::new(&[0.1, 0.0, 0.0]).unwrap();
        assert_relative_eq!(
            wolff_potential(&dirac3(1.0), &params, &x),
            9.0,
            max_relative = 1e-14
        );
        // p = n = 3: W = log(r0/|x|)
        let params = WolffParams::new(3, 3.0, 1.0).unwrap();
        let x = Point::new(&[(-5.0f64).exp(), 0.0, 0.0]).unwrap();
        assert_relative_eq!(
            wolff_potential(&dirac3(1.0), &params, &x),
            5.0,
            max_relative = 1e-14
        );
        // atom at the evaluation point diverges
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        assert!(wolff_potential(&dirac3(1.0), &params, &origin3()).is_infinite());
    }

    #[test]
    fn singular_ratio_examples() {
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let x = Point::new(&[1e-3, 0.0, 0.0]).unwrap();
        let r = singular_ratio(&dirac3(1.0), &params, &origin3(), &x).unwrap();
        assert_relative_eq!(r, 0.999, max_relative = 1e-12);

        let params = WolffParams::new(3, 3.0, 1.0).unwrap();
        let r = singular_ratio(&dirac3(1.0), &params, &origin3(), &x).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-14);

        // density-only measure: ratio sinks toward 0
        let mut mu = RadonMeasure::new();
        mu.push_radial(RadialPart::uniform_ball(origin3(), 1.0, 1.0).unwrap())
            .unwrap();
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let r = singular_ratio(&mu, &params, &origin3(), &x).unwrap();
        assert!(r.abs() < 0.05, "expected near-zero ratio, got {r}");
    }

    #[test]
    fn singular_ratio_domain_error_at_p_equals_n() {
        let params = WolffParams::new(3, 3.0, 2.0).unwrap();
        let x = Point::new(&[1.5, 0.0, 0.0]).unwrap();
        assert!(singular_ratio(&dirac3(1.0), &params, &origin3(), &x).is_err());
    }

    #[test]
    fn four_terms_sum_to_the_potential() {
        let mut mu = dirac3(1.0);
        mu.push_radial(RadialPart::uniform_ball(origin3(), 1.0, 1.0).unwrap())
            .unwrap();
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let x = Point::new(&[2e-3, 1e-3, 0.0]).unwrap();
        let split = four_term_split(&mu, &params, &origin3(), &x, 5, 0.1).unwrap();
        let total = wolff_potential(&mu, &params, &x);
        assert_relative_eq!(split.sum(), total, max_relative = 1e-10);

        // p = n split with its own breakpoints
        let params = WolffParams::new(3, 3.0, 1.0).unwrap();
        let split = four_term_split(&mu, &params, &origin3(), &x, 0, 0.1).unwrap();
        let total = wolff_potential(&mu, &params, &x);
        assert_relative_eq!(split.sum(), total, max_relative = 1e-10);
    }

    #[test]
    fn pure_atom_split_concentrates_in_the_mid_term() {
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let x = Point::new(&[1e-2, 0.0, 0.0]).unwrap();
        let (i0, delta) = (6, 0.1);
        let split = four_term_split(&dirac3(1.0), &params, &origin3(), &x, i0, delta).unwrap();
        assert_eq!(split.term_inner, 0.0);
        // mid term carries the ratio up to the (1+delta) and 2^{-i0} edges
        let kappa = params.kappa();
        let d: f64 = 1e-2;
        let expected =
            (((1.0 + delta) * d).powf(-kappa) - (2f64.powi(i0) * d).powf(-kappa)) / kappa;
        assert_relative_eq!(split.term_mid, expected, max_relative = 1e-12);
    }

    #[test]
    fn far_term_obeys_the_total_mass_bound() {
        let mut mu = dirac3(1.0);
        mu.push_radial(RadialPart::uniform_ball(origin3(), 1.0, 1.0).unwrap())
            .unwrap();
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let x = Point::new(&[1e-3, 0.0, 0.0]).unwrap();
        let (i0, delta) = (5, 0.1);
        let split = four_term_split(&mu, &params, &origin3(), &x, i0, delta).unwrap();
        let kappa = params.kappa();
        let bound = (params.p - 1.0) / (3.0 - params.p)
            * mu.total_mass().powf(1.0 / (params.p - 1.0))
            * (2f64.powi(i0) * 1e-3).powf(-kappa);
        assert!(split.term_far <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn breakpoint_order_is_enforced() {
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let x = Point::new(&[0.2, 0.0, 0.0]).unwrap();
        // 2^8 * 0.2 = 51.2 > r0
        assert!(four_term_split(&dirac3(1.0), &params, &origin3(), &x, 8, 0.1).is_err());
    }

    #[test]
    fn potential_is_monotone_in_r0_and_mass() {
        let params1 = WolffParams::new(3, 2.0, 0.5).unwrap();
        let params2 = WolffParams::new(3, 2.0, 1.0).unwrap();
        let x = Point::new(&[0.05, 0.0, 0.0]).unwrap();
        let w1 = wolff_potential(&dirac3(1.0), &params1, &x);
        let w2 = wolff_potential(&dirac3(1.0), &params2, &x);
        assert!(w2 > w1);
        let w3 = wolff_potential(&dirac3(2.0), &params2, &x);
        assert!(w3 > w2);
    }

    #[test]
    fn scaling_covariance_matches_closed_form() {
        // ratio = c^{1/(p-1)} (p-1)/(n-p) (1 - (d/r0)^{(n-p)/(p-1)})
        for &(n, p, c) in &[(3usize, 2.0, 1.0), (3, 2.0, 2.5), (4, 2.5, 1.7), (3, 1.5, 0.9)] {
            let params = WolffParams::new(n, p, 1.0).unwrap();
            let x0 = Point::origin(n).unwrap();
            let mu = RadonMeasure::dirac(x0, c).unwrap();
            for &d in &[1e-1, 1e-2, 1e-3] {
                let mut xc = vec![0.0; n];
                xc[0] = d;
                let x = Point::new(&xc).unwrap();
                let got = singular_ratio(&mu, &params, &x0, &x).unwrap();
                let want = atom_singular_ratio(&params, c, d);
                assert_relative_eq!(got, want, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn theorem_limit_along_a_ray() {
        // atom + bounded density: ratio converges to the atom limit
        let mut mu = dirac3(2.0);
        mu.push_radial(RadialPart::uniform_ball(origin3(), 1.0, 1.0).unwrap())
            .unwrap();
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let limit = 2.0; // (p-1)/(n-p) c^{1/(p-1)} = 2
        let mut errs = Vec::new();
        for &d in &[1e-2, 1e-3, 1e-4] {
            let x = Point::new(&[d, 0.0, 0.0]).unwrap();
            let r = singular_ratio(&mu, &params, &origin3(), &x).unwrap();
            errs.push((r - limit).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors {errs:?}");
        assert!(errs[2] < 0.01 * limit);

        // p = n variant converges to c^{1/(n-1)}
        let params = WolffParams::new(3, 3.0, 1.0).unwrap();
        let limitn = 2.0f64.powf(0.5);
        let mut errs = Vec::new();
        for &d in &[1e-2, 1e-3, 1e-4] {
            let x = Point::new(&[d, 0.0, 0.0]).unwrap();
            let r = singular_ratio(&mu, &params, &origin3(), &x).unwrap();
            errs.push((r - limitn).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors {errs:?}");
    }

    #[test]
    fn weight_sequences() {
        // geometric masses 4^{-i}: alpha_i = sqrt-inverse of the full tail
        let masses: Vec<f64> = (0..20).map(|i| 4f64.powi(-i)).collect();
        let tail_beyond = 4f64.powi(-20) * 4.0 / 3.0;
        let alphas = choose_weight_sequence(&masses, WeightMode::Subcritical, tail_beyond);
        for (i, a) in alphas.iter().enumerate() {
            let tail = 4f64.powi(-(i as i32)) * 4.0 / 3.0;
            assert_relative_eq!(*a, tail.powf(-0.5), max_relative = 1e-10);
        }
        let paired: f64 = alphas.iter().zip(&masses).map(|(a, m)| a * m).sum();
        let dini = 2.0 * (masses.iter().sum::<f64>() + tail_beyond).sqrt();
        assert!(paired <= dini);

        // zero tail hits the ceiling
        let masses = [1.0, 0.5, 0.0, 0.0];
        let alphas = choose_weight_sequence(&masses, WeightMode::Subcritical, 0.0);
        assert_eq!(alphas[2], WEIGHT_CEILING);
        assert_eq!(alphas[3], WEIGHT_CEILING);
        assert!(alphas[0] < alphas[1]);

        // masses 1/i^2: alpha_i ~ sqrt(i) by the integral test
        let masses: Vec<f64> = (1..=200).map(|i| 1.0 / (i * i) as f64).collect();
        let alphas = choose_weight_sequence(&masses, WeightMode::Borderline, 1.0 / 200.0);
        for (k, a) in alphas.iter().enumerate() {
            let i = (k + 1) as f64;
            assert!(
                *a >= (i - 0.5).sqrt() * 0.99 && *a <= (i + 1.0).sqrt() * 1.01,
                "alpha_{i} = {a}"
            );
        }
        let paired: f64 = alphas.iter().zip(&masses).map(|(a, m)| a * m).sum();
        assert!(paired.is_finite() && paired < 4.0);
    }

    #[test]
    fn exclusion_sets_on_grids() {
        let x0 = origin3();
        let annuli = DyadicAnnuli::new(x0, 1, 8).unwrap();
        let params = WolffParams::new(3, 2.0, 1.0).unwrap();
        let (lo, hi) = DyadicAnnuli::omega_radii(3);
        let grid = GridDomain::annulus(x0, lo * 0.9, hi * 1.1, 24).unwrap();

        // central atom: truncated-radius potential vanishes on omega_i
        let mask = exclusion_set(&dirac3(1.0), &params, &annuli, 3, 10.0, 0.1, &grid).unwrap();
        assert!(mask.iter().all(|&b| !b));

        // an atom inside omega_3 is excluded nearby for generous weights
        let q = Point::new(&[0.17, 0.0, 0.0]).unwrap();
        let mut mu = RadonMeasure::dirac(q, 1.0).unwrap();
        mu.push_atom(x0, 1.0).unwrap();
        let mask_big = exclusion_set(&mu, &params, &annuli, 3, 100.0, 0.1, &grid).unwrap();
        assert!(mask_big.iter().any(|&b| b));

        // raising the threshold (smaller weight) shrinks the mask
        let mask_small = exclusion_set(&mu, &params, &annuli, 3, 1.0, 0.1, &grid).unwrap();
        let count_big = mask_big.iter().filter(|&&b| b).count();
        let count_small = mask_small.iter().filter(|&&b| b).count();
        assert!(count_small <= count_big);
        for (s, b) in mask_small.iter().zip(&mask_big) {
            assert!(!s | b, "small-weight mask must be contained in the big one");
        }
    }
}
