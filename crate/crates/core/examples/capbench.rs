use nlpotlab::capacity::*;
use nlpotlab::grid::prolong;
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let exact = 8.0 * PI;
    let mut prev: Option<(nlpotlab::capacity::CondenserProblem, CapacityResult)> = None;
    for cells in [16usize, 24, 32, 48, 64, 96] {
        let prob = CondenserProblem::spherical(3, 2.0, 1.0, 2.0, cells).unwrap();
        let t0 = Instant::now();
        let res = match &prev {
            None => capacity(&prob).unwrap(),
            Some((pp, rr)) => {
                let init = prolong(&pp.domain, &rr.minimizer, &prob.domain);
                capacity_with_initial(&prob, init).unwrap()
            }
        };
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "cells {cells:3}  value {:.5}  rel_err {:+.4}  iters {:5}  conv {}  dt {:.1}s",
            res.value,
            (res.value - exact) / exact,
            res.iterations,
            res.converged,
            dt
        );
        prev = Some((prob, res));
    }
}
