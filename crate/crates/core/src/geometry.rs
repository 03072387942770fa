//! Points, spheres and direction sampling in dimensions 2 through 4.

use crate::error::Error;
use crate::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 4;

/// A point in `R^n` for `n` in 2..=4. Unused trailing coordinates are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Geometry(format!(
                "dimension {dim} not supported (expected 2..=4)"
            )));
        }
        let mut c = [0.0; MAX_DIM];
        c[..dim].copy_from_slice(coords);
        Ok(Point { coords: c, dim })
    }

    /// Origin of `R^dim`.
    pub fn origin(dim: usize) -> Result<Self> {
        Point::new(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn coord(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    pub fn set_coord(&mut self, axis: usize, v: f64) {
        debug_assert!(axis < self.dim);
        self.coords[axis] = v;
    }

    pub fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for a in 0..self.dim {
            let d = self.coords[a] - other.coords[a];
            s += d * d;
        }
        s.sqrt()
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            s += self.coords[a] * self.coords[a];
        }
        s.sqrt()
    }

    /// Componentwise `self + t * dir`.
    pub fn offset(&self, dir: &Point, t: f64) -> Point {
        let mut p = *self;
        for a in 0..self.dim {
            p.coords[a] += t * dir.coords[a];
        }
        p
    }

    /// Componentwise scaling `s * self`.
    pub fn scale(&self, s: f64) -> Point {
        let mut p = *self;
        for a in 0..self.dim {
            p.coords[a] *= s;
        }
        p
    }

    /// First coordinate unit vector of `R^dim`.
    pub fn e1(dim: usize) -> Result<Self> {
        let mut p = Point::origin(dim)?;
        p.coords[0] = 1.0;
        Ok(p)
    }
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
///
/// `|S^1| = 2 pi`, `|S^2| = 4 pi`, `|S^3| = 2 pi^2`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n) / n as f64
}

/// Fraction of the sphere `S(c, rho)` covered by the spherical cap of
/// half-angle `theta` (measured from the cap axis at the sphere's center),
/// in dimension `n`. `theta` in `[0, pi]`.
pub fn cap_fraction(n: usize, theta: f64) -> f64 {
    let t = theta.clamp(0.0, PI);
    match n {
        2 => t / PI,
        3 => 0.5 * (1.0 - t.cos()),
        // integral of sin^2 from 0 to t over its value at pi
        4 => (t - t.sin() * t.cos()) / PI,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Deterministic quasi-uniform unit directions.
///
/// Dimension 2 uses equispaced angles, dimension 3 a Fibonacci lattice, and
/// dimension 4 seeded normalized Gaussians (seed fixed by the caller), so a
/// given `(dim, count, seed)` always yields the same set.
pub fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut dirs = Vec::with_capacity(count);
    match dim {
        2 => {
            for k in 0..count {
                let th = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                dirs.push(Point::new(&[th.cos(), th.sin()]).unwrap());
            }
        }
        3 => {
            // Fibonacci sphere lattice.
            let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let th = 2.0 * PI * (k as f64) / golden;
                dirs.push(Point::new(&[r * th.cos(), r * th.sin(), z]).unwrap());
            }
        }
        4 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while dirs.len() < count {
                let mut v = [0.0; 4];
                let mut nrm = 0.0;
                for c in v.iter_mut() {
                    // Box-Muller from two uniforms.
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen();
                    *c = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
                    nrm += *c * *c;
                }
                nrm = nrm.sqrt();
                if nrm > 1e-6 {
                    dirs.push(Point::new(&[v[0] / nrm, v[1] / nrm, v[2] / nrm, v[3] / nrm]).unwrap());
                }
            }
        }
        _ => panic!("unsupported dimension {dim}"),
    }
    dirs
}
