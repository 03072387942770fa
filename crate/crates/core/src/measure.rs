//! Finite nonnegative Radon measures as atoms, radial density profiles and
//! grid densities, with ball-mass and rescaling queries.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! - `ball_mass` uses the **closed** ball: an atom sitting exactly on the
//!   sphere `|p - x| = t` is counted. This keeps `t -> mu(B(x,t))`
//!   nondecreasing, which the potential integrands require. The limit
//!   formulas are insensitive to the open/closed choice.
//! - A radial part stores a sampled volumetric density `f(rho) >= 0` on
//!   `[0, r_max]` with linear interpolation between samples and zero beyond
//!   `r_max`; its measure is `d mu = f(|x - c|) dx`.
//! - A grid part stores one nonnegative mass per cell; balls intersect cells
//!   with a coverage fraction estimated by `2^dim`-point subsampling.
//!
//! The plain-text measure file format (one component per record):
//!
//! ```text
//! # comments and blank lines are skipped
//! atom   x y [z [w]] mass
//! radial cx cy [cz [cw]] table r0:v0,r1:v1,...
//! grid   relative/path/to/cellfile.txt
//! ```

use crate::error::Error;
use crate::geometry::{cap_fraction, unit_sphere_area, Point};
use crate::grid::{read_cell_file, write_cell_file, GridDomain};
use crate::quadrature::gl16;
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Point mass.
#[derive(Clone, Debug)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

/// Sampled radial volumetric density around a center.
#[derive(Clone, Debug)]
pub struct RadialPart {
    center: Point,
    /// Sample radii, strictly increasing, starting at 0.
    radii: Vec<f64>,
    /// Nonnegative density values at the sample radii.
    values: Vec<f64>,
}

impl RadialPart {
    pub fn new(center: Point, samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Measure("radial profile needs samples".into()));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Measure("radial profile radii must increase".into()));
            }
        }
        if samples.iter().any(|&(r, v)| r < 0.0 || v < 0.0 || !v.is_finite()) {
            return Err(Error::Measure("radial profile entries must be >= 0".into()));
        }
        if !(samples.last().unwrap().0 > 0.0) {
            return Err(Error::Measure("radial profile needs positive extent".into()));
        }
        let mut radii = Vec::with_capacity(samples.len() + 1);
        let mut values = Vec::with_capacity(samples.len() + 1);
        if samples[0].0 > 0.0 {
            // constant extension down to the center
            radii.push(0.0);
            values.push(samples[0].1);
        }
        for &(r, v) in samples {
            radii.push(r);
            values.push(v);
        }
        Ok(RadialPart {
            center,
            radii,
            values,
        })
    }

    /// Uniform density `value` on the ball `B(center, radius)`.
    pub fn uniform_ball(center: Point, radius: f64, value: f64) -> Result<Self> {
        RadialPart::new(center, &[(0.0, value), (radius, value)])
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Knot radii of the sampled profile.
    pub fn knots(&self) -> &[f64] {
        &self.radii
    }

    /// Linear interpolation; zero beyond `r_max`.
    pub fn density(&self, rho: f64) -> f64 {
        if rho < 0.0 || rho > self.r_max() {
            return 0.0;
        }
        match self.radii.binary_search_by(|r| r.partial_cmp(&rho).unwrap()) {
            Ok(k) => self.values[k],
            Err(k) => {
                // k >= 1 because radii[0] = 0 <= rho
                let (r0, r1) = (self.radii[k - 1], self.radii[k]);
                let (v0, v1) = (self.values[k - 1], self.values[k]);
                v0 + (v1 - v0) * (rho - r0) / (r1 - r0)
            }
        }
    }

    /// Mass of the concentric ball `B(center, t)`, exact for the
    /// piecewise-linear profile.
    pub fn concentric_ball_mass(&self, n: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.min(self.r_max());
        let area = unit_sphere_area(n);
        let mut total = 0.0;
        for k in 1..self.radii.len() {
            let a = self.radii[k - 1];
            let b = self.radii[k].min(t);
            if b <= a {
                break;
            }
            // integrand rho^{n-1} * linear(rho): polynomial of degree n
            total += gl16(a, b, |rho| self.density(rho) * rho.powi(n as i32 - 1));
        }
        area * total
    }

    pub fn total_mass(&self, n: usize) -> f64 {
        self.concentric_ball_mass(n, self.r_max())
    }

    /// Mass inside the (generally off-center) closed ball `B(x, t)`.
    pub fn ball_mass(&self, n: usize, x: &Point, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let d = x.dist(&self.center);
        if d == 0.0 {
            return self.concentric_ball_mass(n, t);
        }
        let area = unit_sphere_area(n);
        // Fully covered spheres: rho <= t - d.
        let full_to = (t - d).max(0.0).min(self.r_max());
        let mut total = if full_to > 0.0 {
            self.concentric_ball_mass(n, full_to) / area
        } else {
            0.0
        };
        // Partially covered spheres: |d - t| <= rho <= d + t.
        let lo = (d - t).abs().max(full_to);
        let hi = (d + t).min(self.r_max());
        if hi > lo {
            // split at profile knots to keep the integrand smooth
            let mut cuts: Vec<f64> = vec![lo];
            for &r in &self.radii {
                if r > lo && r < hi {
                    cuts.push(r);
                }
            }
            cuts.push(hi);
            for w in cuts.windows(2) {
                total += gl16(w[0], w[1], |rho| {
                    // cos of cap half-angle at the profile center
                    let c = ((d * d + rho * rho - t * t) / (2.0 * d * rho)).clamp(-1.0, 1.0);
                    self.density(rho) * rho.powi(n as i32 - 1) * cap_fraction(n, c.acos())
                });
            }
        }
        area * total
    }

    /// Pullback under `x -> x / r` scaled so that `mu_r(A) = mu(rA)`.
    pub fn rescaled(&self, r: f64) -> RadialPart {
        let scale = r.powi(self.center.dim() as i32);
        RadialPart {
            center: self.center.scale(1.0 / r),
            radii: self.radii.iter().map(|&rho| rho / r).collect(),
            values: self.values.iter().map(|&v| v * scale).collect(),
        }
    }
}

/// Per-cell masses over a grid domain.
#[derive(Clone, Debug)]
pub struct GridPart {
    domain: GridDomain,
    cell_masses: Vec<f64>,
    total: f64,
    /// Center and radius of the bounding sphere, for quick rejection.
    bound_center: Point,
    bound_radius: f64,
}

impl GridPart {
    pub fn new(domain: GridDomain, cell_masses: Vec<f64>) -> Result<Self> {
        if cell_masses.len() != domain.cell_count() {
            return Err(Error::Measure("cell mass count mismatch".into()));
        }
        if cell_masses.iter().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::Measure("cell masses must be finite and >= 0".into()));
        }
        let total = cell_masses.iter().sum();
        let dim = domain.dim();
        let mut c = *domain.lower();
        let mut r2 = 0.0;
        for a in 0..dim {
            let half = 0.5 * (domain.upper().coord(a) - domain.lower().coord(a));
            c.set_coord(a, domain.lower().coord(a) + half);
            r2 += half * half;
        }
        Ok(GridPart {
            domain,
            cell_masses,
            total,
            bound_center: c,
            bound_radius: r2.sqrt(),
        })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn cell_masses(&self) -> &[f64] {
        &self.cell_masses
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// Mass inside the closed ball `B(x, t)`: full cells counted exactly,
    /// boundary cells by `2^dim`-point subsampling.
    pub fn ball_mass(&self, x: &Point, t: f64) -> f64 {
        if t <= 0.0 || self.total == 0.0 {
            return 0.0;
        }
        let d = x.dist(&self.bound_center);
        if d - self.bound_radius >= t {
            return 0.0;
        }
        if d + self.bound_radius <= t {
            return self.total;
        }
        let dim = self.domain.dim();
        let h = self.domain.spacing();
        // axis index windows overlapping the ball's bounding box
        let mut lo_idx = [0usize; 4];
        let mut hi_idx = [0usize; 4];
        for a in 0..dim {
            let lo = (x.coord(a) - t - self.domain.lower().coord(a)) / h;
            let hi = (x.coord(a) + t - self.domain.lower().coord(a)) / h;
            let cells = self.domain.cells()[a];
            lo_idx[a] = lo.floor().max(0.0) as usize;
            hi_idx[a] = (hi.ceil().max(0.0) as usize).min(cells);
            if lo_idx[a] >= hi_idx[a] {
                return 0.0;
            }
        }
        let half_diag = 0.5 * h * (dim as f64).sqrt();
        let mut mass = 0.0;
        let mut idx = lo_idx;
        loop {
            let cell = self.domain.cell_linear(&idx[..dim]);
            let m = self.cell_masses[cell];
            if m > 0.0 {
                let (clo, chi) = self.domain.cell_bounds(cell);
                let mut center = clo;
                for a in 0..dim {
                    center.set_coord(a, 0.5 * (clo.coord(a) + chi.coord(a)));
                }
                let dc = x.dist(&center);
                if dc + half_diag <= t {
                    mass += m;
                } else if dc - half_diag < t {
                    // 2^dim subcell centers
                    let samples = 1usize << dim;
                    let mut inside = 0usize;
                    for k in 0..samples {
                        let mut q = clo;
                        for a in 0..dim {
                            let off = if k & (1 << a) != 0 { 0.75 } else { 0.25 };
                            q.set_coord(a, clo.coord(a) + off * h);
                        }
                        if x.dist(&q) <= t {
                            inside += 1;
                        }
                    }
                    mass += m * inside as f64 / samples as f64;
                }
            }
            // advance multi-index within the window
            let mut a = dim;
            loop {
                if a == 0 {
                    return mass;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < hi_idx[a] {
                    break;
                }
                idx[a] = lo_idx[a];
            }
        }
    }

    pub fn rescaled(&self, r: f64) -> Result<GridPart> {
        let dim = self.domain.dim();
        let lo = self.domain.lower().scale(1.0 / r);
        let hi = self.domain.upper().scale(1.0 / r);
        let domain = GridDomain::new_box(lo, hi, &self.domain.cells()[..dim].to_vec())?;
        GridPart::new(domain, self.cell_masses.clone())
    }
}

/// Finite nonnegative Radon measure.
#[derive(Clone, Debug, Default)]
pub struct RadonMeasure {
    atoms: Vec<Atom>,
    radial_parts: Vec<RadialPart>,
    grid_parts: Vec<GridPart>,
}

impl RadonMeasure {
    pub fn new() -> Self {
        RadonMeasure::default()
    }

    /// Single atom `mass * delta_point`.
    pub fn dirac(point: Point, mass: f64) -> Result<Self> {
        let mut m = RadonMeasure::new();
        m.push_atom(point, mass)?;
        Ok(m)
    }

    pub fn push_atom(&mut self, point: Point, mass: f64) -> Result<()> {
        if mass < 0.0 || !mass.is_finite() {
            return Err(Error::Measure("atom mass must be finite and >= 0".into()));
        }
        self.check_dim(point.dim())?;
        self.atoms.push(Atom { point, mass });
        Ok(())
    }

    pub fn push_radial(&mut self, part: RadialPart) -> Result<()> {
        self.check_dim(part.center.dim())?;
        self.radial_parts.push(part);
        Ok(())
    }

    pub fn push_grid(&mut self, part: GridPart) -> Result<()> {
        self.check_dim(part.domain.dim())?;
        self.grid_parts.push(part);
        Ok(())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != dim => Err(Error::Measure(format!(
                "component dimension {dim} differs from measure dimension {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// Dimension of the ambient space, if any component exists.
    pub fn dim(&self) -> Option<usize> {
        self.atoms
            .first()
            .map(|a| a.point.dim())
            .or_else(|| self.radial_parts.first().map(|r| r.center.dim()))
            .or_else(|| self.grid_parts.first().map(|g| g.domain.dim()))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn radial_parts(&self) -> &[RadialPart] {
        &self.radial_parts
    }

    pub fn grid_parts(&self) -> &[GridPart] {
        &self.grid_parts
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.radial_parts.is_empty() && self.grid_parts.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        let n = match self.dim() {
            Some(n) => n,
            None => return 0.0,
        };
        self.atoms.iter().map(|a| a.mass).sum::<f64>()
            + self
                .radial_parts
                .iter()
                .map(|r| r.total_mass(n))
                .sum::<f64>()
            + self.grid_parts.iter().map(|g| g.total_mass()).sum::<f64>()
    }

    /// Mass of the atom located exactly at `x` (0 if none).
    pub fn atom_mass_at(&self, x: &Point) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.point.dist(x) == 0.0)
            .map(|a| a.mass)
            .sum()
    }

    /// `mu(B(x, t))` for the closed ball; `t = 0` returns the atom mass at
    /// `x` exactly.
    pub fn ball_mass(&self, x: &Point, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let n = match self.dim() {
            Some(n) => n,
            None => return 0.0,
        };
        let mut mass: f64 = self
            .atoms
            .iter()
            .filter(|a| a.point.dist(x) <= t)
            .map(|a| a.mass)
            .sum();
        if t > 0.0 {
            mass += self
                .radial_parts
                .iter()
                .map(|r| r.ball_mass(n, x, t))
                .sum::<f64>();
            mass += self.grid_parts.iter().map(|g| g.ball_mass(x, t)).sum::<f64>();
        }
        mass
    }

    /// Pushforward under `x -> x / r`: `mu_r(A) = mu(rA)`.
    pub fn rescaled(&self, r: f64) -> Result<RadonMeasure> {
        if !(r > 0.0) {
            return Err(Error::ParameterDomain("rescale factor must be > 0".into()));
        }
        let mut out = RadonMeasure::new();
        for a in &self.atoms {
            out.push_atom(a.point.scale(1.0 / r), a.mass)?;
        }
        for rp in &self.radial_parts {
            out.push_radial(rp.rescaled(r))?;
        }
        for gp in &self.grid_parts {
            out.push_grid(gp.rescaled(r)?)?;
        }
        Ok(out)
    }

    /// Sorted distances from `x` to every atom with positive mass; these are
    /// the jump radii of `t -> mu(B(x,t))`.
    pub fn atom_distances_from(&self, x: &Point) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .atoms
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(|a| a.point.dist(x))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d
    }

    /// True when the measure has radial or grid density components.
    pub fn has_continuous_part(&self) -> bool {
        !self.radial_parts.is_empty() || !self.grid_parts.is_empty()
    }

    /// Radii at which `t -> mu(B(x,t))` may lose smoothness because a radial
    /// profile knot enters or leaves the ball.
    pub fn smoothness_breakpoints_from(&self, x: &Point) -> Vec<f64> {
        let mut cuts = Vec::new();
        for rp in &self.radial_parts {
            let d = x.dist(&rp.center);
            cuts.push(d);
            for &rho in rp.knots() {
                cuts.push(d + rho);
                cuts.push((d - rho).abs());
            }
        }
        cuts.retain(|&t| t > 0.0);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
        cuts
    }
}

/// Dyadic annuli around a center: `omega_i` is the closed shell
/// `2^{-i-1} <= |x - x0| <= 2^{-i}` and `Omega_i` its four-fold thickening
/// `2^{-i-2} <= |x - x0| <= 2^{-i+1}`.
#[derive(Clone, Debug)]
pub struct DyadicAnnuli {
    center: Point,
    i_min: i32,
    i_max: i32,
}

impl DyadicAnnuli {
    pub fn new(center: Point, i_min: i32, i_max: i32) -> Result<Self> {
        if i_min > i_max {
            return Err(Error::Geometry("annulus index range empty".into()));
        }
        Ok(DyadicAnnuli {
            center,
            i_min,
            i_max,
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn i_min(&self) -> i32 {
        self.i_min
    }

    pub fn i_max(&self) -> i32 {
        self.i_max
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> {
        self.i_min..=self.i_max
    }

    pub fn contains(&self, i: i32) -> bool {
        (self.i_min..=self.i_max).contains(&i)
    }

    /// Inner and outer radii of `omega_i`.
    pub fn omega_radii(i: i32) -> (f64, f64) {
        (2f64.powi(-i - 1), 2f64.powi(-i))
    }

    /// Inner and outer radii of `Omega_i`.
    pub fn omega_big_radii(i: i32) -> (f64, f64) {
        (2f64.powi(-i - 2), 2f64.powi(-i + 1))
    }

    pub fn in_omega(&self, i: i32, x: &Point) -> bool {
        let d = x.dist(&self.center);
        let (a, b) = Self::omega_radii(i);
        a <= d && d <= b
    }

    pub fn in_omega_big(&self, i: i32, x: &Point) -> bool {
        let d = x.dist(&self.center);
        let (a, b) = Self::omega_big_radii(i);
        a <= d && d <= b
    }
}

/// `mu(Omega_i(x0))`: two closed-ball masses differenced, with atoms on the
/// shared inner sphere added back.
pub fn annulus_mass(mu: &RadonMeasure, annuli: &DyadicAnnuli, i: i32) -> Result<f64> {
    if !annuli.contains(i) {
        return Err(Error::Precondition(format!(
            "annulus index {i} outside range [{}, {}]",
            annuli.i_min(),
            annuli.i_max()
        )));
    }
    let (rin, rout) = DyadicAnnuli::omega_big_radii(i);
    let outer = mu.ball_mass(annuli.center(), rout);
    let inner = mu.ball_mass(annuli.center(), rin);
    // atoms exactly on the inner sphere belong to the closed annulus but were
    // subtracted with the inner ball
    let on_sphere: f64 = mu
        .atoms()
        .iter()
        .filter(|a| a.point.dist(annuli.center()) == rin)
        .map(|a| a.mass)
        .sum();
    Ok((outer - inner + on_sphere).max(0.0))
}

/// Parses a measure file; `grid` records load their cell files relative to
/// the measure file's directory.
pub fn read_measure_file(path: &Path) -> Result<RadonMeasure> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut mu = RadonMeasure::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let kind = tok.next().unwrap();
        let rest: Vec<&str> = tok.collect();
        let ctx = |msg: String| Error::Config(format!("measure file line {}: {msg}", lineno + 1));
        match kind {
            "atom" => {
                if rest.len() < 3 || rest.len() > 5 {
                    return Err(ctx("atom needs 2..=4 coordinates and a mass".into()));
                }
                let nums: Vec<f64> = rest
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|_| ctx(format!("bad number '{t}'"))))
                    .collect::<Result<_>>()?;
                let (coords, mass) = nums.split_at(nums.len() - 1);
                mu.push_atom(Point::new(coords)?, mass[0])?;
            }
            "radial" => {
                let split = rest
                    .iter()
                    .position(|&t| t == "table")
                    .ok_or_else(|| ctx("radial record needs a 'table' keyword".into()))?;
                let coords: Vec<f64> = rest[..split]
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|_| ctx(format!("bad number '{t}'"))))
                    .collect::<Result<_>>()?;
                if rest.len() != split + 2 {
                    return Err(ctx("radial record needs one r:v,... list after 'table'".into()));
                }
                let mut samples = Vec::new();
                for pair in rest[split + 1].split(',') {
                    let (r, v) = pair
                        .split_once(':')
                        .ok_or_else(|| ctx(format!("bad table entry '{pair}'")))?;
                    let r: f64 = r.parse().map_err(|_| ctx(format!("bad radius '{r}'")))?;
                    let v: f64 = v.parse().map_err(|_| ctx(format!("bad value '{v}'")))?;
                    samples.push((r, v));
                }
                mu.push_radial(RadialPart::new(Point::new(&coords)?, &samples)?)?;
            }
            "grid" => {
                if rest.len() != 1 {
                    return Err(ctx("grid record needs exactly one path".into()));
                }
                let cell_path = base.join(rest[0]);
                let (domain, masses) = read_cell_file(&cell_path)?;
                mu.push_grid(GridPart::new(domain, masses)?)?;
            }
            other => return Err(ctx(format!("unknown record kind '{other}'"))),
        }
    }
    Ok(mu)
}

/// Writes a measure file; grid parts are written as sibling cell files named
/// `<stem>-grid<k>.txt`.
pub fn write_measure_file(path: &Path, mu: &RadonMeasure) -> Result<()> {
    let mut s = String::new();
    for a in mu.atoms() {
        let coords = a
            .point
            .coords()
            .iter()
            .map(|c| format!("{c:?}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(s, "atom {coords} {:?}", a.mass);
    }
    for r in mu.radial_parts() {
        let coords = r
            .center
            .coords()
            .iter()
            .map(|c| format!("{c:?}"))
            .collect::<Vec<_>>()
            .join(" ");
        let table = r
            .radii
            .iter()
            .zip(&r.values)
            .map(|(rr, vv)| format!("{rr:?}:{vv:?}"))
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(s, "radial {coords} table {table}");
    }
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("measure");
    for (k, g) in mu.grid_parts().iter().enumerate() {
        let name = format!("{stem}-grid{k}.txt");
        let cell_path = path.with_file_name(&name);
        write_cell_file(&cell_path, g.domain(), g.cell_masses())?;
        let _ = writeln!(s, "grid {name}");
    }
    std::fs::write(path, s)?;
    Ok(())
}
