//! Cartesian grid domains with boundary masks, and the plain-text nodal and
//! cell file formats.
//!
//! A [`GridDomain`] is a box `[lower, upper]` split into `cells[a]` cells per
//! axis with one common spacing `h`. Nodes sit at cell corners; values are
//! stored row-major with the last axis varying fastest. The boundary mask
//! marks the nodes where Dirichlet data is pinned: the box faces plus any
//! declared holes (e.g. the outside of a ball or annulus carved from the
//! box).
//!
//! File formats (whitespace-separated, `#` comments allowed):
//!
//! ```text
//! dim 3
//! lower -1 -1 -1
//! upper  1  1  1
//! cells  8  8  8
//! v v v ...        # node values (field file) or cell values (cell file)
//! ```
//!
//! A field file carries `(cells[a]+1)` values per axis (nodal), a cell file
//! `cells[a]` per axis.

use crate::error::Error;
use crate::geometry::{Point, MAX_DIM};
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct GridDomain {
    dim: usize,
    lower: Point,
    upper: Point,
    cells: [usize; MAX_DIM],
    h: f64,
    boundary_mask: Vec<bool>,
}

impl GridDomain {
    /// Box domain; boundary mask marks the box faces.
    pub fn new_box(lower: Point, upper: Point, cells: &[usize]) -> Result<Self> {
        let dim = lower.dim();
        if upper.dim() != dim || cells.len() != dim {
            return Err(Error::Geometry("dimension mismatch".into()));
        }
        let mut cl = [1usize; MAX_DIM];
        cl[..dim].copy_from_slice(cells);
        let h = (upper.coord(0) - lower.coord(0)) / cl[0] as f64;
        if !(h > 0.0) {
            return Err(Error::Geometry("nonpositive spacing".into()));
        }
        for a in 0..dim {
            if cells[a] == 0 {
                return Err(Error::Geometry("zero cells on an axis".into()));
            }
            let ha = (upper.coord(a) - lower.coord(a)) / cl[a] as f64;
            if ((ha - h) / h).abs() > 1e-9 {
                return Err(Error::Geometry(format!(
                    "spacing differs across axes: {ha} vs {h}"
                )));
            }
        }
        let mut g = GridDomain {
            dim,
            lower,
            upper,
            cells: cl,
            h,
            boundary_mask: Vec::new(),
        };
        let mask = (0..g.node_count())
            .map(|i| {
                let m = g.node_multi(i);
                (0..dim).any(|a| m[a] == 0 || m[a] == g.cells[a])
            })
            .collect();
        g.boundary_mask = mask;
        Ok(g)
    }

    /// Ball `B(center, radius)` carved out of its bounding box: every node at
    /// distance >= radius (and the box faces) is boundary.
    pub fn ball(center: Point, radius: f64, cells_per_axis: usize) -> Result<Self> {
        let dim = center.dim();
        let lower = center.offset(&Point::e1(dim)?, 0.0); // copy
        let mut lo = lower;
        let mut hi = lower;
        for a in 0..dim {
            lo.set_coord(a, center.coord(a) - radius);
            hi.set_coord(a, center.coord(a) + radius);
        }
        let mut g = GridDomain::new_box(lo, hi, &vec![cells_per_axis; dim])?;
        g.mark_boundary_where(|p| p.dist(&center) >= radius * (1.0 - 1e-12));
        Ok(g)
    }

    /// Closed annulus `r_in <= |x - center| <= r_out` carved out of the box
    /// `[center - r_out, center + r_out]`.
    pub fn annulus(center: Point, r_in: f64, r_out: f64, cells_per_axis: usize) -> Result<Self> {
        if !(0.0 < r_in && r_in < r_out) {
            return Err(Error::Geometry("annulus radii out of order".into()));
        }
        let dim = center.dim();
        let mut lo = center;
        let mut hi = center;
        for a in 0..dim {
            lo.set_coord(a, center.coord(a) - r_out);
            hi.set_coord(a, center.coord(a) + r_out);
        }
        let mut g = GridDomain::new_box(lo, hi, &vec![cells_per_axis; dim])?;
        g.mark_boundary_where(|p| {
            let d = p.dist(&center);
            d <= r_in * (1.0 + 1e-12) || d >= r_out * (1.0 - 1e-12)
        });
        Ok(g)
    }

    /// Adds `pred`-selected nodes to the boundary mask.
    pub fn mark_boundary_where<F: Fn(&Point) -> bool>(&mut self, pred: F) {
        for i in 0..self.node_count() {
            if pred(&self.node_pos(i)) {
                self.boundary_mask[i] = true;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_mask[node]
    }

    pub fn nodes_per_axis(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim).map(|a| self.cells[a] + 1).product()
    }

    pub fn cell_count(&self) -> usize {
        (0..self.dim).map(|a| self.cells[a]).product()
    }

    /// Node strides, last axis fastest.
    pub fn node_strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0usize; MAX_DIM];
        s[self.dim - 1] = 1;
        for a in (0..self.dim - 1).rev() {
            s[a] = s[a + 1] * (self.cells[a + 1] + 1);
        }
        s
    }

    /// Cell strides, last axis fastest.
    pub fn cell_strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0usize; MAX_DIM];
        s[self.dim - 1] = 1;
        for a in (0..self.dim - 1).rev() {
            s[a] = s[a + 1] * self.cells[a + 1];
        }
        s
    }

    pub fn node_linear(&self, multi: &[usize]) -> usize {
        let s = self.node_strides();
        (0..self.dim).map(|a| multi[a] * s[a]).sum()
    }

    pub fn node_multi(&self, mut linear: usize) -> [usize; MAX_DIM] {
        let s = self.node_strides();
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            m[a] = linear / s[a];
            linear %= s[a];
        }
        m
    }

    pub fn cell_linear(&self, multi: &[usize]) -> usize {
        let s = self.cell_strides();
        (0..self.dim).map(|a| multi[a] * s[a]).sum()
    }

    pub fn cell_multi(&self, mut linear: usize) -> [usize; MAX_DIM] {
        let s = self.cell_strides();
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            m[a] = linear / s[a];
            linear %= s[a];
        }
        m
    }

    pub fn node_pos(&self, linear: usize) -> Point {
        let m = self.node_multi(linear);
        let mut p = self.lower;
        for a in 0..self.dim {
            p.set_coord(a, self.lower.coord(a) + m[a] as f64 * self.h);
        }
        p
    }

    /// Lower and upper corners of a cell.
    pub fn cell_bounds(&self, cell: usize) -> (Point, Point) {
        let m = self.cell_multi(cell);
        let mut lo = self.lower;
        let mut hi = self.lower;
        for a in 0..self.dim {
            lo.set_coord(a, self.lower.coord(a) + m[a] as f64 * self.h);
            hi.set_coord(a, self.lower.coord(a) + (m[a] + 1) as f64 * self.h);
        }
        (lo, hi)
    }

    /// Linear node index of a cell's lowest corner.
    pub fn cell_base_node(&self, cell: usize) -> usize {
        let m = self.cell_multi(cell);
        self.node_linear(&m[..self.dim])
    }

    /// Node-linear offsets of the `2^dim` corners of any cell, indexed by a
    /// corner bitmask (bit `a` set means +1 along axis `a`).
    pub fn corner_offsets(&self) -> Vec<usize> {
        let s = self.node_strides();
        let mut out = Vec::with_capacity(1 << self.dim);
        for k in 0..(1usize << self.dim) {
            let mut off = 0usize;
            for a in 0..self.dim {
                if k & (1 << a) != 0 {
                    off += s[a];
                }
            }
            out.push(off);
        }
        out
    }

    /// Nodes whose distance to `center` lies in `[rmin, rmax]`.
    pub fn nodes_in_shell(&self, center: &Point, rmin: f64, rmax: f64) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| {
                let d = self.node_pos(i).dist(center);
                d >= rmin && d <= rmax
            })
            .collect()
    }

    /// Multilinear interpolation of a nodal field at an arbitrary point
    /// (clamped to the box).
    pub fn interpolate(&self, values: &[f64], p: &Point) -> f64 {
        debug_assert_eq!(values.len(), self.node_count());
        let mut cell = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for a in 0..self.dim {
            let x = (p.coord(a) - self.lower.coord(a)) / self.h;
            let x = x.clamp(0.0, self.cells[a] as f64);
            let c = (x.floor() as usize).min(self.cells[a] - 1);
            cell[a] = c;
            frac[a] = x - c as f64;
        }
        let base = self.node_linear(&cell[..self.dim]);
        let offs = self.corner_offsets();
        let mut v = 0.0;
        for (k, &off) in offs.iter().enumerate() {
            let mut w = 1.0;
            for a in 0..self.dim {
                w *= if k & (1 << a) != 0 {
                    frac[a]
                } else {
                    1.0 - frac[a]
                };
            }
            v += w * values[base + off];
        }
        v
    }

    fn header_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {}", self.dim);
        let fmt_coords = |p: &Point| {
            p.coords()
                .iter()
                .map(|c| format!("{c:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(s, "lower {}", fmt_coords(&self.lower));
        let _ = writeln!(s, "upper {}", fmt_coords(&self.upper));
        let _ = writeln!(
            s,
            "cells {}",
            self.cells()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        s
    }
}

/// Multilinear prolongation of a coarse nodal field onto a finer grid over
/// the same box.
pub fn prolong(coarse: &GridDomain, coarse_values: &[f64], fine: &GridDomain) -> Vec<f64> {
    (0..fine.node_count())
        .map(|i| coarse.interpolate(coarse_values, &fine.node_pos(i)))
        .collect()
}

fn parse_header(tokens: &mut std::vec::IntoIter<String>, what: &str) -> Result<(usize, Point, Point, Vec<usize>)> {
    let expect = |tok: Option<String>, key: &str| -> Result<()> {
        match tok {
            Some(t) if t == key => Ok(()),
            other => Err(Error::Config(format!(
                "{what}: expected '{key}', found {other:?}"
            ))),
        }
    };
    let num = |tok: Option<String>| -> Result<f64> {
        let t = tok.ok_or_else(|| Error::Config(format!("{what}: unexpected end of header")))?;
        t.parse::<f64>()
            .map_err(|_| Error::Config(format!("{what}: bad number '{t}'")))
    };
    expect(tokens.next(), "dim")?;
    let dim = num(tokens.next())? as usize;
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::Config(format!("{what}: dim {dim} unsupported")));
    }
    expect(tokens.next(), "lower")?;
    let mut lo = vec![0.0; dim];
    for v in lo.iter_mut() {
        *v = num(tokens.next())?;
    }
    expect(tokens.next(), "upper")?;
    let mut hi = vec![0.0; dim];
    for v in hi.iter_mut() {
        *v = num(tokens.next())?;
    }
    expect(tokens.next(), "cells")?;
    let mut cl = vec![0usize; dim];
    for v in cl.iter_mut() {
        *v = num(tokens.next())? as usize;
    }
    Ok((dim, Point::new(&lo)?, Point::new(&hi)?, cl))
}

fn tokenize(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
        .collect()
}

/// Writes a nodal field file.
pub fn write_field_file(path: &Path, domain: &GridDomain, values: &[f64]) -> Result<()> {
    if values.len() != domain.node_count() {
        return Err(Error::Geometry("field length mismatch".into()));
    }
    let mut s = domain.header_text();
    let per_line = domain.nodes_per_axis(domain.dim() - 1);
    for chunk in values.chunks(per_line) {
        let line = chunk
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(s, "{line}");
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a nodal field file.
pub fn read_field_file(path: &Path) -> Result<(GridDomain, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut toks = tokenize(&text).into_iter();
    let (_, lo, hi, cells) = parse_header(&mut toks, "field file")?;
    let domain = GridDomain::new_box(lo, hi, &cells)?;
    let values: Vec<f64> = toks
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("field file: bad value '{t}'")))
        })
        .collect::<Result<_>>()?;
    if values.len() != domain.node_count() {
        return Err(Error::Config(format!(
            "field file: expected {} node values, found {}",
            domain.node_count(),
            values.len()
        )));
    }
    Ok((domain, values))
}

/// Writes a per-cell mass file.
pub fn write_cell_file(path: &Path, domain: &GridDomain, cell_values: &[f64]) -> Result<()> {
    if cell_values.len() != domain.cell_count() {
        return Err(Error::Geometry("cell count mismatch".into()));
    }
    let mut s = domain.header_text();
    let per_line = domain.cells()[domain.dim() - 1];
    for chunk in cell_values.chunks(per_line) {
        let line = chunk
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(s, "{line}");
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a per-cell mass file.
pub fn read_cell_file(path: &Path) -> Result<(GridDomain, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut toks = tokenize(&text).into_iter();
    let (_, lo, hi, cells) = parse_header(&mut toks, "cell file")?;
    let domain = GridDomain::new_box(lo, hi, &cells)?;
    let values: Vec<f64> = toks
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("cell file: bad value '{t}'")))
        })
        .collect::<Result<_>>()?;
    if values.len() != domain.cell_count() {
        return Err(Error::Config(format!(
            "cell file: expected {} cell values, found {}",
            domain.cell_count(),
            values.len()
        )));
    }
    Ok((domain, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(dim: usize, cells: usize) -> GridDomain {
        let lo = Point::origin(dim).unwrap();
        let mut hi = Point::origin(dim).unwrap();
        for a in 0..dim {
            hi.set_coord(a, 1.0);
        }
        GridDomain::new_box(lo, hi, &vec![cells; dim]).unwrap()
    }

    #[test]
    fn indexing_roundtrip() {
        let g = unit_box(3, 4);
        assert_eq!(g.node_count(), 125);
        assert_eq!(g.cell_count(), 64);
        for i in (0..g.node_count()).step_by(7) {
            let m = g.node_multi(i);
            assert_eq!(g.node_linear(&m[..3]), i);
        }
    }

    #[test]
    fn spacing_must_match() {
        let lo = Point::new(&[0.0, 0.0]).unwrap();
        let hi = Point::new(&[1.0, 2.0]).unwrap();
        assert!(GridDomain::new_box(lo, hi, &[4, 4]).is_err());
        assert!(GridDomain::new_box(lo, hi, &[4, 8]).is_ok());
    }

    #[test]
    fn boundary_marks_box_faces() {
        let g = unit_box(2, 2);
        let inner = g.node_linear(&[1, 1]);
        assert!(!g.is_boundary(inner));
        assert_eq!(g.boundary_mask().iter().filter(|&&b| b).count(), 8);
    }

    #[test]
    fn interpolation_reproduces_linear_fields() {
        let g = unit_box(3, 5);
        let vals: Vec<f64> = (0..g.node_count())
            .map(|i| {
                let p = g.node_pos(i);
                1.0 + 2.0 * p.coord(0) - 0.5 * p.coord(1) + 3.0 * p.coord(2)
            })
            .collect();
        let q = Point::new(&[0.31, 0.77, 0.12]).unwrap();
        let expect = 1.0 + 2.0 * 0.31 - 0.5 * 0.77 + 3.0 * 0.12;
        assert!((g.interpolate(&vals, &q) - expect).abs() < 1e-12);
    }

    #[test]
    fn field_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.txt");
        let g = unit_box(2, 3);
        let vals: Vec<f64> = (0..g.node_count()).map(|i| i as f64 * 0.25).collect();
        write_field_file(&path, &g, &vals).unwrap();
        let (g2, v2) = read_field_file(&path).unwrap();
        assert_eq!(g2.node_count(), g.node_count());
        assert_eq!(v2, vals);
    }

    #[test]
    fn ball_domain_masks_outside() {
        let g = GridDomain::ball(Point::origin(3).unwrap(), 1.0, 8).unwrap();
        for i in 0..g.node_count() {
            let d = g.node_pos(i).norm();
            if d >= 1.0 - 1e-9 {
                assert!(g.is_boundary(i));
            } else {
                assert!(!g.is_boundary(i));
            }
        }
    }
}
