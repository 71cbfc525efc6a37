//! Rasterised region maps over frequency space.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{membership_flags, sample_arcs, spatial_arcs, MembershipFlags};
use crate::error::{Error, Result};
use crate::geometry::{cross3, ScanConfig, Vector};
use crate::herglotz::CouplingCoefficient;

/// Number of `σ ∈ M_y` probed by the `d = 3` uniqueness rule.
pub const DIM_RULE_PROBES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum RegionLabel {
    Outside = 0,
    Y1Only = 1,
    Y1AndY2 = 2,
    TildeY = 3,
    Y2NonUnique = 4,
    Degenerate = 5,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 6] = [
        RegionLabel::Outside,
        RegionLabel::Y1Only,
        RegionLabel::Y1AndY2,
        RegionLabel::TildeY,
        RegionLabel::Y2NonUnique,
        RegionLabel::Degenerate,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Whether `φ` at a point with this label is determined by the data.
    pub fn is_unique(self) -> bool {
        matches!(self, RegionLabel::Y1Only | RegionLabel::Y1AndY2 | RegionLabel::TildeY)
    }
}

/// Affine plane `origin + x·u + y·v` used for `d = 3` maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slice {
    pub origin: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Slice {
    /// The plane through 0 spanned by two coordinate axes.
    pub fn coordinate(d: usize, i: usize, j: usize) -> Self {
        let mut u = vec![0.0; d];
        let mut v = vec![0.0; d];
        u[i] = 1.0;
        v[j] = 1.0;
        Self { origin: vec![0.0; d], u, v }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.origin.len() != d || self.u.len() != d || self.v.len() != d {
            return Err(Error::InvalidSlice(format!("slice vectors must have length {d}")));
        }
        let u = Vector::from_column_slice(&self.u);
        let v = Vector::from_column_slice(&self.v);
        if (u.norm() - 1.0).abs() > 1e-9 || (v.norm() - 1.0).abs() > 1e-9 || u.dot(&v).abs() > 1e-9 {
            return Err(Error::InvalidSlice("u and v must be orthonormal".into()));
        }
        if self.origin.iter().chain(&self.u).chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSlice("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn embed(&self, x: f64, y: f64) -> Vector {
        Vector::from_iterator(self.origin.len(), (0..self.origin.len()).map(|i| self.origin[i] + x * self.u[i] + y * self.v[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMap {
    pub n: usize,
    pub k0: f64,
    pub slice: Option<Slice>,
    /// Row-major labels, index `iy * n + ix`.
    pub labels: Vec<RegionLabel>,
    pub near_boundary: Vec<bool>,
}

/// Cell-center coordinate of index `i` on `[-2k0, 2k0]` with `n` cells.
pub fn cell_center(k0: f64, n: usize, i: usize) -> f64 {
    -2.0 * k0 + (i as f64 + 0.5) * 4.0 * k0 / n as f64
}

impl RegionMap {
    pub fn label(&self, ix: usize, iy: usize) -> RegionLabel {
        self.labels[iy * self.n + ix]
    }

    pub fn center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (cell_center(self.k0, self.n, ix), cell_center(self.k0, self.n, iy))
    }

    pub fn count(&self, l: RegionLabel) -> usize {
        self.labels.iter().filter(|x| **x == l).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let io = |e: csv::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
        wr.write_record(["ix", "iy", "x", "y", "label"]).map_err(io)?;
        for iy in 0..self.n {
            for ix in 0..self.n {
                let (x, y) = self.center(ix, iy);
                wr.write_record([
                    ix.to_string(),
                    iy.to_string(),
                    x.to_string(),
                    y.to_string(),
                    self.label(ix, iy).code().to_string(),
                ])
                .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::InvalidConfig(format!("csv write failed: {e}")))?;
        Ok(())
    }

    /// Plain PGM with one gray level per label; the top row is the largest `y`.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidConfig(format!("pgm write failed: {e}"));
        let mut s = format!("P2\n{} {}\n5\n", self.n, self.n);
        for iy in (0..self.n).rev() {
            let row: Vec<String> = (0..self.n).map(|ix| self.label(ix, iy).code().to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        w.write_all(s.as_bytes()).map_err(io)
    }
}

fn combine(flags: &MembershipFlags) -> RegionLabel {
    match (flags.in_y1, flags.in_y2) {
        (false, false) => RegionLabel::Outside,
        (true, false) => RegionLabel::Y1Only,
        (true, true) => RegionLabel::Y1AndY2,
        (false, true) if !flags.nondegenerate => RegionLabel::Degenerate,
        (false, true) if flags.in_tilde_y => RegionLabel::TildeY,
        (false, true) => RegionLabel::Y2NonUnique,
    }
}

/// `d = 3`: a `𝒴₂ \ 𝒴₁` point counts as determined if some probed `σ ∈ M_y`
/// satisfies the gradient condition and is not in the plane of `y` and `ν`.
fn spatial_rule(bc: &CouplingCoefficient, y: &Vector) -> Result<bool> {
    let cfg = bc.cfg();
    let Some((frame, arcs)) = spatial_arcs(cfg, y, false)? else { return Ok(false) };
    let ny = cross3(&cfg.nu, y);
    for (_, sigma) in sample_arcs(&frame, &arcs, DIM_RULE_PROBES) {
        if sigma.dot(&ny).abs() <= cfg.tol {
            continue;
        }
        if bc.gradient_condition(&sigma)?.holds {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Label of a single frequency point together with the boundary flag.
pub fn label_point(cfg: &ScanConfig, y: &Vector, dim_rule: Option<&CouplingCoefficient>) -> Result<(RegionLabel, bool)> {
    if y.norm() > 2.0 * cfg.k0 + cfg.tol {
        return Ok((RegionLabel::Outside, false));
    }
    let flags = membership_flags(cfg, y)?;
    let mut label = combine(&flags);
    if cfg.d >= 3 && label == RegionLabel::Y2NonUnique {
        if let Some(bc) = dim_rule {
            label = if spatial_rule(bc, y)? { RegionLabel::TildeY } else { RegionLabel::Degenerate };
        }
    }
    Ok((label, flags.near_boundary))
}

/// Labels an `n × n` raster over `[-2k0, 2k0]²` (or the given slice for `d = 3`).
///
/// With `dim_rule` set and `d = 3`, cells of `𝒴₂ \ 𝒴₁` are labelled `TildeY`
/// when the density condition holds at a probed anchor, and `Degenerate` otherwise.
pub fn region_map(
    cfg: &ScanConfig,
    n: usize,
    slice: Option<&Slice>,
    dim_rule: Option<&CouplingCoefficient>,
) -> Result<RegionMap> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("grid size must be at least 2, got {n}")));
    }
    let slice = match (cfg.d, slice) {
        (2, None) => None,
        (2, Some(s)) => {
            s.validate(2)?;
            Some(s.clone())
        }
        (3, Some(s)) => {
            s.validate(3)?;
            Some(s.clone())
        }
        (3, None) => return Err(Error::InvalidSlice("a 3D region map needs a slice".into())),
        (d, _) => return Err(Error::UnsupportedDimension(d)),
    };
    let rows: Vec<Vec<(RegionLabel, bool)>> = (0..n)
        .into_par_iter()
        .map(|iy| {
            let yc = cell_center(cfg.k0, n, iy);
            (0..n)
                .map(|ix| {
                    let xc = cell_center(cfg.k0, n, ix);
                    let p = match &slice {
                        Some(s) => s.embed(xc, yc),
                        None => Vector::from_column_slice(&[xc, yc]),
                    };
                    label_point(cfg, &p, dim_rule)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (labels, near_boundary) = rows.into_iter().flatten().unzip();
    Ok(RegionMap { n, k0: cfg.k0, slice, labels, near_boundary })
}
