//! Randomized thinned-array generation over a rectangular lattice.
//!
//! A thinned array is described by an activation mask: one quadrant of the
//! lattice is sampled and mirrored onto the other three, forcing left-right
//! and top-bottom symmetry. Within the generated quadrant, each cell draws a
//! uniform value that is weighted by a separable exponential probability
//! profile `f(dy, dz) = exp(-alpha_y*dy) * exp(-alpha_z*dz)`, where `dy` and
//! `dz` are the cell's physical distances from the lattice center in
//! wavelengths. The `n_active / 4` cells with the largest weighted values
//! win. Scoring and selection happen entirely in the log domain so steep
//! profiles on large lattices cannot underflow into spurious ties.
//!
//! Cells that sit exactly on a center line of an odd-sized dimension are
//! excluded from quadrant selection; mirroring therefore always produces
//! exactly `n_active` distinct active cells.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, substream};

/// Rectangular element lattice: grid dimensions plus physical spacing.
///
/// `n_rows` counts elements along the vertical (z) axis, `n_cols` along the
/// horizontal (y) axis. Spacings are in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub d_y: f64,
    pub d_z: f64,
}

impl LatticeSpec {
    pub fn new(n_rows: usize, n_cols: usize, d_y: f64, d_z: f64) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "lattice dimensions must be positive, got {n_rows}x{n_cols}"
            )));
        }
        let valid_spacing = |v: f64| v.is_finite() && v > 0.0;
        if !valid_spacing(d_y) || !valid_spacing(d_z) {
            return Err(Error::InvalidArgument(format!(
                "lattice spacings must be positive and finite, got d_y={d_y}, d_z={d_z}"
            )));
        }
        Ok(Self { n_rows, n_cols, d_y, d_z })
    }

    /// Rows of the top-left quadrant eligible for selection. For odd
    /// `n_rows` the center row is excluded.
    pub fn quadrant_rows(&self) -> usize {
        self.n_rows / 2
    }

    /// Columns of the top-left quadrant eligible for selection. For odd
    /// `n_cols` the center column is excluded.
    pub fn quadrant_cols(&self) -> usize {
        self.n_cols / 2
    }

    fn center_row(&self) -> f64 {
        (self.n_rows as f64 - 1.0) / 2.0
    }

    fn center_col(&self) -> f64 {
        (self.n_cols as f64 - 1.0) / 2.0
    }
}

/// Separable exponential decay profile biasing which lattice cells activate.
///
/// Positive rates pull active elements toward the lattice center along that
/// axis; negative rates push them toward the edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityProfile {
    /// Decay rate per wavelength along the horizontal (y) axis.
    pub alpha_y: f64,
    /// Decay rate per wavelength along the vertical (z) axis.
    pub alpha_z: f64,
}

impl ProbabilityProfile {
    pub fn new(alpha_y: f64, alpha_z: f64) -> Result<Self> {
        if !alpha_y.is_finite() || !alpha_z.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "profile rates must be finite, got alpha_y={alpha_y}, alpha_z={alpha_z}"
            )));
        }
        Ok(Self { alpha_y, alpha_z })
    }
}

/// Boolean activation grid with exactly `n_active` true cells, symmetric
/// under left-right and top-bottom mirroring about the lattice center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationMask {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<bool>,
    n_active: usize,
}

impl ActivationMask {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn is_active(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.n_cols + col]
    }

    /// Row-major view of the grid.
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }
}

/// Physical element positions `(y, z)` in wavelengths, centered so the
/// lattice centroid sits at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub elements: Vec<(f64, f64)>,
}

impl ArrayGeometry {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Natural log of the profile value `f(delta_y, delta_z)`.
///
/// Selection never exponentiates this; the log form keeps steep profiles
/// (alpha up to 10 on a 100x99 lattice) away from underflow.
pub fn log_profile_value(profile: &ProbabilityProfile, delta_y: f64, delta_z: f64) -> f64 {
    -profile.alpha_y * delta_y - profile.alpha_z * delta_z
}

/// Checks that `n_active` is a positive multiple of 4 whose per-quadrant
/// share fits in the eligible quadrant of `lattice`.
pub fn validate_mask_request(lattice: &LatticeSpec, n_active: usize) -> Result<usize> {
    if n_active == 0 || !n_active.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "n_active must be a positive multiple of 4, got {n_active}"
        )));
    }
    let per_quadrant = n_active / 4;
    let capacity = lattice.quadrant_rows() * lattice.quadrant_cols();
    if per_quadrant > capacity {
        return Err(Error::InvalidArgument(format!(
            "n_active/4 = {per_quadrant} exceeds the {capacity} eligible quadrant cells \
             of a {}x{} lattice",
            lattice.n_rows, lattice.n_cols
        )));
    }
    Ok(per_quadrant)
}

/// Generates one randomized activation mask.
///
/// One uniform draw is consumed per quadrant cell, in row-major quadrant
/// order, from a fresh stream seeded with `seed`. Cell `i` scores
/// `ln(u_i) + log_profile_value(dy_i, dz_i)`; the `n_active / 4` largest
/// scores win, with ties broken by row-major cell index, and the selected
/// quadrant is mirrored onto the other three.
pub fn generate_mask(
    lattice: &LatticeSpec,
    profile: &ProbabilityProfile,
    n_active: usize,
    seed: u64,
) -> Result<ActivationMask> {
    let per_quadrant = validate_mask_request(lattice, n_active)?;
    let q_rows = lattice.quadrant_rows();
    let q_cols = lattice.quadrant_cols();

    let mut rng = stream(seed);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(q_rows * q_cols);
    for r in 0..q_rows {
        let dz = (lattice.center_row() - r as f64) * lattice.d_z;
        for c in 0..q_cols {
            let dy = (lattice.center_col() - c as f64) * lattice.d_y;
            let u: f64 = rng.gen();
            let score = u.ln() + log_profile_value(profile, dy, dz);
            scored.push((score, r * q_cols + c));
        }
    }

    // Largest score first, row-major index as the tiebreaker; the comparator
    // is a strict total order, so the selected set is unique.
    let by_score = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if per_quadrant < scored.len() {
        scored.select_nth_unstable_by(per_quadrant - 1, by_score);
    }

    let mut cells = vec![false; lattice.n_rows * lattice.n_cols];
    for &(_, qidx) in &scored[..per_quadrant] {
        let r = qidx / q_cols;
        let c = qidx % q_cols;
        let rm = lattice.n_rows - 1 - r;
        let cm = lattice.n_cols - 1 - c;
        for (row, col) in [(r, c), (r, cm), (rm, c), (rm, cm)] {
            cells[row * lattice.n_cols + col] = true;
        }
    }

    Ok(ActivationMask {
        n_rows: lattice.n_rows,
        n_cols: lattice.n_cols,
        cells,
        n_active,
    })
}

/// Converts a mask to physical element positions.
///
/// Cell `(r, c)` maps to `y = (c - (n_cols-1)/2) * d_y`,
/// `z = (r - (n_rows-1)/2) * d_z`; output follows row-major cell order.
pub fn mask_to_geometry(lattice: &LatticeSpec, mask: &ActivationMask) -> Result<ArrayGeometry> {
    if mask.n_rows != lattice.n_rows || mask.n_cols != lattice.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{} but lattice is {}x{}",
            mask.n_rows, mask.n_cols, lattice.n_rows, lattice.n_cols
        )));
    }
    let cy = lattice.center_col();
    let cz = lattice.center_row();
    let mut elements = Vec::with_capacity(mask.n_active);
    for r in 0..mask.n_rows {
        for c in 0..mask.n_cols {
            if mask.is_active(r, c) {
                elements.push(((c as f64 - cy) * lattice.d_y, (r as f64 - cz) * lattice.d_z));
            }
        }
    }
    Ok(ArrayGeometry { elements })
}

/// Full regular grid, centered at the origin. The baseline geometries
/// (8x8 half-wavelength panel, 64x1 vertical line) come from here.
pub fn upa_geometry(n_rows: usize, n_cols: usize, d_y: f64, d_z: f64) -> Result<ArrayGeometry> {
    let lattice = LatticeSpec::new(n_rows, n_cols, d_y, d_z)?;
    let cy = lattice.center_col();
    let cz = lattice.center_row();
    let mut elements = Vec::with_capacity(n_rows * n_cols);
    for r in 0..n_rows {
        for c in 0..n_cols {
            elements.push(((c as f64 - cy) * d_y, (r as f64 - cz) * d_z));
        }
    }
    Ok(ArrayGeometry { elements })
}

/// Per-cell activation frequency over many generated masks.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major activation frequencies in [0, 1].
    pub values: Vec<f64>,
}

impl ProbabilityMap {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }
}

/// Estimates the probability that each lattice cell is active.
///
/// Sample `i` uses the substream seed `substream(seed, i)`; masks may be
/// generated in parallel because integer counts reduce exactly in any
/// order. The result inherits both mirror symmetries from the per-mask
/// symmetry.
pub fn activation_probability_map(
    lattice: &LatticeSpec,
    profile: &ProbabilityProfile,
    n_active: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ProbabilityMap> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    validate_mask_request(lattice, n_active)?;

    let n_cells = lattice.n_rows * lattice.n_cols;
    let counts = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mask = generate_mask(lattice, profile, n_active, substream(seed, i as u64))?;
            let mut local = vec![0u64; n_cells];
            for (cell, &on) in local.iter_mut().zip(mask.cells()) {
                *cell += on as u64;
            }
            Ok(local)
        })
        .try_reduce(
            || vec![0u64; n_cells],
            |mut acc, local| {
                for (a, b) in acc.iter_mut().zip(&local) {
                    *a += b;
                }
                Ok(acc)
            },
        )?;

    let values = counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
    Ok(ProbabilityMap {
        n_rows: lattice.n_rows,
        n_cols: lattice.n_cols,
        values,
    })
}

/// Renders a mask as lines of `0`/`1` characters, one lattice row per line,
/// row 0 first.
pub fn mask_to_text(mask: &ActivationMask) -> String {
    let mut out = String::with_capacity((mask.n_cols + 1) * mask.n_rows);
    for r in 0..mask.n_rows {
        for c in 0..mask.n_cols {
            out.push(if mask.is_active(r, c) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// Parses the text form produced by [`mask_to_text`].
pub fn mask_from_text(text: &str) -> Result<ActivationMask> {
    let rows: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    if rows.is_empty() {
        return Err(Error::Parse("mask text has no rows".into()));
    }
    let n_cols = rows[0].chars().count();
    let mut cells = Vec::with_capacity(rows.len() * n_cols);
    for (i, row) in rows.iter().enumerate() {
        if row.chars().count() != n_cols {
            return Err(Error::Parse(format!(
                "mask row {i} has {} cells, expected {n_cols}",
                row.chars().count()
            )));
        }
        for ch in row.chars() {
            match ch {
                '0' => cells.push(false),
                '1' => cells.push(true),
                other => return Err(Error::Parse(format!("unexpected mask character {other:?}"))),
            }
        }
    }
    let n_active = cells.iter().filter(|&&b| b).count();
    Ok(ActivationMask {
        n_rows: rows.len(),
        n_cols,
        cells,
        n_active,
    })
}

/// Writes an activation map as CSV with header `row,col,probability`,
/// probabilities printed with 6 decimal digits.
pub fn write_activation_map_csv<W: std::io::Write>(
    map: &ProbabilityMap,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "row,col,probability")?;
    for r in 0..map.n_rows {
        for c in 0..map.n_cols {
            writeln!(out, "{r},{c},{:.6}", map.at(r, c))?;
        }
    }
    Ok(())
}
