//! Per-direction antenna gain under conjugate (matched) beamforming.
//!
//! The gain of a candidate array toward a direction is the product (sum in
//! dB) of a parametric single-element pattern and the array factor of the
//! element geometry under the current weights. Weights are ideal matched
//! weights: the normalized conjugate steering vector toward the served
//! direction, which maximizes gain there at exactly `N` (element count).

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::array_gen::ArrayGeometry;
use crate::error::{Error, Result};

/// Peak single-element gain, dBi.
pub const ELEMENT_GAIN_MAX_DBI: f64 = 8.0;
/// Half-power beamwidth of the element pattern in both planes, radians (65 deg).
pub const ELEMENT_HPBW_RAD: f64 = 65.0 * PI / 180.0;
/// Side-lobe attenuation floor and front-back ratio, dB.
pub const ELEMENT_ATTENUATION_MAX_DB: f64 = 30.0;
/// Array factor powers are clamped here before taking the log.
pub const ARRAY_FACTOR_FLOOR: f64 = 1e-30;

/// Propagation direction in the panel frame.
///
/// `zenith` is measured from the vertical (+z) axis, `azimuth` in the
/// horizontal plane from the panel boresight (+x). The array lies in the
/// y-z plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub azimuth: f64,
    pub zenith: f64,
}

impl Direction {
    pub fn new(azimuth: f64, zenith: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&zenith) {
            return Err(Error::OutOfBounds(format!(
                "zenith must lie in [0, pi], got {zenith}"
            )));
        }
        if !(azimuth > -PI && azimuth <= PI) || !azimuth.is_finite() {
            return Err(Error::OutOfBounds(format!(
                "azimuth must lie in (-pi, pi], got {azimuth}"
            )));
        }
        Ok(Self { azimuth, zenith })
    }

    /// Horizontal boresight: zenith 90 deg, azimuth 0.
    pub fn boresight() -> Self {
        Self { azimuth: 0.0, zenith: FRAC_PI_2 }
    }
}

/// Unit-norm complex beamforming weights, one entry per array element.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingWeights(Vec<Complex64>);

impl BeamformingWeights {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Parametric element pattern: quadratic roll-off in both planes, each
/// capped at 30 dB, with a 30 dB total attenuation floor and an 8 dBi peak.
pub fn element_gain_db(dir: &Direction) -> f64 {
    let a_v = -f64::min(
        12.0 * ((dir.zenith - FRAC_PI_2) / ELEMENT_HPBW_RAD).powi(2),
        ELEMENT_ATTENUATION_MAX_DB,
    );
    let a_h = -f64::min(
        12.0 * (dir.azimuth / ELEMENT_HPBW_RAD).powi(2),
        ELEMENT_ATTENUATION_MAX_DB,
    );
    ELEMENT_GAIN_MAX_DBI - f64::min(-(a_v + a_h), ELEMENT_ATTENUATION_MAX_DB)
}

/// Steering vector of `geom` toward `dir`.
///
/// Entry `i` is `exp(j*2*pi*(y_i*sin(zenith)*sin(azimuth) + z_i*cos(zenith)))`;
/// positions are already in wavelengths, so the wavenumber is absorbed.
pub fn steering_vector(geom: &ArrayGeometry, dir: &Direction) -> Result<Vec<Complex64>> {
    if geom.is_empty() {
        return Err(Error::EmptyInput("steering vector of an empty geometry".into()));
    }
    let ky = dir.zenith.sin() * dir.azimuth.sin();
    let kz = dir.zenith.cos();
    Ok(geom
        .elements
        .iter()
        .map(|&(y, z)| Complex64::from_polar(1.0, TAU * (y * ky + z * kz)))
        .collect())
}

/// Matched weights toward `target`: `conj(a(target)) / ||a(target)||`.
pub fn conjugate_weights(geom: &ArrayGeometry, target: &Direction) -> Result<BeamformingWeights> {
    let a = steering_vector(geom, target)?;
    let norm = (a.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
    Ok(BeamformingWeights(a.iter().map(|v| v.conj() / norm).collect()))
}

/// Array factor power `|sum_i w_i a_i(dir)|^2`, unclamped.
///
/// The conjugation lives in the weights themselves, so the radiated field
/// toward `dir` is the plain dot product of weights and steering vector.
pub fn array_factor_power(
    geom: &ArrayGeometry,
    weights: &BeamformingWeights,
    dir: &Direction,
) -> Result<f64> {
    if weights.len() != geom.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} elements",
            weights.len(),
            geom.len()
        )));
    }
    let a = steering_vector(geom, dir)?;
    let dot: Complex64 = weights
        .as_slice()
        .iter()
        .zip(&a)
        .map(|(w, ai)| w * ai)
        .sum();
    Ok(dot.norm_sqr())
}

/// Total gain toward `dir`: element pattern plus array factor, in dB.
pub fn array_gain_db(
    geom: &ArrayGeometry,
    weights: &BeamformingWeights,
    dir: &Direction,
) -> Result<f64> {
    let af = array_factor_power(geom, weights, dir)?.max(ARRAY_FACTOR_FLOOR);
    Ok(element_gain_db(dir) + 10.0 * af.log10())
}

/// Writes the gain of `(geom, weights)` over a theta x phi grid (degrees) as
/// CSV with header `theta_deg,phi_deg,gain_db`.
pub fn write_pattern_csv<W: std::io::Write>(
    geom: &ArrayGeometry,
    weights: &BeamformingWeights,
    thetas_deg: &[f64],
    phis_deg: &[f64],
    out: &mut W,
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::InvalidArgument(format!("pattern export failed: {e}"));
    writeln!(out, "theta_deg,phi_deg,gain_db").map_err(io_err)?;
    for &theta in thetas_deg {
        for &phi in phis_deg {
            let dir = Direction::new(phi.to_radians(), theta.to_radians())?;
            let gain = array_gain_db(geom, weights, &dir)?;
            writeln!(out, "{theta},{phi},{gain}").map_err(io_err)?;
        }
    }
    Ok(())
}
