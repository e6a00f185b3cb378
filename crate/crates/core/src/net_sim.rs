//! Monte Carlo downlink SINR simulator for a simplified multi-cell
//! urban micro deployment.
//!
//! Each link is reduced to a single geometric ray: street-canyon path loss
//! with a distance-dependent LOS probability and optional lognormal
//! shadowing, but no fast fading and no outdoor-to-indoor loss. Base
//! stations sit on a hexagonal grid, all panels face the same bearing (+x),
//! and every site serves one user dropped uniformly in the front half of
//! its cell. All sites carry the same candidate array and aim a conjugate
//! beam at their own user; the tagged user is the center site's, and its
//! SINR combines serving power, the beams of the interfering sites, and
//! thermal noise in the linear power domain.
//!
//! Randomness is split into documented substreams so that results are
//! bitwise independent of the worker count: iteration `i` of a simulation
//! uses `substream(seed, i)`, from which the mask, user-drop, and channel
//! streams are derived with [`STREAM_MASK`], [`STREAM_DROP`], and
//! [`STREAM_CHANNEL`]. Within a drop, site `k`'s user uses
//! `substream(drop_seed, k)`; within a channel draw, link `k` (site `k`
//! toward the tagged user) uses `substream(channel_seed, k)` and consumes
//! one uniform (LOS) plus one Box-Muller normal (shadowing), in that order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_gen::{
    generate_mask, mask_to_geometry, validate_mask_request, ArrayGeometry, LatticeSpec,
    ProbabilityProfile,
};
use crate::beam_model::{array_gain_db, conjugate_weights, Direction};
use crate::error::{Error, Result};
use crate::rng::{standard_normal, stream, substream};

/// Thermal noise density at the receiver, dBm/Hz.
pub const NOISE_DENSITY_DBM_HZ: f64 = -174.0;

/// Substream index for per-iteration mask generation.
pub const STREAM_MASK: u64 = 1;
/// Substream index for per-iteration user drops.
pub const STREAM_DROP: u64 = 2;
/// Substream index for per-iteration LOS/shadowing draws.
pub const STREAM_CHANNEL: u64 = 3;

/// How the LOS state of each link is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LosMode {
    /// Bernoulli draw from the distance-dependent LOS probability.
    #[default]
    Probabilistic,
    /// Every link is line-of-sight (testing and calibration).
    AlwaysLos,
    /// Every link is non-line-of-sight.
    AlwaysNlos,
}

/// Scenario constants of the deployment.
///
/// Defaults describe a 28 GHz urban micro layout: 7 sites at 200 m
/// inter-site distance, 10 m masts, 400 MHz of bandwidth, and 33 dBm per
/// beam. Every field can be overridden from a JSON config document;
/// unknown keys are rejected by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub carrier_freq_ghz: f64,
    pub bandwidth_mhz: f64,
    /// Total transmit power per beam, dBm.
    pub tx_power_dbm: f64,
    pub ue_noise_figure_db: f64,
    /// Hexagonal layout size; 1, 7, or 19.
    pub n_sites: usize,
    pub isd_m: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub shadowing_sigma_los_db: f64,
    pub shadowing_sigma_nlos_db: f64,
    /// Users never drop closer than this 2-D distance to their site.
    pub min_2d_distance_m: f64,
    pub shadowing_enabled: bool,
    pub los_mode: LosMode,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 28.0,
            bandwidth_mhz: 400.0,
            tx_power_dbm: 33.0,
            ue_noise_figure_db: 9.0,
            n_sites: 7,
            isd_m: 200.0,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            shadowing_sigma_los_db: 4.0,
            shadowing_sigma_nlos_db: 7.82,
            min_2d_distance_m: 10.0,
            shadowing_enabled: true,
            los_mode: LosMode::Probabilistic,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("isd_m", self.isd_m),
            ("bs_height_m", self.bs_height_m),
            ("ue_height_m", self.ue_height_m),
            ("shadowing_sigma_los_db", self.shadowing_sigma_los_db),
            ("shadowing_sigma_nlos_db", self.shadowing_sigma_nlos_db),
            ("min_2d_distance_m", self.min_2d_distance_m),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !matches!(self.n_sites, 1 | 7 | 19) {
            return Err(Error::InvalidArgument(format!(
                "n_sites must be 1, 7, or 19, got {}",
                self.n_sites
            )));
        }
        if self.min_2d_distance_m >= self.isd_m / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "min_2d_distance_m = {} leaves no room inside a cell of isd {}",
                self.min_2d_distance_m, self.isd_m
            )));
        }
        Ok(())
    }

    /// Parses a JSON config document. Missing fields take their defaults;
    /// unknown keys fail with an error naming the key.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: NetworkConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The four-dimensional design point the whole pipeline revolves around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputConfig {
    /// Horizontal lattice spacing, wavelengths.
    pub d_y: f64,
    /// Vertical lattice spacing, wavelengths.
    pub d_z: f64,
    /// Horizontal profile decay rate.
    pub alpha_y: f64,
    /// Vertical profile decay rate.
    pub alpha_z: f64,
}

impl InputConfig {
    /// Admissible spacing range, wavelengths.
    pub const D_RANGE: (f64, f64) = (0.3, 1.0);
    /// Admissible profile decay range.
    pub const ALPHA_RANGE: (f64, f64) = (-1.0, 10.0);

    pub fn new(d_y: f64, d_z: f64, alpha_y: f64, alpha_z: f64) -> Result<Self> {
        let cfg = Self { d_y, d_z, alpha_y, alpha_z };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (d_lo, d_hi) = Self::D_RANGE;
        let (a_lo, a_hi) = Self::ALPHA_RANGE;
        for (name, v, lo, hi) in [
            ("d_y", self.d_y, d_lo, d_hi),
            ("d_z", self.d_z, d_lo, d_hi),
            ("alpha_y", self.alpha_y, a_lo, a_hi),
            ("alpha_z", self.alpha_z, a_lo, a_hi),
        ] {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::OutOfBounds(format!(
                    "{name} = {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Feature order used by emulators, CSV files, and the optimizer.
    pub fn to_array(&self) -> [f64; 4] {
        [self.d_y, self.d_z, self.alpha_y, self.alpha_z]
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Uniform draw over the admissible box; consumes four uniforms in
    /// field order.
    pub fn sample_uniform<R: Rng>(rng: &mut R) -> Self {
        let unif = |rng: &mut R, lo: f64, hi: f64| lo + rng.gen::<f64>() * (hi - lo);
        let d_y = unif(rng, Self::D_RANGE.0, Self::D_RANGE.1);
        let d_z = unif(rng, Self::D_RANGE.0, Self::D_RANGE.1);
        let alpha_y = unif(rng, Self::ALPHA_RANGE.0, Self::ALPHA_RANGE.1);
        let alpha_z = unif(rng, Self::ALPHA_RANGE.0, Self::ALPHA_RANGE.1);
        Self { d_y, d_z, alpha_y, alpha_z }
    }
}

/// Simulator output for one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrStats {
    /// Arithmetic mean of the per-iteration SINR samples, dB.
    pub mean_db: f64,
    /// 5th percentile of the samples, dB.
    pub p5_db: f64,
    pub n_samples: usize,
    /// Raw per-iteration samples; dropped when persisted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl SinrStats {
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("SINR sample set".into()));
        }
        let mean_db = samples.iter().sum::<f64>() / samples.len() as f64;
        let p5_db = percentile(&samples, 5.0)?;
        Ok(Self {
            mean_db,
            p5_db,
            n_samples: samples.len(),
            samples: Some(samples),
        })
    }
}

/// Linear-interpolation quantile on sorted samples: index `h = (n-1)*p/100`.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("percentile of no samples".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::OutOfBounds(format!("percentile p = {p} outside [0, 100]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        Ok(sorted[lo])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}

/// Line-of-sight probability of the urban micro model: certain up to 18 m,
/// then `18/d + exp(-d/36) * (1 - 18/d)`.
pub fn los_probability(d_2d: f64) -> f64 {
    if d_2d <= 18.0 {
        1.0
    } else {
        18.0 / d_2d + (-d_2d / 36.0).exp() * (1.0 - 18.0 / d_2d)
    }
}

/// Street-canyon path loss before shadowing, dB.
///
/// LOS: `32.4 + 21*log10(d_3d) + 20*log10(f_GHz)`. NLOS is the max of the
/// LOS value and `22.4 + 35.3*log10(d_3d) + 21.3*log10(f_GHz)
/// - 0.3*(ue_height - 1.5)`. Distances below 1 m are rejected.
pub fn path_loss_db(cfg: &NetworkConfig, d_3d: f64, los: bool) -> Result<f64> {
    if !(d_3d >= 1.0) {
        return Err(Error::OutOfBounds(format!(
            "path loss needs d_3d >= 1 m, got {d_3d}"
        )));
    }
    let f = cfg.carrier_freq_ghz;
    let los_pl = 32.4 + 21.0 * d_3d.log10() + 20.0 * f.log10();
    if los {
        Ok(los_pl)
    } else {
        let nlos_pl =
            22.4 + 35.3 * d_3d.log10() + 21.3 * f.log10() - 0.3 * (cfg.ue_height_m - 1.5);
        Ok(los_pl.max(nlos_pl))
    }
}

/// Receiver noise power over the full bandwidth, dBm.
pub fn noise_power_dbm(cfg: &NetworkConfig) -> f64 {
    NOISE_DENSITY_DBM_HZ + 10.0 * (cfg.bandwidth_mhz * 1e6).log10() + cfg.ue_noise_figure_db
}

/// One Monte Carlo drop: site positions and one served user per site,
/// both as 2-D ground coordinates in meters. Heights come from the config.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs: Vec<[f64; 2]>,
    pub ue: Vec<[f64; 2]>,
}

/// Per-link channel state toward the tagged user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub los: bool,
    pub shadow_db: f64,
}

/// Base-station positions of the hexagonal layout: a center site, then a
/// ring of 6 at distance `isd` (bearings 0, 60, ... degrees), then for 19
/// sites a second ring of 6 at `sqrt(3)*isd` (bearings 30, 90, ...) and 6
/// at `2*isd` (bearings 0, 60, ...).
pub fn hex_site_positions(n_sites: usize, isd: f64) -> Result<Vec<[f64; 2]>> {
    let mut sites = vec![[0.0, 0.0]];
    let ring = |radius: f64, offset_deg: f64, sites: &mut Vec<[f64; 2]>| {
        for k in 0..6 {
            let bearing = (offset_deg + 60.0 * k as f64).to_radians();
            sites.push([radius * bearing.cos(), radius * bearing.sin()]);
        }
    };
    match n_sites {
        1 => {}
        7 => ring(isd, 0.0, &mut sites),
        19 => {
            ring(isd, 0.0, &mut sites);
            ring(3f64.sqrt() * isd, 30.0, &mut sites);
            ring(2.0 * isd, 0.0, &mut sites);
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "n_sites must be 1, 7, or 19, got {other}"
            )))
        }
    }
    Ok(sites)
}

// Hexagonal cell with vertices at 30 + 60k degrees; `apothem = isd/2`.
fn in_hexagon(x: f64, y: f64, apothem: f64) -> bool {
    let h = 3f64.sqrt() / 2.0;
    x.abs() <= apothem && (0.5 * x + h * y).abs() <= apothem && (-0.5 * x + h * y).abs() <= apothem
}

fn drop_ue_in_cell<R: Rng>(cfg: &NetworkConfig, bs: [f64; 2], rng: &mut R) -> [f64; 2] {
    let apothem = cfg.isd_m / 2.0;
    let circumradius = cfg.isd_m / 3f64.sqrt();
    // Rejection sample uniformly over the front half (local x > 0) of the
    // cell, at least min_2d from the mast.
    loop {
        let x = rng.gen::<f64>() * apothem;
        let y = (rng.gen::<f64>() * 2.0 - 1.0) * circumradius;
        if !in_hexagon(x, y, apothem) {
            continue;
        }
        if x.hypot(y) < cfg.min_2d_distance_m {
            continue;
        }
        return [bs[0] + x, bs[1] + y];
    }
}

/// Drops one user per site. Site `k`'s user consumes `substream(seed, k)`,
/// so removing sites never perturbs the remaining drops.
pub fn drop_scenario(cfg: &NetworkConfig, seed: u64) -> Result<Scenario> {
    cfg.validate()?;
    let bs = hex_site_positions(cfg.n_sites, cfg.isd_m)?;
    let ue = bs
        .iter()
        .enumerate()
        .map(|(k, &site)| {
            let mut rng = stream(substream(seed, k as u64));
            drop_ue_in_cell(cfg, site, &mut rng)
        })
        .collect();
    Ok(Scenario { bs, ue })
}

/// Draws the LOS state and shadowing of each link from site `k` toward the
/// tagged user, from `substream(seed, k)`. One uniform and one normal are
/// consumed per link regardless of mode.
pub fn draw_link_states(cfg: &NetworkConfig, scenario: &Scenario, seed: u64) -> Vec<LinkState> {
    let tagged = scenario.ue[0];
    scenario
        .bs
        .iter()
        .enumerate()
        .map(|(k, &site)| {
            let mut rng = stream(substream(seed, k as u64));
            let u: f64 = rng.gen();
            let z = standard_normal(&mut rng);
            let (d_2d, _) = link_distances(site, tagged, cfg);
            let los = match cfg.los_mode {
                LosMode::Probabilistic => u < los_probability(d_2d),
                LosMode::AlwaysLos => true,
                LosMode::AlwaysNlos => false,
            };
            let sigma = if los {
                cfg.shadowing_sigma_los_db
            } else {
                cfg.shadowing_sigma_nlos_db
            };
            let shadow_db = if cfg.shadowing_enabled { z * sigma } else { 0.0 };
            LinkState { los, shadow_db }
        })
        .collect()
}

/// 2-D and 3-D distances between a mast and a user position.
pub fn link_distances(bs: [f64; 2], ue: [f64; 2], cfg: &NetworkConfig) -> (f64, f64) {
    let d_2d = (ue[0] - bs[0]).hypot(ue[1] - bs[1]);
    let dh = cfg.bs_height_m - cfg.ue_height_m;
    (d_2d, (d_2d * d_2d + dh * dh).sqrt())
}

/// Direction from a mast toward a user, in the shared panel frame
/// (boresight +x, array in the y-z plane).
pub fn link_direction(bs: [f64; 2], ue: [f64; 2], cfg: &NetworkConfig) -> Direction {
    let dx = ue[0] - bs[0];
    let dy = ue[1] - bs[1];
    let dz = cfg.ue_height_m - cfg.bs_height_m;
    let r = (dx * dx + dy * dy + dz * dz).sqrt();
    let zenith = (dz / r).clamp(-1.0, 1.0).acos();
    let azimuth = dy.atan2(dx);
    Direction { azimuth, zenith }
}

/// SINR of the tagged user for one fully specified drop, dB.
///
/// Every site carries `geom` and aims a conjugate beam at its own user.
/// Signal, interference, and noise combine in the linear power domain.
pub fn sinr_db_for_drop(
    geom: &ArrayGeometry,
    cfg: &NetworkConfig,
    scenario: &Scenario,
    links: &[LinkState],
) -> Result<f64> {
    if scenario.bs.len() != scenario.ue.len() || scenario.bs.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} sites vs {} users",
            scenario.bs.len(),
            scenario.ue.len()
        )));
    }
    if links.len() != scenario.bs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} link states for {} sites",
            links.len(),
            scenario.bs.len()
        )));
    }

    let tagged = scenario.ue[0];
    let mut signal_dbm = 0.0;
    let mut interference_mw = 0.0;
    for k in 0..scenario.bs.len() {
        let site = scenario.bs[k];
        let own_dir = link_direction(site, scenario.ue[k], cfg);
        let weights = conjugate_weights(geom, &own_dir)?;
        let toward_tagged = if k == 0 { own_dir } else { link_direction(site, tagged, cfg) };
        let gain_db = array_gain_db(geom, &weights, &toward_tagged)?;
        let (_, d_3d) = link_distances(site, tagged, cfg);
        let pl_db = path_loss_db(cfg, d_3d, links[k].los)? + links[k].shadow_db;
        let rx_dbm = cfg.tx_power_dbm - pl_db + gain_db;
        if k == 0 {
            signal_dbm = rx_dbm;
        } else {
            interference_mw += 10f64.powf(rx_dbm / 10.0);
        }
    }

    let noise_mw = 10f64.powf(noise_power_dbm(cfg) / 10.0);
    let signal_mw = 10f64.powf(signal_dbm / 10.0);
    Ok(10.0 * (signal_mw / (noise_mw + interference_mw)).log10())
}

fn run_iterations<F>(n_iter: usize, seed: u64, per_iteration: F) -> Result<SinrStats>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if n_iter == 0 {
        return Err(Error::InvalidArgument("n_iter must be >= 1".into()));
    }
    // Samples land in an iteration-indexed buffer and reduce in index
    // order, so worker count never changes a bit of the result.
    let samples: Vec<f64> = (0..n_iter)
        .into_par_iter()
        .map(|i| per_iteration(substream(seed, i as u64)))
        .collect::<Result<Vec<f64>>>()?;
    SinrStats::from_samples(samples)
}

/// Simulates a design point: every iteration draws a fresh activation mask
/// from the point's profile, so the statistics describe the antenna family
/// rather than a single mask.
pub fn simulate(
    input: &InputConfig,
    cfg: &NetworkConfig,
    lattice_dims: (usize, usize),
    n_active: usize,
    n_iter: usize,
    seed: u64,
) -> Result<SinrStats> {
    input.validate()?;
    cfg.validate()?;
    let lattice = LatticeSpec::new(lattice_dims.0, lattice_dims.1, input.d_y, input.d_z)?;
    let profile = ProbabilityProfile::new(input.alpha_y, input.alpha_z)?;
    validate_mask_request(&lattice, n_active)?;

    run_iterations(n_iter, seed, |iter_seed| {
        let mask = generate_mask(&lattice, &profile, n_active, substream(iter_seed, STREAM_MASK))?;
        let geom = mask_to_geometry(&lattice, &mask)?;
        let scenario = drop_scenario(cfg, substream(iter_seed, STREAM_DROP))?;
        let links = draw_link_states(cfg, &scenario, substream(iter_seed, STREAM_CHANNEL));
        sinr_db_for_drop(&geom, cfg, &scenario, &links)
    })
}

/// Simulates a fixed geometry (reference antennas). Consumes the same drop
/// and channel substreams as [`simulate`], so runs with equal seeds see
/// identical deployments.
pub fn simulate_geometry(
    geom: &ArrayGeometry,
    cfg: &NetworkConfig,
    n_iter: usize,
    seed: u64,
) -> Result<SinrStats> {
    if geom.is_empty() {
        return Err(Error::EmptyInput("simulate_geometry needs elements".into()));
    }
    cfg.validate()?;
    run_iterations(n_iter, seed, |iter_seed| {
        let scenario = drop_scenario(cfg, substream(iter_seed, STREAM_DROP))?;
        let links = draw_link_states(cfg, &scenario, substream(iter_seed, STREAM_CHANNEL));
        sinr_db_for_drop(geom, cfg, &scenario, &links)
    })
}
