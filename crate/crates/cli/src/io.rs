//! File formats: the dataset CSV, report CSVs, and run manifests.
//!
//! Every floating-point field renders through Rust's shortest round-trip
//! formatting, so `load(save(x))` reproduces each value bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use thinarray_core::emulator::{CvReport, Dataset, DatasetRow};
use thinarray_core::net_sim::{InputConfig, SinrStats};
use thinarray_core::optimizer::{FamilyRow, SlicePoint};

pub const DATASET_HEADER: &str = "seed,n_iter,d_y,d_z,alpha_y,alpha_z,sinr_mean_db,sinr_p5_db";

/// FNV-1a 64-bit digest, used for provenance fields in manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn render_dataset_csv(dataset: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for row in &dataset.rows {
        let i = &row.input;
        let o = &row.output;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.seed, o.n_samples, i.d_y, i.d_z, i.alpha_y, i.alpha_z, o.mean_db, o.p5_db
        ));
    }
    out
}

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines();
    let header = lines.next().context("dataset file is empty")?;
    if header != DATASET_HEADER {
        bail!("unexpected dataset header {header:?}, expected {DATASET_HEADER:?}");
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!("dataset line {}: expected 8 fields, got {}", lineno + 2, fields.len());
        }
        let ctx = |name: &str| format!("dataset line {}: bad {name}", lineno + 2);
        let seed: u64 = fields[0].parse().with_context(|| ctx("seed"))?;
        let n_iter: usize = fields[1].parse().with_context(|| ctx("n_iter"))?;
        let nums: Vec<f64> = fields[2..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| ctx("numeric field"))?;
        let input = InputConfig::new(nums[0], nums[1], nums[2], nums[3])
            .with_context(|| ctx("input bounds"))?;
        rows.push(DatasetRow {
            input,
            output: SinrStats {
                mean_db: nums[4],
                p5_db: nums[5],
                n_samples: n_iter,
                samples: None,
            },
            seed,
        });
    }
    Ok(Dataset::new(rows)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read dataset {}", path.display()))?;
    parse_dataset_csv(&text)
}

pub fn render_cv_report_csv(report: &CvReport) -> String {
    let mut out = String::from("size,output,nrmse_mean,nrmse_std\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.training_size, e.output, e.nrmse_mean, e.nrmse_std
        ));
    }
    out
}

pub fn render_slice_csv(points: &[SlicePoint]) -> String {
    let mut out = String::from("value,mean_db,p5_db\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.value, p.mean_db, p.p5_db));
    }
    out
}

pub fn render_family_csv(rows: &[FamilyRow]) -> String {
    let mut out = String::from("label,mean_db,p5_db\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.label, r.mean_db, r.p5_db));
    }
    out
}

/// Reproducibility record written next to every output file.
pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub argv: Vec<String>,
    pub master_seed: Option<u64>,
    /// FNV-1a digest of the config file, or "default" when none was given.
    pub config_digest: String,
}

pub fn config_digest(config: Option<&Path>) -> Result<String> {
    match config {
        None => Ok("default".to_string()),
        Some(path) => {
            let bytes = fs::read(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            Ok(format!("{:016x}", fnv1a64(&bytes)))
        }
    }
}

/// Writes `<out>.manifest.json` recording the run and digesting each output.
pub fn write_manifest(info: &ManifestInfo, outputs: &[PathBuf]) -> Result<()> {
    let primary = outputs.first().context("manifest needs at least one output")?;
    let created_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);

    let outs: Vec<serde_json::Value> = outputs
        .iter()
        .map(|p| {
            let bytes = fs::read(p)?;
            Ok(serde_json::json!({
                "path": p.display().to_string(),
                "fnv1a64": format!("{:016x}", fnv1a64(&bytes)),
            }))
        })
        .collect::<Result<_>>()?;

    let doc = serde_json::json!({
        "tool": "thinarray",
        "version": env!("CARGO_PKG_VERSION"),
        "command": info.command,
        "argv": info.argv,
        "master_seed": info.master_seed,
        "config_digest_fnv1a64": info.config_digest,
        "created_unix_ms": created_unix_ms,
        "outputs": outs,
    });
    let path = manifest_path(primary);
    let mut file = fs::File::create(&path)
        .with_context(|| format!("cannot write manifest {}", path.display()))?;
    writeln!(file, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
