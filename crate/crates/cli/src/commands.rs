//! Command implementations. Each command validates its inputs (usage
//! errors, exit 2), runs the pipeline stage (runtime errors, exit 3), and
//! writes its outputs plus a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use thinarray_core::array_gen::{activation_probability_map, upa_geometry, LatticeSpec, ProbabilityProfile, validate_mask_request, write_activation_map_csv};
use thinarray_core::emulator::{
    cross_validate, generate_dataset, EmulatorModel, ForestParams, ModelSpec,
};
use thinarray_core::net_sim::{InputConfig, NetworkConfig};
use thinarray_core::optimizer::{compare_families, optimize, slice_scan, Bounds, ModelPair};

use crate::io;
use crate::{CliError, CliResult, Command, LatticeArgs, ModelHyperArgs, ModelKindArg};

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::GenDataset {
            config,
            n_configs,
            n_iter,
            seed,
            out,
            lattice,
        } => gen_dataset(config.as_deref(), n_configs, n_iter, seed, &out, lattice),
        Command::Train {
            dataset,
            model,
            out,
            seed,
            hyper,
        } => train(&dataset, model, &out, seed, hyper),
        Command::LearningCurve {
            dataset,
            model,
            sizes,
            folds,
            seed,
            out,
            hyper,
        } => learning_curve(&dataset, model, &sizes, folds, seed, &out, hyper),
        Command::Optimize {
            model_mean,
            model_p5,
            constraint_db,
            budget,
            seed,
            out,
        } => run_optimize(&model_mean, &model_p5, constraint_db, budget, seed, &out),
        Command::ActivationMap {
            d_y,
            d_z,
            alpha_y,
            alpha_z,
            n_samples,
            seed,
            out,
            lattice,
        } => activation_map(d_y, d_z, alpha_y, alpha_z, n_samples, seed, &out, lattice),
        Command::Slices {
            model_mean,
            model_p5,
            center,
            axis,
            n_points,
            out,
        } => slices(&model_mean, &model_p5, &center, axis.index(), n_points, &out),
        Command::Compare {
            optimal,
            n_optimal,
            n_random,
            config,
            n_iter,
            seed,
            out,
            lattice,
        } => compare(
            &optimal,
            n_optimal,
            n_random,
            config.as_deref(),
            n_iter,
            seed,
            &out,
            lattice,
        ),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<NetworkConfig> {
    match path {
        None => Ok(NetworkConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))
                .map_err(CliError::usage)?;
            NetworkConfig::from_json_str(&text)
                .with_context(|| format!("invalid config {}", p.display()))
                .map_err(CliError::usage)
        }
    }
}

fn load_model(path: &Path) -> CliResult<EmulatorModel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read model {}", path.display()))
        .map_err(CliError::usage)?;
    EmulatorModel::from_json(&text)
        .with_context(|| format!("invalid model {}", path.display()))
        .map_err(CliError::usage)
}

/// Creating the output up front surfaces unwritable paths as usage errors
/// before any computation runs.
fn create_out(path: &Path) -> CliResult<fs::File> {
    fs::File::create(path)
        .with_context(|| format!("cannot create output {}", path.display()))
        .map_err(CliError::usage)
}

fn write_out(path: &Path, mut file: fs::File, content: &str) -> CliResult<()> {
    use std::io::Write;
    file.write_all(content.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::runtime)
}

fn argv() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn finish(
    command: &str,
    master_seed: Option<u64>,
    config: Option<&Path>,
    outputs: &[PathBuf],
) -> CliResult<()> {
    let digest = io::config_digest(config).map_err(CliError::usage)?;
    let info = io::ManifestInfo {
        command,
        argv: argv(),
        master_seed,
        config_digest: digest,
    };
    io::write_manifest(&info, outputs).map_err(CliError::runtime)
}

fn model_spec(kind: ModelKindArg, hyper: &ModelHyperArgs) -> CliResult<ModelSpec> {
    let spec = match kind {
        ModelKindArg::Ridge => {
            if !(hyper.lambda >= 0.0) {
                return Err(CliError::usage(anyhow!(
                    "--lambda must be >= 0, got {}",
                    hyper.lambda
                )));
            }
            ModelSpec::Ridge { lambda: hyper.lambda }
        }
        ModelKindArg::Rf => ModelSpec::RandomForest(ForestParams {
            n_trees: hyper.n_trees,
            min_leaf: hyper.min_leaf,
            bootstrap: hyper.bootstrap,
        }),
        ModelKindArg::Knn => ModelSpec::Knn { k: hyper.k },
    };
    Ok(spec)
}

fn validate_lattice(lattice: &LatticeArgs, d_y: f64, d_z: f64) -> CliResult<LatticeSpec> {
    let spec = LatticeSpec::new(lattice.lattice_rows, lattice.lattice_cols, d_y, d_z)
        .map_err(CliError::usage)?;
    validate_mask_request(&spec, lattice.n_active).map_err(CliError::usage)?;
    Ok(spec)
}

fn parse_input(values: &[f64], what: &str) -> CliResult<InputConfig> {
    if values.len() != 4 {
        return Err(CliError::usage(anyhow!(
            "{what} needs 4 comma-separated values (d_y,d_z,alpha_y,alpha_z), got {}",
            values.len()
        )));
    }
    InputConfig::new(values[0], values[1], values[2], values[3])
        .with_context(|| format!("invalid {what}"))
        .map_err(CliError::usage)
}

fn gen_dataset(
    config: Option<&Path>,
    n_configs: usize,
    n_iter: usize,
    seed: u64,
    out: &Path,
    lattice: LatticeArgs,
) -> CliResult<()> {
    let cfg = load_config(config)?;
    // Spacing bounds are the tightest the request must fit.
    validate_lattice(&lattice, InputConfig::D_RANGE.0, InputConfig::D_RANGE.0)?;
    if n_configs == 0 || n_iter == 0 {
        return Err(CliError::usage(anyhow!("--n-configs and --n-iter must be >= 1")));
    }
    let file = create_out(out)?;

    let dataset = generate_dataset(
        &cfg,
        (lattice.lattice_rows, lattice.lattice_cols),
        lattice.n_active,
        n_configs,
        n_iter,
        seed,
    )
    .map_err(CliError::runtime)?;

    write_out(out, file, &io::render_dataset_csv(&dataset))?;
    finish("gen-dataset", Some(seed), config, &[out.to_path_buf()])?;
    println!(
        "wrote {} rows ({} iterations each) to {}",
        dataset.len(),
        n_iter,
        out.display()
    );
    Ok(())
}

fn train(
    dataset_path: &Path,
    kind: ModelKindArg,
    out: &Path,
    seed: u64,
    hyper: ModelHyperArgs,
) -> CliResult<()> {
    let dataset = io::read_dataset(dataset_path).map_err(CliError::usage)?;
    let spec = model_spec(kind, &hyper)?;
    let file = create_out(out)?;

    let model = EmulatorModel::train(&dataset.rows, &spec, seed).map_err(CliError::runtime)?;
    let json = model.to_json().map_err(CliError::runtime)?;
    write_out(out, file, &json)?;
    finish("train", Some(seed), None, &[out.to_path_buf()])?;
    println!(
        "trained {:?} on {} rows -> {}",
        model.kind,
        dataset.len(),
        out.display()
    );
    Ok(())
}

fn learning_curve(
    dataset_path: &Path,
    kind: ModelKindArg,
    sizes: &[usize],
    folds: usize,
    seed: u64,
    out: &Path,
    hyper: ModelHyperArgs,
) -> CliResult<()> {
    let dataset = io::read_dataset(dataset_path).map_err(CliError::usage)?;
    let spec = model_spec(kind, &hyper)?;
    let max_pool = dataset.len().saturating_sub(dataset.len().div_ceil(folds));
    if sizes.iter().any(|&s| s > max_pool) {
        return Err(CliError::usage(anyhow!(
            "--sizes entries exceed the {max_pool} rows available with {folds} folds over {} rows",
            dataset.len()
        )));
    }
    let file = create_out(out)?;

    let report = cross_validate(&dataset, &spec, folds, sizes, seed).map_err(CliError::runtime)?;
    write_out(out, file, &io::render_cv_report_csv(&report))?;
    finish("learning-curve", Some(seed), None, &[out.to_path_buf()])?;
    println!(
        "cross-validated {} sizes x {} folds -> {}",
        sizes.len(),
        folds,
        out.display()
    );
    Ok(())
}

fn run_optimize(
    model_mean: &Path,
    model_p5: &Path,
    constraint_db: f64,
    budget: usize,
    seed: u64,
    out: &Path,
) -> CliResult<()> {
    let mean = load_model(model_mean)?;
    let p5 = load_model(model_p5)?;
    if budget == 0 {
        return Err(CliError::usage(anyhow!("--budget must be >= 1")));
    }
    let file = create_out(out)?;

    let pair = ModelPair {
        mean: &mean,
        p5: &p5,
    };
    let result =
        optimize(&pair, &Bounds::default(), constraint_db, budget, seed).map_err(CliError::runtime)?;

    let doc = serde_json::json!({
        "version": 1,
        "constraint_db": constraint_db,
        "budget": budget,
        "seed": seed,
        "result": result,
    });
    let json = serde_json::to_string_pretty(&doc).map_err(CliError::runtime)?;
    write_out(out, file, &json)?;
    finish("optimize", Some(seed), None, &[out.to_path_buf()])?;
    let b = &result.best_input;
    println!(
        "best input d_y={} d_z={} alpha_y={} alpha_z={} predicted mean {:.3} dB, p5 {:.3} dB, feasible={} ({} evaluations)",
        b.d_y, b.d_z, b.alpha_y, b.alpha_z,
        result.predicted_mean_db, result.predicted_p5_db, result.feasible,
        result.evaluations_used
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn activation_map(
    d_y: f64,
    d_z: f64,
    alpha_y: f64,
    alpha_z: f64,
    n_samples: usize,
    seed: u64,
    out: &Path,
    lattice: LatticeArgs,
) -> CliResult<()> {
    let spec = validate_lattice(&lattice, d_y, d_z)?;
    let profile = ProbabilityProfile::new(alpha_y, alpha_z).map_err(CliError::usage)?;
    if n_samples == 0 {
        return Err(CliError::usage(anyhow!("--n-samples must be >= 1")));
    }
    let file = create_out(out)?;

    let map = activation_probability_map(&spec, &profile, lattice.n_active, n_samples, seed)
        .map_err(CliError::runtime)?;
    let mut buf = Vec::new();
    write_activation_map_csv(&map, &mut buf).map_err(CliError::runtime)?;
    write_out(out, file, &String::from_utf8_lossy(&buf))?;
    finish("activation-map", Some(seed), None, &[out.to_path_buf()])?;
    println!(
        "estimated {}x{} activation map from {} masks -> {}",
        map.n_rows,
        map.n_cols,
        n_samples,
        out.display()
    );
    Ok(())
}

fn slices(
    model_mean: &Path,
    model_p5: &Path,
    center: &[f64],
    axis: usize,
    n_points: usize,
    out: &Path,
) -> CliResult<()> {
    let mean = load_model(model_mean)?;
    let p5 = load_model(model_p5)?;
    let center = parse_input(center, "--center")?;
    if n_points == 0 {
        return Err(CliError::usage(anyhow!("--n-points must be >= 1")));
    }
    let file = create_out(out)?;

    let pair = ModelPair {
        mean: &mean,
        p5: &p5,
    };
    let points = slice_scan(&pair, &Bounds::default(), &center, axis, n_points)
        .map_err(CliError::runtime)?;
    write_out(out, file, &io::render_slice_csv(&points))?;
    finish("slices", None, None, &[out.to_path_buf()])?;
    println!("scanned {} points along axis {axis} -> {}", points.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn compare(
    optimal: &[f64],
    n_optimal: usize,
    n_random: usize,
    config: Option<&Path>,
    n_iter: usize,
    seed: u64,
    out: &Path,
    lattice: LatticeArgs,
) -> CliResult<()> {
    let cfg = load_config(config)?;
    let optimal = parse_input(optimal, "--optimal")?;
    validate_lattice(&lattice, InputConfig::D_RANGE.0, InputConfig::D_RANGE.0)?;
    if n_optimal == 0 || n_iter == 0 {
        return Err(CliError::usage(anyhow!("--n-optimal and --n-iter must be >= 1")));
    }
    let file = create_out(out)?;

    // The two fixed reference antennas: a half-wavelength 8x8 panel and the
    // 64-element vertical line.
    let references = vec![
        (
            "upa_8x8".to_string(),
            upa_geometry(8, 8, 0.5, 0.5).map_err(CliError::runtime)?,
        ),
        (
            "vertical_64".to_string(),
            upa_geometry(64, 1, 0.5, 0.796).map_err(CliError::runtime)?,
        ),
    ];

    let rows = compare_families(
        &optimal,
        n_optimal,
        n_random,
        &references,
        &cfg,
        (lattice.lattice_rows, lattice.lattice_cols),
        lattice.n_active,
        n_iter,
        seed,
    )
    .map_err(CliError::runtime)?;

    write_out(out, file, &io::render_family_csv(&rows))?;
    finish("compare", Some(seed), config, &[out.to_path_buf()])?;
    println!("compared {} rows -> {}", rows.len(), out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_spec_mapping() {
        let hyper = ModelHyperArgs {
            lambda: 0.5,
            n_trees: 10,
            min_leaf: 3,
            bootstrap: false,
            k: 2,
        };
        assert!(matches!(
            model_spec(ModelKindArg::Ridge, &hyper).unwrap(),
            ModelSpec::Ridge { lambda } if lambda == 0.5
        ));
        assert!(matches!(
            model_spec(ModelKindArg::Rf, &hyper).unwrap(),
            ModelSpec::RandomForest(p) if p.n_trees == 10 && !p.bootstrap
        ));
        assert!(matches!(
            model_spec(ModelKindArg::Knn, &hyper).unwrap(),
            ModelSpec::Knn { k: 2 }
        ));
    }
}
