use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use egpc_core::{
    build_dataset, crv_table, error_report, estimate, export_eigenvalue_spectrum,
    export_geometry, export_parameters_csv, fit_parameter_map, fit_pca, min_components,
    read_point_cloud_csv, split, vectorize, verify_equivalence, write_error_reports_csv,
    write_error_reports_text, ClassErrorReport, Dataset, Error, GeometryClass, MassWeightConfig,
    ParameterMap, PcaModel, RPreset, Result, DEFAULT_TRAIN_FRACTION,
};

/// Reproducible pipeline around PCA shape models of parametric geometry
/// classes: dataset generation, fitting, parameter estimation, equivalence
/// verification, and report artifacts.
#[derive(Parser)]
#[command(name = "egpc", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

const DEFAULT_THRESHOLDS: [f64; 3] = [0.9, 0.95, 0.99];

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded dataset of one geometry class.
    Gen(GenArgs),
    /// Fit the PCA model and per-preset parameter maps on the train split.
    Fit(FitArgs),
    /// Estimate the design parameters of a point-cloud CSV.
    Estimate(EstimateArgs),
    /// Check numerically that weighted joint estimation equals the
    /// standard route.
    Verify(VerifyArgs),
    /// Emit the CRV table, spectra, error summaries, and geometry exports.
    Report(ReportArgs),
    /// Run gen, fit, and report for all six classes with one seed.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Geometry class name.
    #[arg(long)]
    class: String,
    /// Number of variations to generate.
    #[arg(long, default_value_t = egpc_core::DEFAULT_VARIATIONS)]
    m: usize,
    /// Generation seed.
    #[arg(long)]
    seed: u64,
    /// Points per cloud.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Output dataset file (defaults into EGPC_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also export the sample parameters as CSV.
    #[arg(long)]
    params_csv: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset file produced by `gen`.
    #[arg(long)]
    dataset: PathBuf,
    /// Seed of the train/test split.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Train fraction of the split.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    /// CRV thresholds reported after the fit.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS)]
    thresholds: Vec<f64>,
    /// Directory for the model and map files (defaults to EGPC_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Model file produced by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Parameter-map file produced by `fit`.
    #[arg(long)]
    map: PathBuf,
    /// Point cloud as an `x,y,z` CSV.
    #[arg(long)]
    cloud: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Dataset file to verify on.
    #[arg(long)]
    dataset: PathBuf,
    /// Seed for the random mass/weight configurations and probes.
    #[arg(long)]
    seed: u64,
    /// Deviation tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Number of random mass/weight configurations.
    #[arg(long, default_value_t = 20)]
    configs: usize,
    /// Probe vectors per configuration.
    #[arg(long, default_value_t = 100)]
    probes: usize,
    /// Use the all-ones mass/weight configuration instead of random ones.
    #[arg(long)]
    identity: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding dataset/model/map files from `gen` and `fit`.
    #[arg(long)]
    data_dir: PathBuf,
    /// Split seed used at fit time.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Train fraction used at fit time.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    /// CRV thresholds of the table.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS)]
    thresholds: Vec<f64>,
    /// Output directory (defaults to EGPC_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Seed for generation and splitting.
    #[arg(long)]
    seed: u64,
    /// Variations per class.
    #[arg(long, default_value_t = egpc_core::DEFAULT_VARIATIONS)]
    m: usize,
    /// Points per cloud.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Train fraction of the split.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    /// CRV thresholds of the table.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS)]
    thresholds: Vec<f64>,
    /// Output directory (defaults to EGPC_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Maps library errors to the documented exit codes: 2 for usage errors,
/// 3 for data errors.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::UnknownClass(..) => 2,
        _ => 3,
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => cmd_gen(&args).map(|()| ExitCode::SUCCESS),
        Command::Fit(args) => cmd_fit(&args).map(|()| ExitCode::SUCCESS),
        Command::Estimate(args) => cmd_estimate(&args).map(|()| ExitCode::SUCCESS),
        Command::Verify(args) => cmd_verify(&args),
        Command::Report(args) => cmd_report(&args).map(|()| ExitCode::SUCCESS),
        Command::Pipeline(args) => cmd_pipeline(&args).map(|()| ExitCode::SUCCESS),
    }
}

fn resolve_out(path: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    match path {
        Some(p) => Ok(p),
        None => std::env::var_os("EGPC_OUT_DIR").map(PathBuf::from).ok_or_else(|| {
            Error::Domain(format!("{flag} not given and EGPC_OUT_DIR is unset"))
        }),
    }
}

fn dataset_path(dir: &Path, class: GeometryClass) -> PathBuf {
    dir.join(format!("{}.dataset.egpc", class.name()))
}

fn model_path(dir: &Path, class: &str) -> PathBuf {
    dir.join(format!("{class}.model.egpc"))
}

fn map_path(dir: &Path, class: &str, preset: &str) -> PathBuf {
    dir.join(format!("{class}.map.{preset}.egpc"))
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let class = GeometryClass::from_name(&args.class)?;
    let spec = class.spec_with_points(args.n);
    let ds = build_dataset(&spec, args.m, args.seed)?;
    let out = match &args.out {
        Some(p) => p.clone(),
        None => dataset_path(&resolve_out(None, "--out")?, class),
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    ds.save(&out)?;
    if let Some(csv) = &args.params_csv {
        export_parameters_csv(&ds, csv)?;
    }
    println!(
        "generated class {} (k = {}, n = {}): m = {} samples, seed {} -> {}",
        spec.name(),
        spec.k(),
        spec.n_points(),
        ds.len(),
        ds.seed(),
        out.display()
    );
    Ok(())
}

struct FittedClass {
    class: GeometryClass,
    model: PcaModel,
    maps: Vec<(RPreset, ParameterMap)>,
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Train/test indices for a dataset; datasets too small to split train on
/// all samples with an empty test set.
fn split_or_all(ds: &Dataset, train_fraction: f64, split_seed: u64) -> (Vec<usize>, Vec<usize>) {
    match split(ds, train_fraction, split_seed) {
        Ok(sp) if sp.train().len() >= 2 => (sp.train().to_vec(), sp.test().to_vec()),
        _ => ((0..ds.len()).collect(), Vec::new()),
    }
}

/// Fits the model on the train split and one parameter map per preset.
/// Presets whose component count is unavailable are reported and skipped;
/// presets reaching past the retained rank come with a warning, since their
/// sub-cutoff components are excluded from the map.
fn fit_class(
    ds: &Dataset,
    split_seed: u64,
    train_fraction: f64,
) -> Result<(FittedClass, Vec<String>)> {
    let mut notes = Vec::new();
    let (train, test) = split_or_all(ds, train_fraction, split_seed);
    if test.is_empty() {
        notes.push(format!(
            "dataset of {} samples is too small for a {train_fraction} split; \
             fitting on all samples with no test set",
            ds.len()
        ));
    }
    let x = ds.design_matrix_for(&train)?;
    let p = ds.parameter_matrix_for(&train)?;
    let model = fit_pca(&x)?;
    let k = ds.spec().k();

    let mut maps = Vec::new();
    for preset in RPreset::standard_set(&model, k)? {
        match preset
            .resolve(&model, k)
            .and_then(|r| fit_parameter_map(&model, &x, &p, r))
        {
            Ok(map) => {
                if map.r() > model.rank() {
                    notes.push(format!(
                        "preset r = {}: requested {} components but only {} are above the \
                         rank cutoff; the rest are excluded from H",
                        preset.label(),
                        map.r(),
                        model.rank()
                    ));
                }
                maps.push((preset, map));
            }
            Err(err) => notes.push(format!("preset r = {} skipped: {err}", preset.label())),
        }
    }
    Ok((
        FittedClass {
            class: ds.class(),
            model,
            maps,
            train,
            test,
        },
        notes,
    ))
}

fn crv_summary(model: &PcaModel, thresholds: &[f64]) -> Result<String> {
    let parts = thresholds
        .iter()
        .map(|&t| Ok(format!("t({t}) = {}", min_components(model, t)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.join(", "))
}

fn save_fitted(dir: &Path, fitted: &FittedClass) -> Result<()> {
    let class = fitted.class.name();
    fitted.model.save(model_path(dir, class))?;
    for (preset, map) in &fitted.maps {
        map.save(map_path(dir, class, &preset.label()))?;
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let ds = Dataset::load(&args.dataset)?;
    let out_dir = resolve_out(args.out_dir.clone(), "--out-dir")?;
    std::fs::create_dir_all(&out_dir)?;
    let (fitted, notes) = fit_class(&ds, args.split_seed, args.train_fraction)?;
    save_fitted(&out_dir, &fitted)?;
    println!(
        "fitted class {}: train {} / test {} samples, retained rank {}",
        fitted.class.name(),
        fitted.train.len(),
        fitted.test.len(),
        fitted.model.rank()
    );
    println!("CRV components: {}", crv_summary(&fitted.model, &args.thresholds)?);
    for note in notes {
        println!("warning: {note}");
    }
    println!(
        "saved model and {} map(s) to {}",
        fitted.maps.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let model = PcaModel::load(&args.model)?;
    let map = ParameterMap::load(&args.map)?;
    let cloud = read_point_cloud_csv(&args.cloud)?;
    let params = estimate(&map, &model, &vectorize(&cloud))?;
    for (i, v) in params.values().iter().enumerate() {
        println!("p[{i}] = {v}");
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    if args.configs == 0 {
        return Err(Error::Domain("need at least one configuration".into()));
    }
    let ds = Dataset::load(&args.dataset)?;
    let x = ds.design_matrix()?;
    let p = ds.parameter_matrix()?;
    let n_points = ds.spec().n_points();

    const STRIDE: u64 = 0x9e37_79b9_7f4a_7c15;
    let configs = if args.identity { 1 } else { args.configs };
    let mut worst_op = 0.0f64;
    let mut worst_probe = 0.0f64;
    let mut all_passed = true;
    for idx in 0..configs as u64 {
        let config = if args.identity {
            MassWeightConfig::identity(n_points)
        } else {
            MassWeightConfig::random(n_points, args.seed.wrapping_add((idx + 1).wrapping_mul(STRIDE)))
        };
        let probe_seed = args.seed.wrapping_add((idx + 1).wrapping_mul(STRIDE ^ 0x5555_5555_5555_5555));
        let report = verify_equivalence(&x, &p, &config, args.probes, args.tol, probe_seed)?;
        println!("config {}/{}: {report}", idx + 1, configs);
        worst_op = worst_op.max(report.operator_deviation);
        worst_probe = worst_probe.max(report.max_probe_deviation);
        all_passed &= report.passed;
    }
    println!(
        "verification {}: worst operator deviation {:.3e}, worst probe deviation {:.3e} (tol {:.1e})",
        if all_passed { "passed" } else { "FAILED" },
        worst_op,
        worst_probe,
        args.tol
    );
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn export_class_reports(
    out_dir: &Path,
    fitted: &FittedClass,
    ds: &Dataset,
) -> Result<Option<ClassErrorReport>> {
    let class = fitted.class.name();
    let model = &fitted.model;
    export_eigenvalue_spectrum(model, out_dir.join(format!("{class}.spectrum.csv")))?;
    export_geometry(model.mean(), out_dir.join(format!("{class}.mean.csv")))?;

    // first test sample, centered by the training mean
    if let Some(&first) = fitted.test.first() {
        let x = vectorize(&ds.samples()[first].cloud);
        export_geometry(&(x - model.mean()), out_dir.join(format!("{class}.centered.csv")))?;
    }
    for i in 0..model.rank().min(3) {
        let v = model.eigenvectors().column(i).clone_owned();
        export_geometry(&v, out_dir.join(format!("{class}.eigengeometry.{}.csv", i + 1)))?;
    }

    if fitted.test.is_empty() || fitted.maps.is_empty() {
        return Ok(None);
    }
    let test_samples = ds.samples_for(&fitted.test)?;
    error_report(fitted.class, model, &fitted.maps, &test_samples).map(Some)
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let out_dir = resolve_out(args.out_dir.clone(), "--out-dir")?;
    std::fs::create_dir_all(&out_dir)?;

    let mut fitted_classes = Vec::new();
    for class in GeometryClass::ALL {
        let ds_path = dataset_path(&args.data_dir, class);
        let mdl_path = model_path(&args.data_dir, class.name());
        if !ds_path.exists() || !mdl_path.exists() {
            continue;
        }
        let ds = Dataset::load(&ds_path)?;
        let model = PcaModel::load(&mdl_path)?;
        let (train, test) = split_or_all(&ds, args.train_fraction, args.split_seed);
        let mut maps = Vec::new();
        for preset in RPreset::standard_set(&model, ds.spec().k())? {
            let path = map_path(&args.data_dir, class.name(), &preset.label());
            if path.exists() {
                maps.push((preset, ParameterMap::load(&path)?));
            }
        }
        fitted_classes.push((
            FittedClass {
                class,
                model,
                maps,
                train,
                test,
            },
            ds,
        ));
    }
    if fitted_classes.is_empty() {
        return Err(Error::Domain(format!(
            "no fitted classes found under {}",
            args.data_dir.display()
        )));
    }

    let mut reports = Vec::new();
    for (fitted, ds) in &fitted_classes {
        if let Some(report) = export_class_reports(&out_dir, fitted, ds)? {
            reports.push(report);
        }
    }

    let entries: Vec<(GeometryClass, &PcaModel)> = fitted_classes
        .iter()
        .map(|(f, _)| (f.class, &f.model))
        .collect();
    let table = crv_table(&entries, &args.thresholds)?;
    std::fs::write(out_dir.join("crv_table.csv"), table.to_csv_string())?;
    write_error_reports_csv(&reports, out_dir.join("errors.csv"))?;
    write_error_reports_text(&reports, out_dir.join("errors.txt"))?;

    print!("{table}");
    println!("report artifacts written to {}", out_dir.display());
    Ok(())
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let out_dir = resolve_out(args.out_dir.clone(), "--out-dir")?;
    std::fs::create_dir_all(&out_dir)?;

    for class in GeometryClass::ALL {
        let gen = GenArgs {
            class: class.name().to_string(),
            m: args.m,
            seed: args.seed,
            n: args.n,
            out: Some(dataset_path(&out_dir, class)),
            params_csv: Some(out_dir.join(format!("{}.parameters.csv", class.name()))),
        };
        cmd_gen(&gen)?;
        let fit = FitArgs {
            dataset: dataset_path(&out_dir, class),
            split_seed: args.seed,
            train_fraction: args.train_fraction,
            thresholds: args.thresholds.clone(),
            out_dir: Some(out_dir.clone()),
        };
        cmd_fit(&fit)?;
    }
    let report = ReportArgs {
        data_dir: out_dir.clone(),
        split_seed: args.seed,
        train_fraction: args.train_fraction,
        thresholds: args.thresholds.clone(),
        out_dir: Some(out_dir),
    };
    cmd_report(&report)
}
