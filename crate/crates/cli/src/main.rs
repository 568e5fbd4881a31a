use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maskcov::bounds::BoundKind;
use maskcov::harness::{
    decoupling_summary, emit_results, fit_scaling, read_results_csv, write_jsonl, Axis, HarnessPolicy, MaskSource,
    OutputFormat, RunMetadata, StreamOrder,
};
use maskcov::io::read_matrix_csv;
use maskcov::masks::{banded_mask, custom_mask, minor_mask, MaskStats};
use maskcov::verify::{
    circle_net, concentration_check, decoupling_check, net_norm_bound_check, reg_norm_bound_check,
    sigma_x_lipschitz_check, sigma_x_mean_check, LipschitzFn,
};
use maskcov::{
    norm_one_two, spectral_norm, DenseMatrix, Error, ExperimentConfig, GaussianModel, LemmaReport, SeedSpec,
    SymmetricMatrix, TrialResult, Vector,
};

#[derive(Parser)]
#[command(name = "maskcov", version, about = "Masked covariance estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo error sweep from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// `.json` writes a JSON array, anything else CSV.
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Also record the decoupled copy and check the decoupling inequality.
        #[arg(long)]
        decoupled: bool,
    },
    /// Fit a log-log slope to a results CSV.
    Scaling {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        axis: Axis,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in lemma checks, one JSON line per report.
    VerifyLemmas {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print norms of a headerless CSV matrix as JSON.
    Norms {
        #[arg(long)]
        matrix: PathBuf,
    },
}

/// Failure that should surface as exit code 3.
struct AssertionFailed(String);

enum Failure {
    Core(Error),
    Assertion(AssertionFailed),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotPsd { .. } | Error::NumericalFailure { .. } => 2,
        Error::BoundViolated { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            decoupled,
        } => simulate(&config, &out, seed, decoupled),
        Command::Scaling { input, axis, out } => scaling(&input, axis, &out),
        Command::VerifyLemmas { seed, trials, out } => verify_lemmas(seed, trials, &out),
        Command::Norms { matrix } => norms(&matrix),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Assertion(AssertionFailed(msg))) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn metadata_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    out.with_file_name(format!("{stem}.meta.json"))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("plain data");
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>, decoupled: bool) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    let experiment = cfg.resolve()?;
    let results: Vec<TrialResult> = if decoupled {
        experiment.run_decoupled(StreamOrder::Normal)?
    } else {
        experiment.run_error()?
    };
    emit_results(&results, OutputFormat::from_path(out), out)?;

    let violations: Vec<&TrialResult> = results
        .iter()
        .filter(|r| r.bound(BoundKind::Refined).is_some_and(|b| r.error > b))
        .collect();
    let mask = match &experiment.mask {
        MaskSource::Fixed(m) => Some(MaskStats::from(m)),
        MaskSource::Threshold(_) => None,
    };
    let meta = RunMetadata {
        sigma_norm: experiment.model.sigma_norm(),
        config: cfg,
        mask,
        policy: HarnessPolicy::default(),
        trials: results.len(),
        refined_violations: violations.len(),
    };
    write_json(&metadata_path(out), &meta)?;

    if let Some(r) = violations.first() {
        return Err(Failure::Assertion(AssertionFailed(format!(
            "{} trial(s) exceed the refined bound, first at n={} replicate={}: {} > {}",
            violations.len(),
            r.n,
            r.replicate,
            r.error,
            r.bound(BoundKind::Refined).unwrap_or_default()
        ))));
    }
    if decoupled {
        for s in decoupling_summary(&results)? {
            if !s.passed {
                return Err(Failure::Assertion(AssertionFailed(format!(
                    "decoupling at n={}: mean error {} > mean decoupled {} + 3*{}",
                    s.n, s.mean_error, s.mean_decoupled, s.stderr
                ))));
            }
        }
    }
    eprintln!("wrote {} trials to {}", results.len(), out.display());
    Ok(())
}

fn scaling(input: &Path, axis: Axis, out: &Path) -> Result<(), Failure> {
    let results = read_results_csv(input)?;
    let report = fit_scaling(&results, axis)?;
    write_json(out, &report)?;
    eprintln!(
        "slope in {} = {:.4} +/- {:.4} over {} points",
        report.axis, report.slope, report.slope_stderr, report.points
    );
    Ok(())
}

fn random_matrix(rows: usize, cols: usize, seed: SeedSpec) -> Result<DenseMatrix, Error> {
    let mut rng = seed.rng();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

fn lemma_battery(seed: u64, trials: usize) -> Result<Vec<LemmaReport>, Error> {
    let mut reports = Vec::new();
    let mut stream = 0u64;
    let mut next = || {
        stream += 1;
        SeedSpec::new(seed, stream)
    };

    for p in [2, 4, 6, 8] {
        for _ in 0..5 {
            reports.push(reg_norm_bound_check(&random_matrix(p, p, next())?)?);
        }
    }

    let (net, delta) = circle_net(64)?;
    for _ in 0..5 {
        reports.push(net_norm_bound_check(&random_matrix(2, 2, next())?, &net, delta)?);
    }

    let one = SymmetricMatrix::identity(1);
    reports.push(decoupling_check(std::slice::from_ref(&one), &one, trials, next().state())?);
    let ar1 = GaussianModel::ar1(6, 0.5)?;
    let family: Vec<SymmetricMatrix> = (0..3)
        .map(|k| Ok(banded_mask(6, k)?.matrix().clone()))
        .collect::<Result<_, Error>>()?;
    reports.push(decoupling_check(&family, ar1.sigma(), trials, next().state())?);

    let t_grid = [0.5, 1.0, 1.5];
    for tag in ["linear", "sup-norm", "euclidean-norm"] {
        let f = LipschitzFn::from_tag(tag, 8)?;
        let sigma = GaussianModel::ar1(8, 0.3)?;
        reports.extend(concentration_check(&f, sigma.sigma(), trials, &t_grid, next().state())?);
    }

    let p = 12;
    let model = GaussianModel::identity(p);
    let masks = [banded_mask(p, 2)?, minor_mask(p, &[0, 3, 5, 7])?];
    for mask in &masks {
        let mut rng = next().rng();
        let mut x = vec![0.0; p];
        rng.fill_normal(&mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x = Vector::new(x.iter().map(|v| v / norm).collect())?;
        reports.push(sigma_x_mean_check(mask, &x, &model, 50, trials.clamp(2, 2000), next().state())?);
    }
    reports.push(sigma_x_lipschitz_check(&banded_mask(8, 1)?, 2, 20, trials, next().state())?);
    Ok(reports)
}

fn verify_lemmas(seed: u64, trials: usize, out: &Path) -> Result<(), Failure> {
    let reports = lemma_battery(seed, trials)?;
    write_jsonl(&reports, out)?;
    let failed: Vec<&LemmaReport> = reports.iter().filter(|r| !r.passed).collect();
    eprintln!("{} reports, {} failed", reports.len(), failed.len());
    if let Some(r) = failed.first() {
        return Err(Failure::Assertion(AssertionFailed(format!(
            "{}: lhs {} > rhs {} + 3*{}",
            r.lemma, r.lhs, r.rhs, r.stderr
        ))));
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct NormsReport {
    rows: usize,
    cols: usize,
    spectral: f64,
    norm_one_two: f64,
    mask: Option<MaskStats>,
}

fn norms(path: &Path) -> Result<(), Failure> {
    let a = read_matrix_csv(path)?;
    let mask = if a.is_square() && SymmetricMatrix::from_dense(&a).is_ok() {
        Some(MaskStats::from(&custom_mask(&a)?))
    } else {
        None
    };
    let report = NormsReport {
        rows: a.rows(),
        cols: a.cols(),
        spectral: spectral_norm(&a)?,
        norm_one_two: norm_one_two(&a),
        mask,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
    Ok(())
}
