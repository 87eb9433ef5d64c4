//! Exit codes: 0 success, 1 error, 2 solver stopped without converging
//! (`train`) or stationarity check failed (`certify`).

mod args;
mod model;
mod report;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use nssvm::dataset::{binarize_labels, ColumnScaling};
use nssvm::linear::{decision_values, sign};
use nssvm::metrics::seed_range;
use nssvm::{
    check_eta_stationarity, dual_objective, evaluate, parse_libsvm, run_trials, write_libsvm, BenchSpec, DataSource,
    Dataset, DualIterate, NssvmError, Profile, SolverRegistry,
};

use args::{BenchArgs, CertifyArgs, Cli, Command, DataPrep, Format, PredictArgs, SynthArgs, TrainArgs};
use model::{Model, ModelConfig, ModelMetrics};
use report::SweepEntry;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    let serial = matches!(&cli.command, Command::Bench(b) if b.serial);
    if let Err(e) = configure_threads(serial) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_ERROR);
    }
    let outcome = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Certify(a) => cmd_certify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn configure_threads(serial: bool) -> Result<()> {
    let threads = if serial {
        Some(1)
    } else {
        match std::env::var("NSSVM_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n > 0)
                    .with_context(|| format!("NSSVM_THREADS must be a positive integer, got '{v}'"))?,
            ),
            Err(_) => None,
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load_libsvm(path: &Path, binarize: bool) -> Result<Dataset> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let d = parse_libsvm(BufReader::new(f)).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(if binarize { binarize_labels(&d) } else { d })
}

fn has_binary_labels(d: &Dataset) -> bool {
    d.labels().iter().all(|&y| y == 1.0 || y == -1.0)
}

fn fmt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.2}%"))
}

/// Loads a training file and fits the optional column scaling.
fn load_training(path: &Path, prep: &DataPrep) -> Result<(Dataset, Option<ColumnScaling>)> {
    let raw = load_libsvm(path, prep.binarize)?;
    let scaling = prep.scale.then(|| ColumnScaling::fit(&raw));
    let train = match &scaling {
        Some(sc) => sc.apply(&raw),
        None => raw,
    };
    Ok((train, scaling))
}

fn cmd_train(a: TrainArgs) -> Result<u8> {
    let (train, scaling) = load_training(&a.data, &a.prep)?;
    let test_raw = a.test.as_deref().map(|p| load_libsvm(p, a.prep.binarize)).transpose()?;

    let profile = a.solver.profile.unwrap_or(Profile::RealDefault);
    let settings = a.solver.settings(profile);
    let name = a.solver.solver_name()?;
    let cfg = settings.resolve(train.m(), train.n())?;
    let solver = SolverRegistry::default().create(&name, &cfg)?;

    let started = Instant::now();
    let fit = solver.fit(&train, DualIterate::zero_start(train.labels()))?;
    let elapsed = started.elapsed().as_secs_f64();

    let config = ModelConfig {
        profile,
        solver: name,
        solver_config: cfg,
        final_s: fit.final_s,
    };
    let placeholder = ModelMetrics {
        m: train.m(),
        acc: 0.0,
        tacc: None,
        nsv: 0,
        nsv_ratio: 0.0,
        iters: 0,
        converged: fit.converged,
    };
    let mut model = Model::from_fit(&fit, train.n(), config, placeholder, scaling);
    let test = test_raw.map(|t| model.prepare(&t)).transpose()?;
    let metrics = evaluate(&fit, &train, test.as_ref())?;
    model.metrics = ModelMetrics {
        acc: metrics.acc,
        tacc: metrics.tacc,
        nsv: metrics.nsv,
        nsv_ratio: metrics.nsv_ratio,
        iters: metrics.iters,
        ..model.metrics
    };
    model.save(&a.output)?;

    println!(
        "solver={} m={} n={} ACC={} TACC={} NSV={} NSV/m={:.3e} iters={} s={} time={:.3}s converged={}",
        model.config.solver,
        train.m(),
        train.n(),
        fmt_pct(Some(metrics.acc)),
        fmt_pct(metrics.tacc),
        metrics.nsv,
        metrics.nsv_ratio,
        metrics.iters,
        fit.final_s,
        elapsed,
        fit.converged
    );
    if fit.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("warning: residual tolerance not reached; model written anyway");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_predict(a: PredictArgs) -> Result<u8> {
    let model = Model::load(&a.model)?;
    let raw = load_libsvm(&a.data, false)?;
    let d = model.prepare(&raw)?;
    let predictions: Vec<f64> = decision_values(&d, &model.w, model.b)?.into_iter().map(sign).collect();

    let mut text = String::with_capacity(3 * predictions.len());
    for p in &predictions {
        text.push_str(if *p > 0.0 { "1\n" } else { "-1\n" });
    }
    let to_stdout = a.output.is_none();
    match &a.output {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    if has_binary_labels(&d) {
        let hits = predictions.iter().zip(d.labels()).filter(|(p, y)| p == y).count();
        let line = format!("TACC={:.2}% ({hits}/{})", 100.0 * hits as f64 / d.m() as f64, d.m());
        if to_stdout {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bench(a: BenchArgs) -> Result<u8> {
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let (source, fallback) = if a.synthetic {
        let m = a.m.context("--synthetic needs --m")?;
        (DataSource::Gaussian { m }, Profile::for_synthetic(m))
    } else {
        let path = a.data.as_deref().context("either --synthetic or --data is required")?;
        if let Some(f) = a.split {
            if !(f > 0.0 && f <= 1.0) {
                bail!("--split must lie in (0, 1], got {f}");
            }
        }
        let (data, _) = load_training(path, &a.prep)?;
        let source = DataSource::Loaded {
            data: Arc::new(data),
            train_fraction: a.split,
        };
        (source, Profile::RealDefault)
    };
    let base = a.solver.settings(fallback);
    let solver = a.solver.solver_name()?;
    let seeds = seed_range(a.seed, a.trials);

    let mut runs = Vec::new();
    match a.sweep {
        Some(param) => {
            for &v in &a.values {
                let mut st = base.clone();
                param.apply(&mut st, v)?;
                runs.push((param.name().to_string(), v, st));
            }
        }
        None => runs.push((String::new(), f64::NAN, base)),
    }

    let mut entries = Vec::with_capacity(runs.len());
    for (param, value, settings) in runs {
        let spec = BenchSpec {
            source: source.clone(),
            settings,
            solver: solver.clone(),
        };
        let mut report = run_trials(&spec, &seeds, !a.serial)?;
        if a.no_timing {
            report.strip_timing();
        }
        let label = if param.is_empty() { String::new() } else { format!("{param}={value} ") };
        eprintln!(
            "{label}trials={} failures={} ACC={} TACC={} NSV={:.1} NSV/m={:.3e} iters={:.1} time={:.3}s",
            report.trials,
            report.failures,
            fmt_pct(Some(report.acc)),
            fmt_pct(report.tacc),
            report.nsv,
            report.nsv_ratio,
            report.iters,
            report.time_seconds
        );
        for t in &report.per_trial {
            if let Some(err) = &t.error {
                eprintln!("  seed {}: {err}", t.seed);
            }
        }
        entries.push(SweepEntry { param, value, report });
    }

    let swept = a.sweep.is_some();
    let write = |out: Box<dyn Write>| match a.format {
        Format::Json => report::write_json(out, &entries, swept),
        Format::Csv => report::write_csv(out, &entries, swept),
    };
    match &a.output {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write(Box::new(BufWriter::new(f)))?;
        }
        None => write(Box::new(io::stdout().lock()))?,
    }

    let any_success = entries.iter().any(|e| e.report.successes() > 0);
    Ok(if any_success { EXIT_OK } else { EXIT_ERROR })
}

fn cmd_synth(a: SynthArgs) -> Result<u8> {
    let data = nssvm::gen_gaussian_2d(a.m, a.seed)?;
    for (d, path) in [(&data.train, &a.train_out), (&data.test, &a.test_out)] {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(f);
        write_libsvm(d, &mut out)?;
        out.flush()?;
    }
    println!(
        "wrote {} training samples to {} and {} test samples to {}",
        data.train.m(),
        a.train_out.display(),
        data.test.m(),
        a.test_out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_certify(a: CertifyArgs) -> Result<u8> {
    let (d, z, cfg) = match &a.model {
        Some(path) => {
            let model = Model::load(path)?;
            let raw = load_libsvm(&a.data, a.prep.binarize)?;
            let d = model.prepare(&raw)?;
            let z = model.dual_iterate(d.m())?;
            let mut cfg = model.config.solver_config.base.clone();
            cfg.s = model.config.final_s;
            (d, z, cfg)
        }
        None => {
            let (d, _) = load_training(&a.data, &a.prep)?;
            let settings = a.solver.settings(a.solver.profile.unwrap_or(Profile::RealDefault));
            let name = a.solver.solver_name()?;
            let adaptive = settings.resolve(d.m(), d.n())?;
            let fit = SolverRegistry::default()
                .create(&name, &adaptive)?
                .fit(&d, DualIterate::zero_start(d.labels()))?;
            println!("fitted with {name}: {} iterations, converged = {}", fit.iters, fit.converged);
            let mut cfg = adaptive.base.clone();
            cfg.s = fit.final_s;
            (d, fit.dual_iterate(), cfg)
        }
    };
    d.ensure_binary()?;

    let report = check_eta_stationarity(&d, &z, &cfg)?;
    println!("stationarity at m = {}, s = {}:", d.m(), cfg.s);
    println!("{report}");
    let passed = report.passed();
    if passed {
        println!("η-stationary: PASS");
    } else {
        println!("η-stationary: FAIL (violated: {})", report.violated().join(", "));
    }

    match nssvm::oracle::enumerate_global(&d, cfg.s, &cfg.penalties) {
        Ok(res) => {
            let objective = dual_objective(&d, &z.alpha, &cfg.penalties)?;
            println!(
                "oracle: optimum {:.12e} over {} supports (best support {:?})",
                res.best_objective, res.evaluated_supports, res.best_support
            );
            println!("oracle: model objective {:.12e}, gap {:.3e}", objective, objective - res.best_objective);
        }
        Err(NssvmError::OracleTooLarge { m, s }) => {
            println!("oracle: skipped, instance too large for enumeration (m = {m}, s = {s}); stationarity-only mode");
        }
        Err(e) => return Err(e.into()),
    }
    Ok(if passed { EXIT_OK } else { EXIT_NOT_CONVERGED })
}
