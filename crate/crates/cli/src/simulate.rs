//! Seeded simulation campaigns: draw replicated datasets, run every
//! configured method, and write one TPR-FDR curve CSV per method.
//!
//! Curve conventions: hard-thresholding and marginal screening sweep the
//! model size 1..=p; penalized methods sweep their lambda grid and add a
//! cross-validation-selected point as an extra `<kind>_cv` row. Replicates
//! are averaged pointwise per grid index, and the `replicates_used` column
//! records how many replicates contributed (method failures are logged and
//! excluded).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use subsel::bss::best_subset;
use subsel::comparators::{
    cross_validate, default_lambda_grid, penalized_path, sis, tpr_fdr_curve, PenaltySpec,
};
use subsel::core::{SelectionMetrics, Standardize, SupportSet};
use subsel::iht::{iht_run, model_size_path, two_stage, IhtConfig};
use subsel::rng::{domain, stream};
use subsel::simgen::{
    covariance_root, gen_beta, gen_covariance, sample_dataset_with_root, CovarianceKind, SimConfig,
};

use crate::config::{ExperimentConfig, MethodSpec};

/// Flags resolved by the command-line layer.
#[derive(Debug, Clone)]
pub struct SimulateOpts {
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub budget: u64,
    pub standardize: Option<Standardize>,
}

/// Where the run's artifacts were written.
#[derive(Debug)]
pub struct SimulateSummary {
    pub curve_files: Vec<PathBuf>,
    pub log_file: PathBuf,
}

/// Header stamped into every output file so runs are self-describing.
#[derive(Serialize)]
struct RunStamp<'a> {
    command: &'a str,
    seed: u64,
    n: usize,
    budget: u64,
    standardize: Option<Standardize>,
    config: &'a ExperimentConfig,
}

/// One method's results on one replicate: the sweep over its grid, plus an
/// optional cross-validated point for penalized methods.
struct MethodPoints {
    grid: Vec<(f64, SelectionMetrics)>,
    cv: Option<(f64, SelectionMetrics)>,
}

pub fn run_simulate(
    config: &ExperimentConfig,
    seed: u64,
    opts: &SimulateOpts,
) -> Result<SimulateSummary> {
    config.validate()?;
    let table = config
        .sim
        .as_ref()
        .context("simulate requires a [sim] section in the config")?;
    let sim = table.resolve(seed)?;
    let root = match sim.cov.kind {
        CovarianceKind::Identity => None,
        _ => Some(covariance_root(&gen_covariance(&sim.cov, sim.seed)?)?),
    };

    let mut resolved = config.clone();
    resolved.seed = seed;
    let stamp = RunStamp {
        command: "simulate",
        seed,
        n: sim.n(),
        budget: opts.budget,
        standardize: opts.standardize,
        config: &resolved,
    };
    let stamp_json = serde_json::to_string(&stamp)?;

    let replicates = config.replicates;
    let run_all = || -> Vec<Vec<Result<MethodPoints, String>>> {
        (0..replicates as u64)
            .into_par_iter()
            .map(|rep| replicate_outcomes(&sim, root.as_ref(), &resolved.methods, config.cv_folds, opts, seed, rep))
            .collect()
    };
    let outcomes = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("could not build the worker pool")?
            .install(run_all),
        None => run_all(),
    };

    fs::create_dir_all(&opts.out_dir)
        .with_context(|| format!("could not create {}", opts.out_dir.display()))?;
    let mut log = String::new();
    writeln!(log, "command: simulate").unwrap();
    writeln!(log, "seed: {seed}").unwrap();
    writeln!(log, "config: {stamp_json}").unwrap();
    writeln!(log, "replicates: {replicates}").unwrap();

    let names = file_names(&resolved.methods);
    let mut curve_files = Vec::new();
    for (m, spec) in resolved.methods.iter().enumerate() {
        let mut ok: Vec<&MethodPoints> = Vec::new();
        let mut failures: Vec<(usize, &str)> = Vec::new();
        for (rep, per_method) in outcomes.iter().enumerate() {
            match &per_method[m] {
                Ok(points) => ok.push(points),
                Err(msg) => failures.push((rep, msg)),
            }
        }
        writeln!(
            log,
            "method {spec}: {}/{replicates} replicates used",
            ok.len()
        )
        .unwrap();
        for (rep, msg) in &failures {
            writeln!(log, "  replicate {rep} failed: {msg}").unwrap();
        }

        let rows = aggregate(spec.kind_name(), &ok)?;
        let path = opts.out_dir.join(&names[m]);
        write_curve_csv(&path, seed, &stamp_json, &rows)?;
        writeln!(log, "wrote {}", names[m]).unwrap();
        curve_files.push(path);
    }

    let log_file = opts.out_dir.join("run.log");
    fs::write(&log_file, log).with_context(|| format!("could not write {}", log_file.display()))?;
    Ok(SimulateSummary {
        curve_files,
        log_file,
    })
}

/// Output file name per method: `<kind>.csv`, disambiguated with the method
/// index when a kind appears more than once.
fn file_names(methods: &[MethodSpec]) -> Vec<String> {
    methods
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let kind = spec.kind_name();
            let dup = methods.iter().filter(|m| m.kind_name() == kind).count() > 1;
            if dup {
                format!("{kind}_{i}.csv")
            } else {
                format!("{kind}.csv")
            }
        })
        .collect()
}

/// Runs every method on one freshly drawn replicate. Generation failures
/// mark every method failed; method failures are isolated per method.
fn replicate_outcomes(
    sim: &SimConfig,
    root: Option<&nalgebra::DMatrix<f64>>,
    methods: &[MethodSpec],
    cv_folds: usize,
    opts: &SimulateOpts,
    seed: u64,
    rep: u64,
) -> Vec<Result<MethodPoints, String>> {
    let generated = (|| {
        let beta = gen_beta(sim, &mut stream(seed, domain::BETA, rep))?;
        let data = sample_dataset_with_root(sim, &beta, root, &mut stream(seed, domain::DESIGN, rep))?;
        let data = match opts.standardize {
            Some(mode) => data.standardized(mode)?,
            None => data,
        };
        Ok::<_, subsel::Error>((data, beta))
    })();
    let (data, beta) = match generated {
        Ok(pair) => pair,
        Err(e) => {
            let msg = format!("replicate generation failed: {e}");
            return methods.iter().map(|_| Err(msg.clone())).collect();
        }
    };
    let truth = beta.support();

    methods
        .iter()
        .map(|spec| {
            method_points(&data, truth, spec, cv_folds, opts.budget, seed, rep)
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// One method's sweep on one dataset.
fn method_points(
    data: &subsel::core::Dataset,
    truth: &SupportSet,
    spec: &MethodSpec,
    cv_folds: usize,
    budget: u64,
    seed: u64,
    rep: u64,
) -> Result<MethodPoints> {
    let p = data.p();
    match spec {
        MethodSpec::Iht { pi, l, s_hat } => {
            let config = IhtConfig::new(*pi, *l, *s_hat);
            let run = iht_run(data, &config)?;
            let path = model_size_path(data, &run.beta, *pi, p)?;
            let grid = path
                .iter()
                .enumerate()
                .map(|(i, set)| {
                    Ok((
                        (i + 1) as f64,
                        SelectionMetrics::evaluate(set, truth)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MethodPoints { grid, cv: None })
        }
        MethodSpec::Sis { .. } => {
            let grid = (1..=p)
                .map(|k| {
                    let set = sis(data, k)?;
                    Ok((k as f64, SelectionMetrics::evaluate(&set, truth)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MethodPoints { grid, cv: None })
        }
        MethodSpec::Lasso | MethodSpec::Scad { .. } => {
            let penalty = match spec {
                MethodSpec::Scad { a } => PenaltySpec::Scad { a: *a },
                _ => PenaltySpec::Lasso,
            };
            let lambdas = default_lambda_grid(data, 100)?;
            let path = penalized_path(data, &penalty, &lambdas)?;
            let metrics = tpr_fdr_curve(&path, truth)?;
            let grid = lambdas.iter().copied().zip(metrics.iter().copied()).collect();
            let cv = cross_validate(
                data,
                &penalty,
                &lambdas,
                cv_folds,
                &mut stream(seed, domain::FOLDS, rep),
            )?;
            let star = (cv.lambda_star, metrics[cv.lambda_star_index]);
            Ok(MethodPoints {
                grid,
                cv: Some(star),
            })
        }
        MethodSpec::TwoStage { pi, l, s_hat } => {
            let config = IhtConfig::new(*pi, *l, *s_hat);
            let res = two_stage(data, &config, *s_hat, budget)?;
            let point = (
                *s_hat as f64,
                SelectionMetrics::evaluate(&res.best.support, truth)?,
            );
            Ok(MethodPoints {
                grid: vec![point],
                cv: None,
            })
        }
        MethodSpec::Bss { s_hat } => {
            let res = best_subset(data, *s_hat, budget)?;
            let point = (
                *s_hat as f64,
                SelectionMetrics::evaluate(&res.best.support, truth)?,
            );
            Ok(MethodPoints {
                grid: vec![point],
                cv: None,
            })
        }
    }
}

struct CsvRow {
    method: String,
    label: f64,
    fdr: f64,
    tpr: f64,
    used: usize,
}

/// Pointwise mean across the replicates that succeeded, per grid index.
fn aggregate(kind: &str, ok: &[&MethodPoints]) -> Result<Vec<CsvRow>> {
    let used = ok.len();
    if used == 0 {
        return Ok(Vec::new());
    }
    let grid_len = ok[0].grid.len();
    if ok.iter().any(|pts| pts.grid.len() != grid_len) {
        bail!("internal error: replicates produced sweeps of different lengths for {kind}");
    }
    let mut rows = Vec::with_capacity(grid_len + 1);
    for i in 0..grid_len {
        let label = ok.iter().map(|pts| pts.grid[i].0).sum::<f64>() / used as f64;
        let fdr = ok.iter().map(|pts| pts.grid[i].1.fdr).sum::<f64>() / used as f64;
        let tpr = ok.iter().map(|pts| pts.grid[i].1.tpr).sum::<f64>() / used as f64;
        rows.push(CsvRow {
            method: kind.to_owned(),
            label,
            fdr,
            tpr,
            used,
        });
    }
    if ok.iter().all(|pts| pts.cv.is_some()) && ok[0].cv.is_some() {
        let label = ok.iter().map(|pts| pts.cv.unwrap().0).sum::<f64>() / used as f64;
        let fdr = ok.iter().map(|pts| pts.cv.unwrap().1.fdr).sum::<f64>() / used as f64;
        let tpr = ok.iter().map(|pts| pts.cv.unwrap().1.tpr).sum::<f64>() / used as f64;
        rows.push(CsvRow {
            method: format!("{kind}_cv"),
            label,
            fdr,
            tpr,
            used,
        });
    }
    Ok(rows)
}

/// Writes one curve file: `# seed` and `# config` comment lines, then the
/// stable schema `method,s_hat_or_lambda,fdr,tpr,replicates_used`.
fn write_curve_csv(path: &Path, seed: u64, stamp_json: &str, rows: &[CsvRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["method", "s_hat_or_lambda", "fdr", "tpr", "replicates_used"])?;
    for row in rows {
        writer.write_record([
            row.method.as_str(),
            &row.label.to_string(),
            &row.fdr.to_string(),
            &row.tpr.to_string(),
            &row.used.to_string(),
        ])?;
    }
    let body = writer.into_inner().context("csv buffer")?;
    let mut content = format!("# seed = {seed}\n# config = {stamp_json}\n").into_bytes();
    content.extend_from_slice(&body);
    fs::write(path, content).with_context(|| format!("could not write {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;

    fn toy_config(dir: &Path) -> PathBuf {
        let text = r#"
            seed = 11
            replicates = 2

            [sim]
            p = 6
            s = 2
            sigma = 0.0
            beta_min = 1.0
            n = 30

            [[methods]]
            kind = "iht"
            pi = 3
            l = 2
            s_hat = 2

            [[methods]]
            kind = "lasso"

            [[methods]]
            kind = "bss"
            s_hat = 2
        "#;
        let path = dir.join("toy.toml");
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn noiseless_toy_curve_contains_perfect_recovery_point() {
        let dir = tempfile::tempdir().unwrap();
        let config = load_config(&toy_config(dir.path())).unwrap();
        let opts = SimulateOpts {
            out_dir: dir.path().join("out"),
            threads: Some(2),
            budget: 1_000_000,
            standardize: None,
        };
        let summary = run_simulate(&config, config.seed, &opts).unwrap();
        assert_eq!(summary.curve_files.len(), 3);

        let iht = fs::read_to_string(&summary.curve_files[0]).unwrap();
        assert!(iht.starts_with("# seed = 11\n# config = "));
        let mut found_perfect = false;
        for line in iht.lines().skip(3) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 5);
            let fdr: f64 = cols[2].parse().unwrap();
            let tpr: f64 = cols[3].parse().unwrap();
            if fdr == 0.0 && tpr == 1.0 {
                found_perfect = true;
            }
        }
        assert!(found_perfect, "no (FDR, TPR) = (0, 1) point in:\n{iht}");

        // The noiseless exhaustive search nails the support in every
        // replicate: a single row with fdr 0, tpr 1, both replicates used.
        let bss = fs::read_to_string(&summary.curve_files[2]).unwrap();
        let last = bss.lines().last().unwrap();
        assert_eq!(last, "bss,2,0,1,2");

        // The penalized curve file carries the extra cross-validated row.
        let lasso = fs::read_to_string(&summary.curve_files[1]).unwrap();
        assert!(lasso.lines().any(|l| l.starts_with("lasso_cv,")), "{lasso}");

        let log = fs::read_to_string(&summary.log_file).unwrap();
        assert!(log.contains("method iht(pi=3, l=2, s_hat=2): 2/2 replicates used"));
    }

    #[test]
    fn reruns_are_byte_identical_and_failures_are_isolated() {
        let dir = tempfile::tempdir().unwrap();
        // pi + l = 40 exceeds n = 30, so the hard-thresholding method fails
        // on every replicate while the screening method still runs.
        let text = r#"
            seed = 5
            replicates = 2

            [sim]
            p = 8
            s = 2
            sigma = 0.1
            beta_min = 1.0
            n = 30

            [[methods]]
            kind = "iht"
            pi = 20
            l = 20
            s_hat = 2

            [[methods]]
            kind = "sis"
            k = 2
        "#;
        let path = dir.path().join("cfg.toml");
        fs::write(&path, text).unwrap();
        let config = load_config(&path).unwrap();

        let run = |out: PathBuf| {
            let opts = SimulateOpts {
                out_dir: out,
                threads: Some(2),
                budget: 1_000_000,
                standardize: None,
            };
            run_simulate(&config, config.seed, &opts).unwrap()
        };
        let a = run(dir.path().join("a"));
        let b = run(dir.path().join("b"));
        for (fa, fb) in a.curve_files.iter().zip(&b.curve_files) {
            assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap());
        }
        assert_eq!(
            fs::read(&a.log_file).unwrap(),
            fs::read(&b.log_file).unwrap()
        );

        let log = fs::read_to_string(&a.log_file).unwrap();
        assert!(log.contains("0/2 replicates used"), "{log}");
        assert!(log.contains("replicate 0 failed:"), "{log}");
        let iht = fs::read_to_string(&a.curve_files[0]).unwrap();
        assert_eq!(iht.lines().count(), 3, "failed method writes header only");
        let sis_csv = fs::read_to_string(&a.curve_files[1]).unwrap();
        assert_eq!(sis_csv.lines().count(), 3 + 8);
    }
}
