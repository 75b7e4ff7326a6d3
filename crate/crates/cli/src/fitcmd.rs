//! Model fitting on a CSV dataset: seeded train/test split, per-method
//! tuning by cross-validation on the training rows, and a JSON report of
//! out-of-sample performance and ranked selected features.
//!
//! Tuning conventions: penalized methods tune lambda on their default grid;
//! marginal screening tunes the kept size up to its configured `k`;
//! hard thresholding tunes the final model size over 1..=pi. The two
//! exhaustive methods use their configured `s_hat` directly. Features are
//! ranked by the |t|-statistic of an ordinary refit on the selected
//! support, falling back to |coefficient| when the refit leaves no error
//! degrees of freedom (the response may be fit exactly).

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use rand::seq::SliceRandom;
use serde::Serialize;
use subsel::bss::best_subset;
use subsel::comparators::{cross_validate, default_lambda_grid, penalized_path, sis, PenaltySpec};
use subsel::core::{Dataset, Standardize, SupportSet};
use subsel::iht::{iht_run, model_size_path, two_stage, IhtConfig};
use subsel::linalg::ols_fit;
use subsel::rng::{domain, stream, StreamRng};
use subsel::simgen::augment_noise;

use crate::config::{ExperimentConfig, MethodSpec};
use crate::ingest::load_csv;

/// Flags resolved by the command-line layer.
#[derive(Debug, Clone)]
pub struct FitOpts {
    /// CSV path; overrides the config's `[input]` table.
    pub input: Option<PathBuf>,
    /// Response column name; overrides the config's `[input]` table.
    pub response: Option<String>,
    /// Training fraction of rows (the rest are held out).
    pub train_fraction: f64,
    /// Also refit an ordinary model on the top-k ranked features.
    pub refit_top: Option<usize>,
    /// Append this many pure-noise columns before fitting.
    pub augment_noise: Option<usize>,
    pub standardize: Standardize,
    pub out_dir: PathBuf,
    pub budget: u64,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub command: &'static str,
    pub seed: u64,
    pub budget: u64,
    pub standardize: Standardize,
    pub input: InputSummary,
    pub split: SplitSummary,
    pub config: ExperimentConfig,
    pub methods: Vec<MethodEntry>,
}

#[derive(Debug, Serialize)]
pub struct InputSummary {
    pub path: String,
    pub response: String,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub features: usize,
    pub noise_features_added: usize,
}

#[derive(Debug, Serialize)]
pub struct SplitSummary {
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_fraction: f64,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Ok(Box<MethodReport>),
    Failed { name: String, error: String },
}

#[derive(Debug, Serialize)]
pub struct MethodReport {
    pub name: String,
    pub spec: MethodSpec,
    pub tuning: TuningReport,
    pub model_size: usize,
    pub test_r2: f64,
    /// Selected features, most important first.
    pub selected: Vec<SelectedFeature>,
    /// Ranking rule actually used: `t_stat` or `coefficient`.
    pub ranked_by: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_selected: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refit_top: Option<RefitReport>,
}

#[derive(Debug, Serialize, Default)]
pub struct TuningReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_hat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_folds: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct SelectedFeature {
    pub feature: String,
    pub coefficient: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_stat: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RefitReport {
    pub k: usize,
    pub test_r2: f64,
    pub features: Vec<String>,
}

/// A tuned model on the training rows: its support, a dense coefficient
/// vector for prediction, and what the tuning chose.
struct ModelFit {
    support: SupportSet,
    beta: DVector<f64>,
    tuning: TuningReport,
}

pub fn run_fit(config: &ExperimentConfig, seed: u64, opts: &FitOpts) -> Result<(FitReport, PathBuf)> {
    config.validate()?;
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        bail!(
            "train fraction {} must lie strictly between 0 and 1",
            opts.train_fraction
        );
    }
    let (path, response) = match (&opts.input, &opts.response, &config.input) {
        (Some(p), Some(r), _) => (p.clone(), r.clone()),
        (Some(p), None, Some(table)) => (p.clone(), table.response.clone()),
        (None, Some(r), Some(table)) => (table.path.clone(), r.clone()),
        (None, None, Some(table)) => (table.path.clone(), table.response.clone()),
        _ => bail!("fit needs a CSV: set [input] in the config or pass --input and --response"),
    };

    let ingest = load_csv(&path, &response)?;
    let base_p = ingest.data.p();
    let mut names = ingest.feature_names;
    let mut data = ingest.data;
    let noise_added = opts.augment_noise.unwrap_or(0);
    if noise_added > 0 {
        data = augment_noise(&data, noise_added, &mut stream(seed, domain::AUGMENT, 0))?;
        names.extend((1..=noise_added).map(|i| format!("noise_{i}")));
    }
    let data = data.standardized(opts.standardize)?;

    let n = data.n();
    if n < 2 {
        bail!("need at least 2 usable rows to split, found {n}");
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, domain::SPLIT, 0));
    let n_train = ((n as f64 * opts.train_fraction).round() as usize).clamp(1, n - 1);
    let mut train_rows = order[..n_train].to_vec();
    let mut test_rows = order[n_train..].to_vec();
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    let train_raw = data.select_rows(&train_rows)?;
    let test = data.select_rows(&test_rows)?;

    // Absorb the intercept: center the training response and use the same
    // mean when predicting and when scoring held-out rows.
    let y_bar = train_raw.y().mean();
    let train = Dataset::new(train_raw.x().clone(), train_raw.y().add_scalar(-y_bar))?;

    let mut entries = Vec::with_capacity(config.methods.len());
    for (m, spec) in config.methods.iter().enumerate() {
        let entry = match fit_method(&train, spec, config.cv_folds, opts.budget, seed, m as u64) {
            Err(e) => MethodEntry::Failed {
                name: spec.kind_name().to_owned(),
                error: format!("{e:#}"),
            },
            Ok(fit) => {
                let test_r2 = r_squared(&test, &fit.beta, y_bar);
                let (selected, ranked_by) = ranked_features(&train, &fit, &names)?;
                let noise_selected = (noise_added > 0)
                    .then(|| fit.support.iter().filter(|&j| j >= base_p).count());
                let refit_top = match opts.refit_top {
                    Some(k) if k > 0 => {
                        Some(refit_top_k(&train, &test, &selected, &names, k, y_bar)?)
                    }
                    _ => None,
                };
                MethodEntry::Ok(Box::new(MethodReport {
                    name: spec.kind_name().to_owned(),
                    spec: spec.clone(),
                    model_size: fit.support.len(),
                    test_r2,
                    tuning: fit.tuning,
                    selected,
                    ranked_by,
                    noise_selected,
                    refit_top,
                }))
            }
        };
        entries.push(entry);
    }

    let mut resolved = config.clone();
    resolved.seed = seed;
    let report = FitReport {
        command: "fit",
        seed,
        budget: opts.budget,
        standardize: opts.standardize,
        input: InputSummary {
            path: path.display().to_string(),
            response,
            rows_used: ingest.rows_used,
            rows_dropped: ingest.rows_dropped,
            features: base_p,
            noise_features_added: noise_added,
        },
        split: SplitSummary {
            train_rows: n_train,
            test_rows: n - n_train,
            train_fraction: opts.train_fraction,
        },
        config: resolved,
        methods: entries,
    };

    fs::create_dir_all(&opts.out_dir)
        .with_context(|| format!("could not create {}", opts.out_dir.display()))?;
    let out_path = opts.out_dir.join("fit.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&out_path, text).with_context(|| format!("could not write {}", out_path.display()))?;
    Ok((report, out_path))
}

/// Out-of-sample R² with the total sum of squares taken around the
/// training mean, so a constant predictor at that mean scores zero.
fn r_squared(test: &Dataset, beta: &DVector<f64>, y_bar: f64) -> f64 {
    let pred = (test.x() * beta).add_scalar(y_bar);
    let ss_res = (test.y() - pred).norm_squared();
    let ss_tot = test.y().add_scalar(-y_bar).norm_squared();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        f64::NAN
    }
}

/// Tunes and fits one method on the training data.
fn fit_method(
    train: &Dataset,
    spec: &MethodSpec,
    cv_folds: usize,
    budget: u64,
    seed: u64,
    method_index: u64,
) -> Result<ModelFit> {
    let p = train.p();
    let n = train.n();
    match spec {
        MethodSpec::Lasso | MethodSpec::Scad { .. } => {
            let penalty = match spec {
                MethodSpec::Scad { a } => PenaltySpec::Scad { a: *a },
                _ => PenaltySpec::Lasso,
            };
            let lambdas = default_lambda_grid(train, 100)?;
            let cv = cross_validate(
                train,
                &penalty,
                &lambdas,
                cv_folds,
                &mut stream(seed, domain::FOLDS, method_index),
            )?;
            let path = penalized_path(train, &penalty, &lambdas)?;
            let entry = &path.entries[cv.lambda_star_index];
            Ok(ModelFit {
                support: entry.support().clone(),
                beta: entry.beta.dense(p),
                tuning: TuningReport {
                    lambda: Some(cv.lambda_star),
                    cv_folds: Some(cv_folds),
                    ..TuningReport::default()
                },
            })
        }
        MethodSpec::Sis { k } => {
            let k_max = size_cap(*k, n, p, cv_folds)?;
            let curve = cv_size_curve(
                train,
                cv_folds,
                &mut stream(seed, domain::FOLDS, method_index),
                k_max,
                |fold_data, max| (1..=max).map(|kk| Ok(sis(fold_data, kk)?)).collect(),
            )?;
            let k_star = argmin_first(&curve) + 1;
            let support = sis(train, k_star)?;
            let fit = ols_fit(train, &support)?;
            Ok(ModelFit {
                support,
                beta: fit.sparse().dense(p),
                tuning: TuningReport {
                    k: Some(k_star),
                    cv_folds: Some(cv_folds),
                    ..TuningReport::default()
                },
            })
        }
        MethodSpec::Iht { pi, l, .. } => {
            let s_max = size_cap(*pi, n, p, cv_folds)?;
            let config = IhtConfig::new(*pi, *l, (*pi).min(p));
            let curve = cv_size_curve(
                train,
                cv_folds,
                &mut stream(seed, domain::FOLDS, method_index),
                s_max,
                |fold_data, max| {
                    let run = iht_run(fold_data, &config)?;
                    Ok(model_size_path(fold_data, &run.beta, *pi, max)?)
                },
            )?;
            let s_star = argmin_first(&curve) + 1;
            let run = iht_run(train, &config)?;
            let path = model_size_path(train, &run.beta, *pi, s_max)?;
            let support = path[s_star - 1].clone();
            let fit = ols_fit(train, &support)?;
            Ok(ModelFit {
                support,
                beta: fit.sparse().dense(p),
                tuning: TuningReport {
                    s_hat: Some(s_star),
                    cv_folds: Some(cv_folds),
                    ..TuningReport::default()
                },
            })
        }
        MethodSpec::TwoStage { pi, l, s_hat } => {
            let config = IhtConfig::new(*pi, *l, *s_hat);
            let res = two_stage(train, &config, *s_hat, budget)?;
            Ok(ModelFit {
                support: res.best.support.clone(),
                beta: res.best.sparse().dense(p),
                tuning: TuningReport {
                    s_hat: Some(*s_hat),
                    ..TuningReport::default()
                },
            })
        }
        MethodSpec::Bss { s_hat } => {
            let res = best_subset(train, *s_hat, budget)?;
            Ok(ModelFit {
                support: res.best.support.clone(),
                beta: res.best.sparse().dense(p),
                tuning: TuningReport {
                    s_hat: Some(*s_hat),
                    ..TuningReport::default()
                },
            })
        }
    }
}

/// Largest candidate model size that every fold can refit by least squares:
/// bounded by the requested size, the feature count, and the smallest
/// in-fold row count.
fn size_cap(requested: usize, n: usize, p: usize, folds: usize) -> Result<usize> {
    if !(2..=n).contains(&folds) {
        bail!("cv_folds = {folds} must lie in 2..={n} (training rows)");
    }
    let largest_fold = n.div_ceil(folds);
    let cap = requested.min(p).min(n - largest_fold);
    if cap == 0 {
        bail!("training set too small to cross-validate any model size");
    }
    Ok(cap)
}

/// Mean held-out squared error per candidate size 1..=`max_size`. The
/// `paths` callback produces, for one fold's training data, the nested
/// supports indexed by size.
fn cv_size_curve(
    train: &Dataset,
    folds: usize,
    rng: &mut StreamRng,
    max_size: usize,
    paths: impl Fn(&Dataset, usize) -> Result<Vec<SupportSet>>,
) -> Result<Vec<f64>> {
    let n = train.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fold_of = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        fold_of[row] = pos % folds;
    }

    let mut sse = vec![0.0f64; max_size];
    for fold in 0..folds {
        let held: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
        let kept: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let fit_data = train.select_rows(&kept)?;
        let held_data = train.select_rows(&held)?;
        let supports = paths(&fit_data, max_size)?;
        if supports.len() != max_size {
            bail!(
                "internal error: size path produced {} supports, expected {max_size}",
                supports.len()
            );
        }
        for (i, support) in supports.iter().enumerate() {
            let fit = ols_fit(&fit_data, support)?;
            let pred = held_data.x() * fit.sparse().dense(train.p());
            sse[i] += (held_data.y() - pred).norm_squared();
        }
    }
    Ok(sse.iter().map(|v| v / n as f64).collect())
}

/// Index of the smallest value, taking the first on ties (prefers the
/// smallest model size).
fn argmin_first(curve: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in curve.iter().enumerate() {
        if *v < curve[best] {
            best = i;
        }
    }
    best
}

/// Ranks the selected features. The primary rule is the |t|-statistic from
/// an ordinary refit on the support; when that is undefined (no error
/// degrees of freedom, singular refit, or an exact fit) the rule falls back
/// to |coefficient| of the fitted model itself.
fn ranked_features(
    train: &Dataset,
    fit: &ModelFit,
    names: &[String],
) -> Result<(Vec<SelectedFeature>, &'static str)> {
    let support = fit.support.indices();
    if support.is_empty() {
        return Ok((Vec::new(), "coefficient"));
    }
    let t_stats = refit_t_stats(train, &fit.support);
    let mut rows: Vec<(usize, f64, Option<f64>)> = support
        .iter()
        .enumerate()
        .map(|(slot, &j)| {
            let t = t_stats.as_ref().map(|ts| ts[slot]);
            (j, fit.beta[j], t)
        })
        .collect();
    let ranked_by = if t_stats.is_some() { "t_stat" } else { "coefficient" };
    rows.sort_by(|a, b| {
        let key_a = a.2.map_or(a.1.abs(), f64::abs);
        let key_b = b.2.map_or(b.1.abs(), f64::abs);
        key_b.partial_cmp(&key_a).unwrap().then(a.0.cmp(&b.0))
    });
    let selected = rows
        .into_iter()
        .map(|(j, coef, t)| SelectedFeature {
            feature: names[j].clone(),
            coefficient: coef,
            t_stat: t,
        })
        .collect();
    Ok((selected, ranked_by))
}

/// |t|-statistics of an ordinary refit on `support`, in support order.
/// Returns None when they are not all finite and positive-variance.
fn refit_t_stats(train: &Dataset, support: &SupportSet) -> Option<Vec<f64>> {
    let s = support.len();
    let n = train.n();
    // One degree of freedom is already spent on the absorbed intercept.
    if n <= s + 1 {
        return None;
    }
    let fit = ols_fit(train, support).ok()?;
    let xs = train.x().select_columns(support.indices());
    let gram = xs.transpose() * &xs;
    let inv = gram.cholesky()?.inverse();
    let sigma2 = fit.rss / (n - s - 1) as f64;
    let mut ts = Vec::with_capacity(s);
    for (slot, coef) in fit.coefficients.iter().enumerate() {
        let var = sigma2 * inv[(slot, slot)];
        if !(var.is_finite() && var > 0.0) {
            return None;
        }
        let t = coef / var.sqrt();
        if !t.is_finite() {
            return None;
        }
        ts.push(t);
    }
    Some(ts)
}

/// Ordinary refit on the top-k ranked features, scored on the held-out rows.
fn refit_top_k(
    train: &Dataset,
    test: &Dataset,
    ranked: &[SelectedFeature],
    names: &[String],
    k: usize,
    y_bar: f64,
) -> Result<RefitReport> {
    let chosen: Vec<String> = ranked.iter().take(k).map(|f| f.feature.clone()).collect();
    let indices: Vec<usize> = chosen
        .iter()
        .map(|name| names.iter().position(|n| n == name).expect("ranked feature has a name"))
        .collect();
    let support = SupportSet::new(indices);
    let test_r2 = if support.is_empty() {
        r_squared(test, &DVector::zeros(train.p()), y_bar)
    } else {
        let fit = ols_fit(train, &support)?;
        r_squared(test, &fit.sparse().dense(train.p()), y_bar)
    };
    Ok(RefitReport {
        k: chosen.len(),
        test_r2,
        features: chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use subsel::rng::stream;

    fn opts(dir: &std::path::Path) -> FitOpts {
        FitOpts {
            input: None,
            response: None,
            train_fraction: 0.8,
            refit_top: None,
            augment_noise: None,
            standardize: Standardize::ZScore,
            out_dir: dir.to_path_buf(),
            budget: 1_000_000,
        }
    }

    fn write_planted_csv(dir: &std::path::Path, n: usize, p: usize, seed: u64) -> PathBuf {
        use rand::Rng;
        let mut rng = stream(seed, 33, 0);
        let mut text = String::new();
        let mut header: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        text.push_str(&header.join(","));
        text.push('\n');
        for _ in 0..n {
            let xs: Vec<f64> = (0..p).map(|_| rand_distr_shim::sample_normal(&mut rng)).collect();
            let y = 3.0 * xs[0] - 2.0 * xs[1] + 0.05 * rng.random_range(-1.0..1.0);
            let row: Vec<String> = xs.iter().chain([&y]).map(|v| format!("{v}")).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let path = dir.join("planted.csv");
        fs::write(&path, text).unwrap();
        path
    }

    // Small shim so the test does not need rand_distr as a dependency of
    // this crate: a Box-Muller draw from the uniform generator.
    mod rand_distr_shim {
        use rand::Rng;
        pub fn sample_normal<R: Rng>(rng: &mut R) -> f64 {
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    fn config_with(methods: &str, input: Option<(&PathBuf, &str)>) -> ExperimentConfig {
        let input_block = input
            .map(|(p, r)| format!("[input]\npath = \"{}\"\nresponse = \"{r}\"\n", p.display()))
            .unwrap_or_default();
        let text = format!("seed = 9\ncv_folds = 5\n{input_block}{methods}");
        toml::from_str(&text).unwrap()
    }

    #[test]
    fn planted_signal_is_found_and_ranked_first() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write_planted_csv(dir.path(), 120, 8, 1);
        let config = config_with(
            "[[methods]]\nkind = \"lasso\"\n\n[[methods]]\nkind = \"iht\"\npi = 4\nl = 2\ns_hat = 2\n",
            Some((&csv, "y")),
        );
        let (report, path) = run_fit(&config, config.seed, &opts(dir.path())).unwrap();
        assert!(path.exists());
        assert_eq!(report.methods.len(), 2);
        for entry in &report.methods {
            let MethodEntry::Ok(m) = entry else {
                panic!("method failed");
            };
            assert!(m.test_r2 > 0.9, "{} scored {}", m.name, m.test_r2);
            assert!(!m.selected.is_empty());
            // The two planted features outrank everything else.
            let top: Vec<&str> = m.selected.iter().take(2).map(|f| f.feature.as_str()).collect();
            assert!(top.contains(&"x0"), "{top:?}");
            assert!(top.contains(&"x1"), "{top:?}");
            assert_eq!(m.ranked_by, "t_stat");
        }
    }

    #[test]
    fn duplicated_response_feature_dominates() {
        let dir = tempfile::tempdir().unwrap();
        // The feature `dup` equals the response exactly.
        let mut text = String::from("a,dup,y\n");
        let mut rng = stream(4, 34, 0);
        use rand::Rng;
        for _ in 0..60 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            text.push_str(&format!("{a},{y},{y}\n"));
        }
        let csv = dir.path().join("dup.csv");
        fs::write(&csv, text).unwrap();
        let config = config_with("[[methods]]\nkind = \"lasso\"\n", Some((&csv, "y")));
        let (report, _) = run_fit(&config, config.seed, &opts(dir.path())).unwrap();
        let MethodEntry::Ok(m) = &report.methods[0] else {
            panic!("lasso failed");
        };
        assert!(m.test_r2 >= 0.99, "test R² = {}", m.test_r2);
        assert_eq!(m.selected[0].feature, "dup");
    }

    #[test]
    fn noise_augmentation_is_counted_and_reported() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write_planted_csv(dir.path(), 100, 5, 2);
        let config = config_with("[[methods]]\nkind = \"lasso\"\n", Some((&csv, "y")));
        let mut o = opts(dir.path());
        o.augment_noise = Some(10);
        o.refit_top = Some(2);
        let (report, _) = run_fit(&config, config.seed, &o).unwrap();
        assert_eq!(report.input.noise_features_added, 10);
        let MethodEntry::Ok(m) = &report.methods[0] else {
            panic!("lasso failed");
        };
        let counted = m.noise_selected.expect("noise count present");
        let by_name = m
            .selected
            .iter()
            .filter(|f| f.feature.starts_with("noise_"))
            .count();
        assert_eq!(counted, by_name);
        let refit = m.refit_top.as_ref().expect("refit requested");
        assert_eq!(refit.k, 2.min(m.selected.len()));
        assert!(refit.test_r2 > 0.9);
    }

    #[test]
    fn split_and_report_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write_planted_csv(dir.path(), 80, 6, 3);
        let config = config_with(
            "[[methods]]\nkind = \"sis\"\nk = 4\n\n[[methods]]\nkind = \"two_stage\"\npi = 4\nl = 2\ns_hat = 2\n",
            Some((&csv, "y")),
        );
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let mut oa = opts(&out_a);
        oa.budget = 1_000_000;
        let mut ob = opts(&out_b);
        ob.budget = 1_000_000;
        let (_, pa) = run_fit(&config, 77, &oa).unwrap();
        let (_, pb) = run_fit(&config, 77, &ob).unwrap();
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
    }

    #[test]
    fn method_failures_are_reported_per_method() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write_planted_csv(dir.path(), 30, 6, 5);
        // pi + l exceeds the training rows, so hard thresholding cannot run;
        // the screening method still succeeds.
        let config = config_with(
            "[[methods]]\nkind = \"iht\"\npi = 30\nl = 30\ns_hat = 2\n\n[[methods]]\nkind = \"sis\"\nk = 3\n",
            Some((&csv, "y")),
        );
        let (report, _) = run_fit(&config, config.seed, &opts(dir.path())).unwrap();
        assert!(matches!(&report.methods[0], MethodEntry::Failed { name, .. } if name == "iht"));
        assert!(matches!(&report.methods[1], MethodEntry::Ok(_)));
    }

    #[test]
    fn missing_input_is_a_clear_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = config_with("[[methods]]\nkind = \"lasso\"\n", None);
        let err = format!(
            "{:#}",
            run_fit(&config, 0, &opts(dir.path())).unwrap_err()
        );
        assert!(err.contains("--input"), "{err}");
    }

    #[test]
    fn pure_noise_scores_near_zero_for_cv_tuned_lasso() {
        let dir = tempfile::tempdir().unwrap();
        let mut low = 0;
        let reps = 20;
        for rep in 0..reps {
            let mut rng = stream(rep, 35, 0);
            let mut text = String::from("x0,x1,x2,x3,x4,x5,x6,x7,x8,x9,y\n");
            for _ in 0..80 {
                let row: Vec<String> = (0..11)
                    .map(|_| format!("{}", rand_distr_shim::sample_normal(&mut rng)))
                    .collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            let csv = dir.path().join(format!("noise{rep}.csv"));
            fs::write(&csv, text).unwrap();
            let config = config_with("[[methods]]\nkind = \"lasso\"\n", Some((&csv, "y")));
            let (report, _) = run_fit(&config, rep, &opts(dir.path())).unwrap();
            let MethodEntry::Ok(m) = &report.methods[0] else {
                panic!("lasso failed");
            };
            if m.test_r2 <= 0.1 {
                low += 1;
            }
        }
        assert!(low >= reps - 2, "only {low}/{reps} runs stayed near zero");
    }
}
