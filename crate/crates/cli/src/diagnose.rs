//! Design diagnostics: given a dataset and a true (or proxy) coefficient
//! vector, reports the separation margin over false supports, the
//! eigenvalue floor of the conditional covariance, the implied coefficient
//! floor, the single-swap margin at the weakest signal, the irrepresentable
//! value, and the restricted condition number. Each quantity is computed
//! independently, so one failure (for example a rank-deficient design)
//! leaves the rest of the report intact.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use subsel::core::{Dataset, SparseVector, Standardize};
use subsel::diagnostics::{
    beta_min_threshold, irrepresentable, kappa, lambda_m, tau_star, tau_sup,
};
use subsel::linalg::ols_fit;
use subsel::rng::{domain, stream};
use subsel::simgen::{corner_case_design, gen_beta, sample_dataset};

use crate::config::ExperimentConfig;
use crate::ingest::load_csv;

/// Flags resolved by the command-line layer.
#[derive(Debug, Clone)]
pub struct DiagnoseOpts {
    /// Use the bundled 3x4 adversarial fixture with this interpolation
    /// parameter instead of a config-provided data source.
    pub corner: Option<f64>,
    /// True support (feature indices) when the source is a CSV.
    pub truth: Option<Vec<usize>>,
    /// Standardization for CSV input (generated data keeps its model scale).
    pub standardize: Option<Standardize>,
    pub out_dir: PathBuf,
    pub budget: u64,
}

/// A quantity that either computed or failed with a message.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Section<T: Serialize> {
    Ok(T),
    Failed { error: String },
}

impl<T: Serialize> Section<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok(v) => Some(v),
            Section::Failed { .. } => None,
        }
    }
}

fn section<T: Serialize>(result: Result<T>) -> Section<T> {
    match result {
        Ok(v) => Section::Ok(v),
        Err(e) => Section::Failed {
            error: format!("{e:#}"),
        },
    }
}

#[derive(Debug, Serialize)]
pub struct TauRow {
    pub delta: f64,
    pub value: f64,
    pub exact: bool,
    pub achieving_set: Vec<usize>,
    pub subsets_examined: u64,
}

#[derive(Debug, Serialize)]
pub struct LambdaMin {
    pub value: f64,
    pub exact: bool,
}

#[derive(Debug, Serialize)]
pub struct CoefficientFloor {
    pub threshold: f64,
    pub sigma: f64,
    /// Where sigma came from: `config`, `known_zero`, or `estimated`.
    pub sigma_source: &'static str,
    pub xi: f64,
    pub eta: f64,
    pub min_abs_coefficient: f64,
    /// Whether the weakest coefficient clears the threshold.
    pub satisfied: bool,
}

#[derive(Debug, Serialize)]
pub struct SwapMargin {
    /// Index of the weakest true coefficient, where the margin is tightest.
    pub j0: usize,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct Irrepresentable {
    pub value: f64,
    /// True when the value is below 1, the consistency condition for the
    /// convex relaxation.
    pub satisfied: bool,
}

#[derive(Debug, Serialize)]
pub struct ConditionNumber {
    pub pi: usize,
    pub l: usize,
    pub s: usize,
    pub kappa: f64,
    pub l_max: f64,
    pub alpha_min: f64,
    pub exact: bool,
}

#[derive(Debug, Serialize)]
pub struct TruthInfo {
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// True when the coefficients are an ordinary-refit proxy rather than
    /// known model values.
    pub proxy: bool,
}

#[derive(Debug, Serialize)]
pub struct DiagnoseReport {
    pub command: &'static str,
    pub seed: u64,
    pub budget: u64,
    pub source: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub s_hat: usize,
    pub truth: TruthInfo,
    pub separation_margin: Section<Vec<TauRow>>,
    pub lambda_min_over_false_sets: Section<LambdaMin>,
    pub coefficient_floor: Section<CoefficientFloor>,
    pub single_swap_margin: Section<SwapMargin>,
    pub irrepresentable: Section<Irrepresentable>,
    pub restricted_condition_number: Section<ConditionNumber>,
}

/// Resolved data source plus what is known about the noise level.
struct Resolved {
    data: Dataset,
    beta: SparseVector,
    sigma: Option<f64>,
    sigma_source: &'static str,
    source: serde_json::Value,
    proxy: bool,
}

pub fn run_diagnose(
    config: Option<&ExperimentConfig>,
    seed: u64,
    opts: &DiagnoseOpts,
) -> Result<(DiagnoseReport, PathBuf)> {
    let table = config
        .and_then(|c| c.diagnose.clone())
        .unwrap_or_default();
    let resolved = resolve_source(config, seed, opts)?;
    let Resolved {
        data,
        beta,
        sigma,
        sigma_source,
        source,
        proxy,
    } = resolved;

    let n = data.n();
    let p = data.p();
    let s = beta.support().len();
    let s_hat = table.s_hat.unwrap_or(s);

    let separation = section(
        table
            .deltas
            .iter()
            .map(|&delta| {
                let rep = tau_star(&data, &beta, s_hat, delta, opts.budget, seed)?;
                Ok(TauRow {
                    delta,
                    value: rep.value,
                    exact: rep.exact,
                    achieving_set: rep.achieving_set.indices().to_vec(),
                    subsets_examined: rep.subsets_examined,
                })
            })
            .collect::<Result<Vec<_>>>(),
    );

    let lambda = lambda_m(&data, beta.support(), opts.budget, seed)
        .map(|(value, exact)| LambdaMin { value, exact })
        .map_err(anyhow::Error::from);

    let min_abs = beta
        .values()
        .iter()
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);

    let floor = section(match (&lambda, sigma) {
        (Err(e), _) => Err(anyhow::anyhow!("needs the eigenvalue floor, which failed: {e:#}")),
        (_, None) => Err(anyhow::anyhow!(
            "noise level unavailable (no error degrees of freedom to estimate it)"
        )),
        (Ok(lam), Some(sigma)) => {
            beta_min_threshold(lam.value, n, p, sigma, table.xi, table.eta)
                .map(|threshold| CoefficientFloor {
                    threshold,
                    sigma,
                    sigma_source,
                    xi: table.xi,
                    eta: table.eta,
                    min_abs_coefficient: min_abs,
                    satisfied: min_abs >= threshold,
                })
                .map_err(anyhow::Error::from)
        }
    });

    let j0 = {
        let values = beta.values();
        let indices = beta.support().indices();
        let mut best = 0usize;
        for slot in 1..values.len() {
            if values[slot].abs() < values[best].abs() {
                best = slot;
            }
        }
        indices.get(best).copied()
    };
    let swap = section(match j0 {
        None => Err(anyhow::anyhow!("true support is empty")),
        Some(j0) => tau_sup(&data, &beta, j0)
            .map(|value| SwapMargin { j0, value })
            .map_err(anyhow::Error::from),
    });

    let signs: Vec<f64> = beta.values().iter().map(|v| v.signum()).collect();
    let irr = section(
        irrepresentable(&data, beta.support(), &signs)
            .map(|value| Irrepresentable {
                value,
                satisfied: value < 1.0,
            })
            .map_err(anyhow::Error::from),
    );

    let kappa_pi = table.pi.unwrap_or((2 * s).min(p));
    let kappa_l = table.l.unwrap_or(s.min(p));
    let cond = section(
        kappa(&data, kappa_pi, kappa_l, s, opts.budget, seed)
            .map(|rep| ConditionNumber {
                pi: kappa_pi,
                l: kappa_l,
                s,
                kappa: rep.kappa,
                l_max: rep.l_max,
                alpha_min: rep.alpha_min,
                exact: rep.exact,
            })
            .map_err(anyhow::Error::from),
    );

    let report = DiagnoseReport {
        command: "diagnose",
        seed,
        budget: opts.budget,
        source,
        config: config.map(|c| {
            let mut resolved = c.clone();
            resolved.seed = seed;
            resolved
        }),
        n,
        p,
        s,
        s_hat,
        truth: TruthInfo {
            support: beta.support().indices().to_vec(),
            coefficients: beta.values().to_vec(),
            proxy,
        },
        separation_margin: separation,
        lambda_min_over_false_sets: section(lambda),
        coefficient_floor: floor,
        single_swap_margin: swap,
        irrepresentable: irr,
        restricted_condition_number: cond,
    };

    fs::create_dir_all(&opts.out_dir)
        .with_context(|| format!("could not create {}", opts.out_dir.display()))?;
    let out_path = opts.out_dir.join("diagnose.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&out_path, text)
        .with_context(|| format!("could not write {}", out_path.display()))?;
    Ok((report, out_path))
}

fn resolve_source(
    config: Option<&ExperimentConfig>,
    seed: u64,
    opts: &DiagnoseOpts,
) -> Result<Resolved> {
    if let Some(eta) = opts.corner {
        if opts.truth.is_some() {
            bail!("the corner fixture defines its own truth; drop --truth");
        }
        if opts.standardize.is_some() {
            bail!("the corner fixture uses its designed scale; drop --standardize");
        }
        let (data, beta) = corner_case_design(eta)?;
        return Ok(Resolved {
            data,
            beta,
            sigma: Some(0.0),
            sigma_source: "known_zero",
            source: json!({ "kind": "corner", "eta": eta }),
            proxy: false,
        });
    }

    let config = config.context("diagnose needs --config or --corner")?;
    if let Some(table) = &config.sim {
        if opts.standardize.is_some() {
            bail!("diagnose on generated data uses the model scale; --standardize applies to CSV input only");
        }
        if opts.truth.is_some() {
            bail!("generated data defines its own truth; drop --truth");
        }
        let sim = table.resolve(seed)?;
        let beta = gen_beta(&sim, &mut stream(seed, domain::BETA, 0))?;
        let data = sample_dataset(&sim, &beta, &mut stream(seed, domain::DESIGN, 0))?;
        return Ok(Resolved {
            data,
            beta,
            sigma: Some(sim.sigma),
            sigma_source: "config",
            source: json!({ "kind": "sim", "resolved": sim, "n": sim.n() }),
            proxy: false,
        });
    }
    if let Some(input) = &config.input {
        let truth = opts
            .truth
            .as_ref()
            .context("diagnose on a CSV needs --truth with the true feature indices")?;
        if truth.is_empty() {
            bail!("--truth must list at least one feature index");
        }
        let ingest = load_csv(&input.path, &input.response)?;
        let mut data = ingest.data;
        if let Some(mode) = opts.standardize {
            data = data.standardized(mode)?;
        }
        let support = subsel::core::SupportSet::new(truth.iter().copied());
        support.check_bounds(data.p())?;
        let fit = ols_fit(&data, &support)?;
        let beta = fit.sparse();
        let s = support.len();
        let sigma = (data.n() > s).then(|| (fit.rss / (data.n() - s) as f64).sqrt());
        return Ok(Resolved {
            data,
            beta,
            sigma,
            sigma_source: "estimated",
            source: json!({
                "kind": "csv",
                "path": input.path.display().to_string(),
                "response": input.response,
                "rows_used": ingest.rows_used,
                "rows_dropped": ingest.rows_dropped,
            }),
            proxy: true,
        });
    }
    bail!("diagnose needs a [sim] or [input] section in the config, or --corner");
}
