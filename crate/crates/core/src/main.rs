use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use alien_concepts::baselines::FeatureTable;
use alien_concepts::fitting::{synthesize, FitParams, FitReport, ResponseData};
use alien_concepts::geometry::{Catalog, PrimId, Universe};
use alien_concepts::harness::{
    assets_dir, bayesian_report, compare, fit_bayesian, fit_string_gcm, gcm_report, infer_trial,
    load_catalog, load_pool, load_trial, pool_path, prepare_trial, render_figure, render_parts,
    resolve_figure, FigureSpec, HarnessError, ModelKind, PredictionReport, RunConfig, SvgStyle,
    Trial, GCM_FIT_NAMES,
};
use alien_concepts::inference::count_programs;

#[derive(Parser)]
#[command(
    name = "alien",
    version,
    about = "Learn alien-figure concepts by Bayesian program induction"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Run seed (overrides the configuration file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    chains: Option<usize>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long = "depth-cap", global = true)]
    depth_cap: Option<u32>,
}

#[derive(Args)]
struct TrialArgs {
    /// Trial files; all bundled trials when omitted.
    trials: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Universe statistics for each trial, or for a list of primitives.
    Enumerate {
        #[command(flatten)]
        trials: TrialArgs,
        /// Comma-separated catalog ids to use instead of trial files.
        #[arg(long, value_delimiter = ',')]
        primitives: Vec<String>,
    },
    /// Draw programs from the grammar, one per line with its log prior.
    Sample {
        #[arg(short = 'n', long, default_value_t = 10)]
        count: usize,
    },
    /// Sample hypothesis pools for trials.
    Infer {
        #[command(flatten)]
        trials: TrialArgs,
        #[arg(long, default_value = "pools")]
        out_dir: PathBuf,
    },
    /// Write a prediction report.
    Predict {
        #[command(flatten)]
        trials: TrialArgs,
        /// bayesian, string-gcm or feature-gcm.
        #[arg(long, default_value = "bayesian")]
        model: ModelKind,
        #[arg(long, default_value = "pools")]
        pools: PathBuf,
        /// Feature file for the feature GCM.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Take parameters from a fit report instead of the configuration.
        #[arg(long)]
        params_from: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit model parameters to response counts.
    Fit {
        #[command(flatten)]
        trials: TrialArgs,
        #[arg(long)]
        responses: PathBuf,
        /// bayesian or string-gcm.
        #[arg(long, default_value = "bayesian")]
        model: ModelKind,
        #[arg(long, default_value = "pools")]
        pools: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlate a prediction report with response counts.
    Compare {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write scatter-plot rows as CSV.
        #[arg(long)]
        scatter: Option<PathBuf>,
        /// Print the per-trial table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Draw a figure as SVG.
    Render {
        /// Trial whose primitives and items to use.
        trial: Option<PathBuf>,
        /// Test item id in the trial.
        #[arg(long)]
        item: Option<String>,
        /// Training example index in the trial.
        #[arg(long)]
        example: Option<usize>,
        /// Program denoting a single figure, over the trial's primitives.
        #[arg(long)]
        program: Option<String>,
        /// A catalog primitive on its own.
        #[arg(long)]
        primitive: Option<String>,
        #[arg(long)]
        color: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate responses from the Bayesian model.
    Synthesize {
        #[command(flatten)]
        trials: TrialArgs,
        #[arg(long, default_value = "pools")]
        pools: PathBuf,
        /// Participants per trial (configuration value when omitted).
        #[arg(long)]
        participants: Option<u64>,
        #[arg(long)]
        theta_orient: Option<f64>,
        #[arg(long)]
        theta_config: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            std::fs::write(p, text).map_err(|e| io_err(p, e))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::Io(e.to_string())),
    }
}

fn load_config(g: &GlobalOpts) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(c) = g.chains {
        cfg.sampler.chains = c;
    }
    if let Some(s) = g.steps {
        cfg.sampler.steps = s;
    }
    if let Some(d) = g.depth_cap {
        cfg.grammar.depth_cap = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_trials(
    args: &TrialArgs,
    catalog: &Catalog,
    cfg: &RunConfig,
) -> Result<Vec<Trial>, HarnessError> {
    let strict = !cfg.relax_test_count;
    let paths = if args.trials.is_empty() {
        alien_concepts::harness::bundled_trial_paths(&assets_dir())?
    } else {
        args.trials.clone()
    };
    paths
        .iter()
        .map(|p| load_trial(p, catalog, strict))
        .collect()
}

fn load_responses(path: &Path) -> Result<ResponseData, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingData(path.display().to_string()));
    }
    Ok(ResponseData::load(path)?)
}

fn load_fit_report(path: &Path) -> Result<FitReport, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let cfg = load_config(&cli.global)?;
    let assets = assets_dir();
    let catalog = load_catalog(&assets)?;
    match cli.command {
        Command::Enumerate { trials, primitives } => {
            let programs = count_programs(&cfg.grammar.grammar());
            let programs = if programs == u128::MAX {
                json!(null)
            } else {
                json!(programs.to_string())
            };
            let describe = |id: Option<&str>, prims: Vec<String>, u: &Universe| {
                json!({
                    "trial_id": id,
                    "primitives": prims,
                    "max_parts": u.max_parts(),
                    "figures": u.len(),
                    "figures_by_parts": u.count_by_parts(),
                })
            };
            let mut rows = Vec::new();
            if primitives.is_empty() {
                for t in load_trials(&trials, &catalog, &cfg)? {
                    rows.push(describe(
                        Some(t.id()),
                        t.spec.primitives.clone(),
                        &t.universe,
                    ));
                }
            } else {
                let prims = catalog.select(&primitives)?;
                let u = Universe::build(&prims, alien_concepts::geometry::MAX_PARTS)?;
                rows.push(describe(None, primitives.clone(), &u));
            }
            let out = json!({
                "depth_cap": cfg.grammar.depth_cap,
                "programs_under_cap": programs,
                "universes": rows,
            });
            emit(None, &to_json(&out))
        }
        Command::Sample { count } => {
            let g = cfg.grammar.grammar();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut text = String::new();
            for _ in 0..count {
                let p = g.sample_program(&mut rng)?;
                text.push_str(&format!("{:.6}\t{p}\n", g.log_prior(&p)?));
            }
            emit(None, &text)
        }
        Command::Infer { trials, out_dir } => {
            let trials = load_trials(&trials, &catalog, &cfg)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
            let g = cfg.grammar.grammar();
            let mut text = String::new();
            for t in &trials {
                let pool = infer_trial(t, &g, &cfg.sampler, cfg.seed)?;
                let path = pool_path(&out_dir, t.id());
                pool.save(&path).map_err(|e| io_err(&path, e))?;
                text.push_str(&format!("{}\t{}\t{}\n", t.id(), pool.len(), path.display()));
            }
            emit(None, &text)
        }
        Command::Predict {
            trials,
            model,
            pools,
            features,
            params_from,
            out,
        } => {
            let trials = load_trials(&trials, &catalog, &cfg)?;
            let fitted = params_from.as_deref().map(load_fit_report).transpose()?;
            let report = match model {
                ModelKind::Bayesian => {
                    let params = match &fitted {
                        Some(r) => r.fit_params().ok_or_else(|| {
                            HarnessError::Config(
                                "fit report does not hold Bayesian parameters".into(),
                            )
                        })?,
                        None => cfg.params,
                    };
                    params.validate()?;
                    let prepared = trials
                        .iter()
                        .map(|t| prepare_trial(t, &load_pool(&pools, t)?))
                        .collect::<Result<Vec<_>, _>>()?;
                    bayesian_report(&trials, &prepared, &params)
                }
                ModelKind::StringGcm | ModelKind::FeatureGcm => {
                    let mut gcm = cfg.gcm;
                    if let Some(r) = &fitted {
                        if r.names.iter().map(String::as_str).ne(GCM_FIT_NAMES) {
                            return Err(HarnessError::Config(
                                "fit report does not hold GCM parameters".into(),
                            ));
                        }
                        gcm.weights.w_parts = 1.0;
                        gcm.weights.w_config = r.map[0];
                        gcm.weights.w_orient = r.map[1];
                        gcm.weights.w_scale = r.map[2];
                        gcm.alpha = r.map[3];
                        gcm.beta = r.map[4];
                    }
                    let table = match (model, &features) {
                        (ModelKind::FeatureGcm, Some(p)) => Some(FeatureTable::load(p)?),
                        (ModelKind::FeatureGcm, None) => {
                            return Err(HarnessError::Config("feature-gcm needs --features".into()))
                        }
                        _ => None,
                    };
                    gcm_report(&trials, table.as_ref(), &gcm)?
                }
            };
            emit(out.as_deref(), &report.to_json())
        }
        Command::Fit {
            trials,
            responses,
            model,
            pools,
            out,
        } => {
            let data = load_responses(&responses)?;
            let trials = load_trials(&trials, &catalog, &cfg)?;
            let fit_cfg = alien_concepts::fitting::FitConfig {
                seed: cfg.seed,
                ..cfg.fit
            };
            let (_, report) = match model {
                ModelKind::Bayesian => {
                    let prepared = trials
                        .iter()
                        .map(|t| prepare_trial(t, &load_pool(&pools, t)?))
                        .collect::<Result<Vec<_>, _>>()?;
                    fit_bayesian(prepared, &data, &fit_cfg)?
                }
                ModelKind::StringGcm => fit_string_gcm(&trials, &data, &fit_cfg)?,
                ModelKind::FeatureGcm => {
                    return Err(HarnessError::Config(
                        "fitting is available for bayesian and string-gcm".into(),
                    ))
                }
            };
            emit(out.as_deref(), &to_json(&report))
        }
        Command::Compare {
            report,
            responses,
            out,
            scatter,
            table,
        } => {
            let text = std::fs::read_to_string(&report).map_err(|e| io_err(&report, e))?;
            let predictions = PredictionReport::from_json(&text)?;
            let data = load_responses(&responses)?;
            let cmp = compare(&predictions, &data)?;
            if let Some(p) = &scatter {
                emit(Some(p), &cmp.scatter_csv())?;
            }
            let body = if table {
                cmp.summary_table()
            } else {
                cmp.to_json()
            };
            emit(out.as_deref(), &body)
        }
        Command::Render {
            trial,
            item,
            example,
            program,
            primitive,
            color,
            out,
        } => {
            let style = SvgStyle {
                color_parts: color,
                ..SvgStyle::default()
            };
            let svg = if let Some(name) = primitive {
                let prim = catalog.get(&name)?;
                render_parts(&[(PrimId(0), prim.shape.cells().to_vec())], &style)
            } else {
                let path = trial.ok_or_else(|| {
                    HarnessError::Config("render needs a trial or --primitive".into())
                })?;
                let mut relaxed = cfg.clone();
                relaxed.relax_test_count = true;
                let t =
                    load_trials(&TrialArgs { trials: vec![path] }, &catalog, &relaxed)?.remove(0);
                let id = match (item, example, program) {
                    (Some(item), None, None) => t
                        .spec
                        .test
                        .iter()
                        .position(|x| x.id == item)
                        .map(|i| t.test[i])
                        .ok_or_else(|| {
                            HarnessError::Config(format!("no test item {item:?} in {}", t.id()))
                        })?,
                    (None, Some(i), None) => *t.training.get(i).ok_or_else(|| {
                        HarnessError::Config(format!("no training example {i} in {}", t.id()))
                    })?,
                    (None, None, Some(text)) => {
                        resolve_figure(&t.universe, &FigureSpec::Program(text), "program")?
                    }
                    _ => {
                        return Err(HarnessError::Config(
                            "give exactly one of --item, --example or --program".into(),
                        ))
                    }
                };
                render_figure(&t.universe, id, &style)
            };
            emit(out.as_deref(), &svg)
        }
        Command::Synthesize {
            trials,
            pools,
            participants,
            theta_orient,
            theta_config,
            alpha,
            beta,
            out,
        } => {
            let trials = load_trials(&trials, &catalog, &cfg)?;
            let params = FitParams {
                theta_orient: theta_orient.unwrap_or(cfg.params.theta_orient),
                theta_config: theta_config.unwrap_or(cfg.params.theta_config),
                alpha: alpha.unwrap_or(cfg.params.alpha),
                beta: beta.unwrap_or(cfg.params.beta),
            };
            let prepared = trials
                .iter()
                .map(|t| prepare_trial(t, &load_pool(&pools, t)?))
                .collect::<Result<Vec<_>, _>>()?;
            let data = synthesize(
                &params,
                &prepared,
                participants.unwrap_or(cfg.participants),
                cfg.seed,
            )?;
            emit(out.as_deref(), &data.to_csv())
        }
    }
}
