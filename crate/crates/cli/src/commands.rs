//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use fairvote_core::estimators::{
    expected_margin_asymptotic_with, RegimeThresholds, DEFAULT_EXACT_BUDGET,
};
use fairvote_core::selftest::run_selftest;
use fairvote_core::weights::MarginOptions;
use fairvote_core::{
    classify_regime, compare_weight_rules, delta, delta_minimizing_weights, distribution_distance,
    expected_margin_exact, expected_margin_mc, margin_bound_check, optimal_weights, scaling_fit,
    simulate, solve_cj, verify_minimizer, BeliefDistribution, BeliefFamily, BoundMode, CouncilSpec,
    DeltaMode, MonteCarlo, ScalingMode, VotingModel, WeightVector,
};
use serde_json::{json, Value};

use crate::args::{
    BoundMethod, Cli, Command, Common, DeltaArgs, DeltaModeArg, DistributionArgs, MarginArgs,
    Method, ModelArgs, ModelKind, RegimeArgs, ScalingArgs, SimArgs, SolveCjArgs,
};
use crate::config::{build_council, parse_grid, ConfigFile, FamilyConfig, ModelConfig};
use crate::error::CliError;
use crate::output::{fmt_num, Cell, Format, Table};

const DEFAULT_TRIALS: u64 = 100_000;
const DEFAULT_GRID: &str = "256:16384:x2";
const DEFAULT_EPSILON: f64 = 0.1;

/// Settings shared by every subcommand after merging flags over the config file.
struct Context {
    cfg: ConfigFile,
    config_path: Option<PathBuf>,
    seed: u64,
    workers: usize,
    trials: u64,
    format: Format,
    out: Option<PathBuf>,
}

impl Context {
    fn resolve(common: &Common) -> Result<Self, CliError> {
        let (cfg, config_path) = match &common.config {
            Some(p) => {
                let cfg = ConfigFile::load(p)?;
                (cfg, Some(std::fs::canonicalize(p)?))
            }
            None => (ConfigFile::default(), None),
        };
        let workers = common.workers.or(cfg.workers).unwrap_or(1);
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        let trials = common.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        let format = match (common.format, cfg.format.as_deref()) {
            (Some(f), _) => f,
            (None, None) => Format::Csv,
            (None, Some("csv")) => Format::Csv,
            (None, Some("jsonl")) => Format::Jsonl,
            (None, Some(other)) => {
                return Err(CliError::Usage(format!(
                    "format must be csv or jsonl, received {other:?}"
                )))
            }
        };
        let out = match common
            .out
            .clone()
            .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        {
            Some(p) if p.is_relative() => Some(std::env::current_dir()?.join(p)),
            other => other,
        };
        Ok(Self {
            seed: common.seed.or(cfg.seed).unwrap_or(0),
            workers,
            trials,
            format,
            out,
            config_path,
            cfg,
        })
    }

    fn plan(&self) -> MonteCarlo {
        MonteCarlo {
            seed: self.seed,
            workers: self.workers,
        }
    }

    fn council(&self, quota: Option<f64>) -> Result<CouncilSpec, CliError> {
        let states = self.cfg.states.as_ref().ok_or_else(|| {
            CliError::Usage(
                "this command needs a council: set `states` in the --config file".into(),
            )
        })?;
        build_council(states, quota.or(self.cfg.quota))
    }

    fn grid(&self, flag: &Option<String>, default: Option<&str>) -> Result<Vec<u64>, CliError> {
        match (flag, &self.cfg.grid, default) {
            (Some(s), _, _) => parse_grid(s),
            (None, Some(g), _) => g.resolve(),
            (None, None, Some(d)) => parse_grid(d),
            (None, None, None) => Err(CliError::Usage("pass --N or --grid".into())),
        }
    }

    fn populations(&self, n: Option<u64>, grid: &Option<String>) -> Result<Vec<u64>, CliError> {
        match n.or(if grid.is_some() { None } else { self.cfg.n }) {
            Some(n) => Ok(vec![n]),
            None => self.grid(grid, None),
        }
    }

    fn resolved(&self, command: &str, params: Value) -> Value {
        json!({
            "command": command,
            "config": self.config_path.as_ref().map(|p| p.display().to_string()),
            "seed": self.seed,
            "workers": self.workers,
            "trials": self.trials,
            "format": self.format,
            "out": self.out.as_ref().map(|p| p.display().to_string()),
            "params": params,
        })
    }

    fn emit(&self, command: &str, table: &Table, params: Value) -> Result<(), CliError> {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "created_unix": created,
            "resolved": self.resolved(command, params),
        });
        match &self.out {
            Some(path) => {
                let mut w = BufWriter::new(File::create(path)?);
                table.write(self.format, &mut w)?;
                w.flush()?;
                let mut meta_path = path.clone().into_os_string();
                meta_path.push(".meta.json");
                let text = serde_json::to_string_pretty(&meta).expect("serializable metadata");
                std::fs::write(meta_path, text + "\n")?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut w = stdout.lock();
                table.write(self.format, &mut w)?;
                w.flush()?;
                eprintln!("{meta}");
            }
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::resolve(&cli.common)?;
    // Thread count affects speed only; results depend on the worker count.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build_global();
    let (name, table, params, failures) = match &cli.command {
        Command::Weights(a) => with_name("weights", weights(&ctx, a.quota)?),
        Command::Margin(a) => with_name("margin", margin(&ctx, a)?),
        Command::Delta(a) => with_name("delta", delta_cmd(&ctx, a)?),
        Command::Scaling(a) => with_name("scaling", scaling(&ctx, a)?),
        Command::SolveCj(a) => with_name("solve-cj", solve_cj_cmd(&ctx, a)?),
        Command::Regime(a) => with_name("regime", regime(&ctx, a)?),
        Command::Distribution(a) => with_name("distribution", distribution(&ctx, a)?),
        Command::CouncilSim(a) => with_name("council-sim", council_sim(&ctx, a)?),
        Command::CompareRules(a) => with_name("compare-rules", compare_rules(&ctx, a.quota)?),
        Command::Selftest => {
            let (table, failures) = selftest();
            ("selftest", table, json!({}), failures)
        }
    };
    ctx.emit(name, &table, params)?;
    if failures > 0 {
        return Err(CliError::Selftest(failures));
    }
    Ok(())
}

fn with_name(
    name: &'static str,
    (table, params): (Table, Value),
) -> (&'static str, Table, Value, usize) {
    (name, table, params, 0)
}

/// A model per population: fixed, or a Straffin belief family.
#[derive(Debug, Clone)]
enum Family {
    Constant(VotingModel),
    Straffin { c: f64, beta: f64 },
}

impl Family {
    fn at(&self, n: u64) -> fairvote_core::Result<VotingModel> {
        match self {
            Self::Constant(m) => Ok(m.clone()),
            Self::Straffin { c, beta } => {
                VotingModel::common_belief(BeliefFamily::Straffin { c: *c, beta: *beta }.at(n)?)
            }
        }
    }

    fn describe(&self) -> Value {
        match self {
            Self::Constant(m) => json!({ "model": m.to_string() }),
            Self::Straffin { c, beta } => json!({ "family": "straffin", "c": c, "beta": beta }),
        }
    }

    fn belief_family(&self) -> Result<BeliefFamily, CliError> {
        match self {
            Self::Straffin { c, beta } => Ok(BeliefFamily::straffin(*c, *beta)?),
            Self::Constant(VotingModel::CommonBelief(b)) => Ok(BeliefFamily::Fixed(b.clone())),
            Self::Constant(VotingModel::Independent) => {
                Ok(BeliefFamily::Fixed(BeliefDistribution::point_mass_zero()))
            }
            Self::Constant(m) => Err(CliError::Usage(format!(
                "this command needs a common-belief model, received {m}"
            ))),
        }
    }
}

fn resolve_family(args: &ModelArgs, cfg: &ConfigFile) -> Result<Family, CliError> {
    let straffin = |c: Option<f64>, beta: Option<f64>| -> Result<Family, CliError> {
        let (cfg_c, cfg_beta) = match &cfg.family {
            Some(FamilyConfig::Straffin { c, beta }) => (Some(*c), Some(*beta)),
            _ => (None, None),
        };
        let c = c.or(cfg_c).unwrap_or(1.0);
        let beta = beta.or(cfg_beta).unwrap_or(0.0);
        BeliefFamily::straffin(c, beta)?;
        Ok(Family::Straffin { c, beta })
    };
    let coupling = || {
        args.j.or(cfg.j).or(match &cfg.model {
            Some(ModelConfig::MeanField { j }) => Some(*j),
            _ => None,
        })
    };
    let belief = || -> Result<BeliefDistribution, CliError> {
        if let Some(a) = args.a {
            return Ok(BeliefDistribution::uniform(a)?);
        }
        match (&cfg.belief, &cfg.model) {
            (Some(b), _) => b.build(),
            (None, Some(ModelConfig::CommonBelief { belief })) => belief.build(),
            _ => Err(CliError::Usage(
                "common-belief model needs --a or a `belief` in the config".into(),
            )),
        }
    };
    match args.model {
        Some(ModelKind::Independent) => Ok(Family::Constant(VotingModel::Independent)),
        Some(ModelKind::Meanfield) => {
            let j =
                coupling().ok_or_else(|| CliError::Usage("meanfield model needs --J".into()))?;
            Ok(Family::Constant(VotingModel::mean_field(j)?))
        }
        Some(ModelKind::CommonBelief) => {
            Ok(Family::Constant(VotingModel::common_belief(belief()?)?))
        }
        Some(ModelKind::Straffin) => straffin(args.c, args.beta),
        None => {
            if let Some(m) = &cfg.model {
                return Ok(Family::Constant(m.build()?));
            }
            match &cfg.family {
                Some(FamilyConfig::Straffin { .. }) => return straffin(args.c, args.beta),
                Some(FamilyConfig::Fixed { belief }) => {
                    return Ok(Family::Constant(VotingModel::common_belief(
                        belief.build()?,
                    )?))
                }
                None => {}
            }
            if let Some(j) = args.j.or(cfg.j) {
                Ok(Family::Constant(VotingModel::mean_field(j)?))
            } else if args.a.is_some() || cfg.belief.is_some() {
                Ok(Family::Constant(VotingModel::common_belief(belief()?)?))
            } else if args.beta.is_some() || args.c.is_some() {
                straffin(args.c, args.beta)
            } else {
                Err(CliError::Usage(
                    "no model given: pass --model or set `model`/`family` in the config".into(),
                ))
            }
        }
    }
}

fn resolve_weights(
    ctx: &Context,
    council: &CouncilSpec,
    flag: &Option<String>,
) -> Result<(WeightVector, Value), CliError> {
    let spec = match (flag, &ctx.cfg.weights) {
        (Some(s), _) => s.clone(),
        (None, Some(list)) => {
            let w = WeightVector::new(list.clone())?;
            return Ok((w, json!(list)));
        }
        (None, None) => "optimal".into(),
    };
    let w = match spec.as_str() {
        "optimal" => optimal_weights(council)?.raw,
        "minimizing" => delta_minimizing_weights(council)?,
        list => {
            let values = list
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    CliError::Usage(format!(
                        "--weights must be optimal, minimizing or a comma-separated list of numbers, received {list:?}"
                    ))
                })?;
            WeightVector::new(values)?
        }
    };
    Ok((w, json!(spec)))
}

fn weights(ctx: &Context, quota: Option<f64>) -> Result<(Table, Value), CliError> {
    let council = ctx.council(quota)?;
    let options = MarginOptions {
        exact_budget: DEFAULT_EXACT_BUDGET,
        samples: ctx.trials,
        plan: ctx.plan(),
    };
    let ow = fairvote_core::weights::optimal_weights_with(&council, &options)?;
    let mut t = Table::new(&[
        "state",
        "population",
        "model",
        "expected_margin",
        "weight_raw",
        "weight_normalized",
    ]);
    for (i, s) in council.states().iter().enumerate() {
        t.push(vec![
            s.name.as_str().into(),
            s.population.into(),
            s.model.to_string().into(),
            ow.margins[i].value.into(),
            ow.raw.as_slice()[i].into(),
            ow.normalized.as_slice()[i].into(),
        ]);
    }
    Ok((
        t,
        json!({ "quota": quota.or(ctx.cfg.quota), "exact_budget": DEFAULT_EXACT_BUDGET }),
    ))
}

fn margin(ctx: &Context, a: &MarginArgs) -> Result<(Table, Value), CliError> {
    let family = resolve_family(&a.model, &ctx.cfg)?;
    let ns = ctx.populations(a.n, &a.grid)?;
    let epsilon = a.epsilon.or(ctx.cfg.epsilon).unwrap_or(DEFAULT_EPSILON);
    let thresholds = RegimeThresholds {
        epsilon,
        ..RegimeThresholds::default()
    };
    let mut t = Table::new(&["model", "N", "method", "value", "std_error", "samples"]);
    for &n in &ns {
        let model = family.at(n)?;
        let est = match a.method {
            Method::Exact => expected_margin_exact(&model, n)?,
            Method::Mc => expected_margin_mc(&model, n, ctx.trials, &ctx.plan())?,
            Method::Asymptotic => expected_margin_asymptotic_with(&model, n, &thresholds)?,
        };
        t.push(vec![
            model.to_string().into(),
            n.into(),
            est.method.to_string().into(),
            est.value.into(),
            est.std_error.into(),
            est.samples.into(),
        ]);
    }
    let mut params = family.describe();
    params["populations"] = json!(ns);
    params["method"] = json!(format!("{:?}", a.method).to_lowercase());
    params["epsilon"] = json!(epsilon);
    Ok((t, params))
}

fn delta_cmd(ctx: &Context, a: &DeltaArgs) -> Result<(Table, Value), CliError> {
    let council = ctx.council(a.council.quota)?;
    let (w, wspec) = resolve_weights(ctx, &council, &a.weights)?;
    let mode = match a.mode {
        DeltaModeArg::Exact => DeltaMode::Exact,
        DeltaModeArg::SemiExact => DeltaMode::SemiExact,
        DeltaModeArg::Mc => DeltaMode::MonteCarlo {
            trials: ctx.trials,
            plan: ctx.plan(),
        },
    };
    let d = delta(&council, &w, mode)?;
    let mut t = Table::new(&["kind", "state", "offset", "value", "std_error"]);
    t.push(vec![
        format!("delta_{}", d.method).into(),
        Cell::Empty,
        Cell::Empty,
        d.value.into(),
        d.std_error.into(),
    ]);
    if let Some(step) = a.verify_step {
        let r = verify_minimizer(&council, &w, step)?;
        let name = |i: usize| Cell::text(council.states()[i].name.as_str());
        for p in &r.perturbations {
            t.push(vec![
                format!("perturbation_{}", r.method).into(),
                name(p.state),
                p.offset.into(),
                p.delta.into(),
                0.0.into(),
            ]);
        }
        for (i, v) in r.vertices.iter().enumerate() {
            t.push(vec![
                "vertex".into(),
                name(i),
                Cell::Empty,
                (*v).into(),
                0.0.into(),
            ]);
        }
        t.push(vec![
            "violations".into(),
            Cell::Empty,
            Cell::Empty,
            (r.violations.len() as u64).into(),
            0.0.into(),
        ]);
        for v in &r.violations {
            eprintln!("violation: {v}");
        }
    }
    let params = json!({
        "weights": wspec,
        "resolved_weights": w.as_slice(),
        "mode": format!("{:?}", a.mode).to_lowercase(),
        "quota": a.council.quota.or(ctx.cfg.quota),
        "verify_step": a.verify_step,
    });
    Ok((t, params))
}

fn scaling(ctx: &Context, a: &ScalingArgs) -> Result<(Table, Value), CliError> {
    let family = resolve_family(&a.model, &ctx.cfg)?;
    let grid = ctx.grid(&a.grid, Some(DEFAULT_GRID))?;
    let mode = match a.method {
        Method::Exact => ScalingMode::Exact,
        Method::Mc => ScalingMode::MonteCarlo {
            samples: ctx.trials,
            plan: ctx.plan(),
        },
        Method::Asymptotic => ScalingMode::Asymptotic,
    };
    let fit = scaling_fit(|n| family.at(n), &grid, mode)?;
    let mut t = Table::new(&[
        "kind",
        "N",
        "weight",
        "exponent",
        "log_prefactor",
        "r_squared",
    ]);
    for &(n, w) in &fit.grid {
        t.push(vec![
            "point".into(),
            n.into(),
            w.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    t.push(vec![
        "fit".into(),
        Cell::Empty,
        Cell::Empty,
        fit.exponent.into(),
        fit.log_prefactor.into(),
        fit.r_squared.into(),
    ]);
    let mut params = family.describe();
    params["grid"] = json!(grid);
    params["method"] = json!(format!("{:?}", a.method).to_lowercase());
    Ok((t, params))
}

fn solve_cj_cmd(ctx: &Context, a: &SolveCjArgs) -> Result<(Table, Value), CliError> {
    let j =
        a.j.or(ctx.cfg.j)
            .ok_or_else(|| CliError::Usage("solve-cj needs --J".into()))?;
    let s = solve_cj(j)?;
    let mut t = Table::new(&["J", "C", "residual", "iterations"]);
    t.push(vec![
        s.coupling.into(),
        s.value.into(),
        s.residual.into(),
        u64::from(s.iterations).into(),
    ]);
    Ok((t, json!({ "J": j })))
}

fn regime(ctx: &Context, a: &RegimeArgs) -> Result<(Table, Value), CliError> {
    let family = resolve_family(&a.model, &ctx.cfg)?;
    let bf = family.belief_family()?;
    let grid = ctx.grid(&a.grid, Some(DEFAULT_GRID))?;
    let epsilon = a.epsilon.or(ctx.cfg.epsilon).unwrap_or(DEFAULT_EPSILON);
    let r = classify_regime(&bf, epsilon, &grid)?;
    let mut t = Table::new(&[
        "kind",
        "N",
        "mu_bar",
        "regime",
        "slope",
        "predicted_exponent",
    ]);
    for &(n, m) in &r.points {
        t.push(vec![
            "point".into(),
            n.into(),
            m.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    t.push(vec![
        "fit".into(),
        Cell::Empty,
        Cell::Empty,
        r.regime.to_string().into(),
        r.slope.into(),
        r.predicted_exponent.into(),
    ]);
    let mut params = family.describe();
    params["grid"] = json!(grid);
    params["epsilon"] = json!(epsilon);
    Ok((t, params))
}

fn distribution(ctx: &Context, a: &DistributionArgs) -> Result<(Table, Value), CliError> {
    let family = resolve_family(&a.model, &ctx.cfg)?;
    let ns = ctx.populations(a.n, &a.grid)?;
    let mode = match a.method {
        BoundMethod::Exact => BoundMode::Exact,
        BoundMethod::Mc => BoundMode::MonteCarlo {
            samples: ctx.trials,
            plan: ctx.plan(),
        },
    };
    let mut t = Table::new(&[
        "N",
        "mu_bar",
        "mean_abs_fraction",
        "std_error",
        "gap",
        "coupling_distance",
        "wasserstein",
        "bound",
        "within_bounds",
    ]);
    for &n in &ns {
        let belief = family.belief_family()?.at(n)?;
        let r = margin_bound_check(&belief, n, mode)?;
        let w1 = distribution_distance(&belief, n)?;
        let ok = r.gap_within_bound && r.coupling_within_bound && w1 <= r.bound;
        t.push(vec![
            n.into(),
            r.mu_bar.into(),
            r.mean_abs_fraction.into(),
            r.std_error.into(),
            r.gap.into(),
            r.coupling_distance.into(),
            w1.into(),
            r.bound.into(),
            ok.into(),
        ]);
    }
    let mut params = family.describe();
    params["populations"] = json!(ns);
    params["method"] = json!(format!("{:?}", a.method).to_lowercase());
    Ok((t, params))
}

fn council_sim(ctx: &Context, a: &SimArgs) -> Result<(Table, Value), CliError> {
    let council = ctx.council(a.council.quota)?;
    let (w, wspec) = resolve_weights(ctx, &council, &a.weights)?;
    let r = simulate(&council, &w, ctx.trials, &ctx.plan())?;
    let mut t = Table::new(&["kind", "name", "value", "std_error"]);
    let row = |k: &str, name: Cell, v: f64, se: Cell| vec![Cell::text(k), name, v.into(), se];
    t.push(row(
        "delta",
        Cell::Empty,
        r.delta.value,
        r.delta.std_error.into(),
    ));
    t.push(row(
        "disagreement_rate",
        Cell::Empty,
        r.disagreement_rate,
        r.disagreement_std_error.into(),
    ));
    t.push(row(
        "mean_popular_margin",
        Cell::Empty,
        r.mean_popular_margin,
        Cell::Empty,
    ));
    t.push(vec![
        "trials".into(),
        Cell::Empty,
        r.trials.into(),
        Cell::Empty,
    ]);
    for (i, s) in council.states().iter().enumerate() {
        let name = || Cell::text(s.name.as_str());
        t.push(row("weight", name(), w.as_slice()[i], Cell::Empty));
        t.push(row(
            "yes_rate",
            name(),
            r.per_state_yes_rates[i],
            Cell::Empty,
        ));
        t.push(row(
            "delegate_yes_rate",
            name(),
            r.delegate_yes_rates[i],
            Cell::Empty,
        ));
    }
    let params = json!({
        "weights": wspec,
        "resolved_weights": w.as_slice(),
        "quota": a.council.quota.or(ctx.cfg.quota),
    });
    Ok((t, params))
}

fn compare_rules(ctx: &Context, quota: Option<f64>) -> Result<(Table, Value), CliError> {
    let council = ctx.council(quota)?;
    let rows = compare_weight_rules(&council, ctx.trials, &ctx.plan())?;
    let mut t = Table::new(&[
        "rule",
        "scale",
        "weights",
        "delta_semi_exact",
        "delta_mc",
        "delta_mc_std_error",
        "disagreement_rate",
        "disagreement_std_error",
    ]);
    for r in &rows {
        let ws: Vec<String> = r.weights.as_slice().iter().map(|w| fmt_num(*w)).collect();
        t.push(vec![
            r.rule.to_string().into(),
            r.scale.into(),
            ws.join(";").into(),
            r.delta_semi_exact.into(),
            r.simulation.delta.value.into(),
            r.simulation.delta.std_error.into(),
            r.simulation.disagreement_rate.into(),
            r.simulation.disagreement_std_error.into(),
        ]);
    }
    Ok((t, json!({ "quota": quota.or(ctx.cfg.quota) })))
}

fn selftest() -> (Table, usize) {
    let checks = run_selftest();
    let mut t = Table::new(&["check", "passed", "detail"]);
    let failures = checks.iter().filter(|c| !c.passed).count();
    for c in checks {
        t.push(vec![c.name.into(), c.passed.into(), c.detail.into()]);
    }
    (t, failures)
}
