//! `woe`: mine weight-of-evidence knowledge bases and score cases against them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use woe_core::baseline::{evaluate_detailed, render_comparison, LogisticInputs, LogisticModel};
use woe_core::evidence::{ProbabilityMode, DEFAULT_SMOOTHING, DEFAULT_Z_CRIT};
use woe_core::fuzzy::{alpha_profile, hypothesis_labels, optimal_alpha, FuzzyEvent};
use woe_core::inference::{infer, render_report, InferOptions};
use woe_core::miner::{mine_with, MineOptions, DEFAULT_ALPHA_STEP, DEFAULT_MIN_SUPPORT};
use woe_core::symptom::DEFAULT_MAX_GROUP_SIZE;
use woe_core::{Dataset, Hypothesis, KnowledgeBase, MiningConfig, Schema, ScoreWeights};

#[derive(Parser)]
#[command(
    name = "woe",
    version,
    about = "Weight-of-evidence diagnosis from case data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine significant symptom groups into a knowledge base.
    Mine(MineArgs),
    /// Score cases against a knowledge base and print the evidence ledger.
    Predict(PredictArgs),
    /// Compare the knowledge base with the logistic baseline on labeled cases.
    Evaluate(EvaluateArgs),
    /// Show the strongest rules or the α profile of a fuzzy label.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "surgical_lesion")]
    hypothesis: Hypothesis,
    #[arg(long, default_value_t = DEFAULT_MAX_GROUP_SIZE)]
    max_size: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_SUPPORT)]
    min_support: u64,
    #[arg(long, default_value_t = DEFAULT_Z_CRIT)]
    z_crit: f64,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    smoothing: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA_STEP)]
    alpha_step: f64,
    /// Selection score weights `ws,ww,we` stored with the knowledge base.
    #[arg(long, default_value = "1,1,1")]
    score_weights: ScoreWeights,
    /// Prior prevalence of the hypothesis; defaults to the training prevalence.
    #[arg(long)]
    prior: Option<f64>,
    /// Scoring threads. The output does not depend on this.
    #[arg(long, default_value_t = 1)]
    shards: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KbArgs {
    #[arg(long)]
    kb: PathBuf,
    /// Schema of the case file; must match the knowledge base. Defaults to
    /// the schema embedded in the knowledge base.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long)]
    case: PathBuf,
    /// Only report the case with this id.
    #[arg(long)]
    id: Option<String>,
    /// Read the posterior as odds, `p = L/(1+L)`.
    #[arg(long)]
    compat_odds: bool,
    #[arg(long)]
    score_weights: Option<ScoreWeights>,
    /// Emit reports as JSON; the run header goes to stderr.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Write per-case probabilities and calls as CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, default_value_t = 10, conflicts_with = "fuzzy")]
    top: usize,
    /// Fuzzy label as `ATTRIBUTE:LABEL`; needs `--data`.
    #[arg(long, requires = "data")]
    fuzzy: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_schema(path: &Path) -> Result<Schema> {
    Schema::parse(&read(path)?).with_context(|| format!("parsing schema {}", path.display()))
}

fn load_data(path: &Path, schema: &Schema) -> Result<Dataset> {
    Dataset::parse_csv(&read(path)?, schema)
        .with_context(|| format!("parsing cases {}", path.display()))
}

fn load_kb(args: &KbArgs) -> Result<(KnowledgeBase, Schema)> {
    let kb = KnowledgeBase::load(&read(&args.kb)?)
        .with_context(|| format!("loading knowledge base {}", args.kb.display()))?;
    let schema = match &args.schema {
        Some(path) => {
            let schema = load_schema(path)?;
            kb.check_schema(&schema)?;
            schema
        }
        None => kb.schema().clone(),
    };
    Ok((kb, schema))
}

/// Prints the effective configuration so any run can be repeated.
fn header(out: &mut dyn std::io::Write, command: &str, settings: serde_json::Value) -> Result<()> {
    writeln!(out, "# woe {} {command}", env!("CARGO_PKG_VERSION"))?;
    if let serde_json::Value::Object(map) = settings {
        for (key, value) in map {
            let value = match value {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            writeln!(out, "# {key}: {value}")?;
        }
    }
    Ok(())
}

fn run_mine(args: MineArgs) -> Result<()> {
    let config = MiningConfig {
        max_size: args.max_size,
        min_support: args.min_support,
        z_crit: args.z_crit,
        smoothing: args.smoothing,
        alpha_step: args.alpha_step,
        score_weights: args.score_weights,
    };
    config.validate()?;
    header(
        &mut std::io::stdout(),
        "mine",
        json!({
            "schema": args.schema.display().to_string(),
            "data": args.data.display().to_string(),
            "hypothesis": args.hypothesis.to_string(),
            "config": config,
            "prior": args.prior,
            "shards": args.shards,
            "out": args.out.display().to_string(),
        }),
    )?;

    let schema = load_schema(&args.schema)?;
    let data = load_data(&args.data, &schema)?;
    let options = MineOptions {
        prior_prevalence: args.prior,
        shards: args.shards,
    };
    let kb = mine_with(&data, args.hypothesis, &config, &options)?;
    fs::write(&args.out, kb.save()).with_context(|| format!("writing {}", args.out.display()))?;

    let (pos, neg) = data.class_counts(args.hypothesis);
    println!("cases: {} ({pos} positive, {neg} negative)", data.len());
    for warning in kb.warnings() {
        println!("warning: {warning}");
    }
    println!("rules: {}", kb.rules().len());
    println!(
        "prior: p = {:.4}, log odds = {:.3}",
        kb.prior().prevalence,
        kb.prior().log_odds
    );
    print_top(&kb, 10);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn print_top(kb: &KnowledgeBase, n: usize) {
    let top = kb.top_rules(n);
    if top.is_empty() {
        return;
    }
    println!("top {} rules by |W|:", top.len());
    for rule in top {
        println!(
            "  {:>8.3}  se {:.3}  z {:>7.2}  n {:>5}  {}",
            rule.estimate.w,
            rule.estimate.se,
            rule.estimate.z,
            rule.table.support(),
            rule.group
        );
    }
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let (kb, schema) = load_kb(&args.kb)?;
    let mode = if args.compat_odds {
        ProbabilityMode::OddsCompat
    } else {
        ProbabilityMode::Canonical
    };
    let options = InferOptions {
        mode,
        score_weights: args.score_weights,
    };
    let settings = json!({
        "kb": args.kb.kb.display().to_string(),
        "case": args.case.display().to_string(),
        "hypothesis": kb.hypothesis().to_string(),
        "schema_digest": kb.schema_digest(),
        "mode": mode.to_string(),
        "score_weights": options.score_weights.unwrap_or(kb.config().score_weights),
    });
    if args.json {
        header(&mut std::io::stderr(), "predict", settings)?;
    } else {
        header(&mut std::io::stdout(), "predict", settings)?;
    }

    let data = load_data(&args.case, &schema)?;
    let cases: Vec<_> = match &args.id {
        Some(id) => vec![data
            .case(id)
            .with_context(|| format!("no case `{id}` in {}", args.case.display()))?],
        None => data.cases().iter().collect(),
    };
    if cases.is_empty() {
        bail!("{} holds no cases", args.case.display());
    }

    let mut reports = Vec::with_capacity(cases.len());
    for case in cases {
        let (_, report) =
            infer(case, &schema, &kb, &options).with_context(|| format!("case `{}`", case.id))?;
        reports.push(report);
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for (i, report) in reports.iter().enumerate() {
            if i > 0 {
                println!();
            }
            print!("{}", render_report(report));
        }
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let (kb, schema) = load_kb(&args.kb)?;
    let inputs = LogisticInputs::colic();
    let logistic_ok = inputs.validate(&schema).is_ok();
    header(
        &mut std::io::stdout(),
        "evaluate",
        json!({
            "kb": args.kb.kb.display().to_string(),
            "data": args.data.display().to_string(),
            "hypothesis": kb.hypothesis().to_string(),
            "schema_digest": kb.schema_digest(),
            "threshold": args.threshold,
            "mode": ProbabilityMode::Canonical.to_string(),
            "score_weights": kb.config().score_weights,
            "logistic": logistic_ok.then(LogisticModel::default),
        }),
    )?;

    let data = load_data(&args.data, &schema)?;
    let options = InferOptions::default();
    let mut woe = BTreeMap::new();
    for case in data.cases() {
        let (_, report) =
            infer(case, &schema, &kb, &options).with_context(|| format!("case `{}`", case.id))?;
        woe.insert(case.id.clone(), report.probability);
    }
    let (woe_metrics, woe_preds) = evaluate_detailed(
        |c| woe.get(&c.id).copied(),
        &data,
        args.threshold,
        kb.hypothesis(),
    )?;
    let mut rows = vec![("Weight of Evidence", woe_metrics)];

    let mut logistic_preds = None;
    if logistic_ok {
        let model = LogisticModel::default();
        let score = |c: &woe_core::Case| {
            let (a2, pulse, dist) = inputs.extract(c, &schema)?;
            model.score(a2, pulse, dist).ok().map(|(_, p)| p)
        };
        match evaluate_detailed(score, &data, args.threshold, kb.hypothesis()) {
            Ok((m, preds)) => {
                rows.push(("Logistic", m));
                logistic_preds = Some(preds);
            }
            Err(e) => println!("logistic baseline skipped: {e}"),
        }
    } else {
        println!("logistic baseline skipped: schema lacks its inputs");
    }
    print!("{}", render_comparison(data.len(), &rows));

    if let Some(path) = &args.predictions {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record([
            "id",
            "label",
            "woe_probability",
            "woe_predicted",
            "logistic_probability",
            "logistic_predicted",
        ])?;
        let fmt_bool =
            |b: Option<bool>| b.map_or(String::new(), |b| if b { "yes" } else { "no" }.into());
        let fmt_p = |p: Option<f64>| p.map_or(String::new(), |p| p.to_string());
        for (i, p) in woe_preds.iter().enumerate() {
            let lp = logistic_preds.as_ref().map(|l| &l[i]);
            w.write_record([
                p.case_id.clone(),
                fmt_bool(p.label),
                fmt_p(p.probability),
                fmt_bool(p.predicted),
                fmt_p(lp.and_then(|l| l.probability)),
                fmt_bool(lp.and_then(|l| l.predicted)),
            ])?;
        }
        w.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_inspect(args: InspectArgs) -> Result<()> {
    let kb = KnowledgeBase::load(&read(&args.kb)?)
        .with_context(|| format!("loading knowledge base {}", args.kb.display()))?;
    header(
        &mut std::io::stdout(),
        "inspect",
        json!({
            "kb": args.kb.display().to_string(),
            "hypothesis": kb.hypothesis().to_string(),
            "schema_digest": kb.schema_digest(),
            "config": kb.config(),
            "top": args.fuzzy.is_none().then_some(args.top),
            "fuzzy": args.fuzzy,
            "data": args.data.as_ref().map(|p| p.display().to_string()),
        }),
    )?;

    let Some(spec) = &args.fuzzy else {
        println!("rules: {}", kb.rules().len());
        println!(
            "prior: p = {:.4}, log odds = {:.3}",
            kb.prior().prevalence,
            kb.prior().log_odds
        );
        for warning in kb.warnings() {
            println!("warning: {warning}");
        }
        print_top(&kb, args.top);
        return Ok(());
    };

    let (attribute, label) = spec
        .split_once(':')
        .with_context(|| format!("`{spec}` is not ATTRIBUTE:LABEL"))?;
    let data_path = args.data.as_ref().expect("clap enforces --data");
    let data = load_data(data_path, kb.schema())?;
    let event = FuzzyEvent::from_dataset(&data, attribute, label)?;
    let labels = hypothesis_labels(&data, kb.hypothesis());
    let grid = kb.config().alpha_grid()?;
    let smoothing = kb.config().smoothing;
    match optimal_alpha(&event, &labels, &grid, smoothing) {
        Ok(choice) => println!(
            "# optimal alpha: {} (W = {:.3}, {} cases in cut)",
            choice.alpha, choice.weight_at_alpha, choice.subset_size
        ),
        Err(e) => println!("# optimal alpha: none ({e})"),
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "alpha,probability,weight")?;
    for row in alpha_profile(&event, &labels, &grid, smoothing)? {
        let weight = row.weight.map_or(String::new(), |w| w.to_string());
        writeln!(out, "{},{},{}", row.alpha, row.probability, weight)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Mine(args) => run_mine(args),
        Command::Predict(args) => run_predict(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Inspect(args) => run_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
