use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use oius::bn::{load_network, Network};
use oius::detection::detect;
use oius::eval::{
    calibrate_threshold, calibration_curve, compare_formulas, evaluate, generate_scenarios, parse_scenarios,
    rank_or_sets, spearman, synthesize_labeled, tree_to_formula, write_scenarios, youden, Formula, Label,
    LabeledScenario, ScenarioRecord, SyntheticSpec,
};
use oius::model_tools::models;
use oius::recommender::oora;

#[derive(Parser)]
#[command(name = "oius-eval", version, about = "Scenario generation, threshold calibration and formula comparison")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Network file, or a shipped model name (falls-13, falls-extended, autonomy-submodel).
    #[arg(long, default_value = "falls-extended")]
    network: String,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write random scenarios, or a labeled synthetic set with --labeled.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Build a labeled set: --count is split evenly between the labels.
        #[arg(long)]
        labeled: bool,
        /// Consistent scenarios labeled contradictory.
        #[arg(long, default_value_t = 0)]
        planted_fn: usize,
        /// Contradictory scenarios labeled consistent.
        #[arg(long, default_value_t = 0)]
        planted_fp: usize,
    },
    /// Pick ε from a grid by Youden's index.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenarios: PathBuf,
        /// Comma-separated candidate thresholds.
        #[arg(long, value_delimiter = ',', default_value = "1e-1,5e-2,1e-2,5e-3,1e-3,1e-4")]
        grid: Vec<f64>,
    },
    /// Contingency table at one ε.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
    },
    /// Compare two formulas, or detection output against expert annotations.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "reference", conflicts_with = "scenarios")]
        candidate: Option<String>,
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
    },
}

fn network(spec: &str) -> Result<Network> {
    if Path::new(spec).exists() {
        let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        return load_network(&text).with_context(|| format!("loading {spec}"));
    }
    models::by_name(spec)
        .with_context(|| format!("`{spec}` is neither a file nor one of {}", models::NAMES.join(", ")))
}

fn labeled(path: &Path) -> Result<Vec<LabeledScenario>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = parse_scenarios(&text).with_context(|| format!("parsing {}", path.display()))?;
    records
        .into_iter()
        .map(|r| {
            let id = r.scenario.id.clone();
            r.labeled().with_context(|| format!("scenario `{id}` has no label"))
        })
        .collect()
}

fn emit(common: &Common, text: String, value: serde_json::Value) -> Result<()> {
    let out = if common.json { serde_json::to_string_pretty(&value)? + "\n" } else { text };
    match &common.output {
        Some(path) => std::fs::write(path, out).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { common, count, seed, labeled, planted_fn, planted_fp } => {
            let net = network(&common.network)?;
            let records: Vec<ScenarioRecord> = if labeled {
                let half = count / 2;
                if planted_fn > half || planted_fp > count - half {
                    bail!("more planted errors than scenarios of that label");
                }
                let spec = SyntheticSpec {
                    contradictory: half - planted_fn,
                    consistent: count - half - planted_fp,
                    planted_false_negatives: planted_fn,
                    planted_false_positives: planted_fp,
                    ..SyntheticSpec::default()
                };
                synthesize_labeled(&net, &spec, seed)?.into_iter().map(Into::into).collect()
            } else {
                generate_scenarios(&net, count, seed)?.into_iter().map(Into::into).collect()
            };
            let value = serde_json::to_value(&records)?;
            emit(&common, write_scenarios(&records), value)
        }
        Command::Calibrate { common, scenarios, grid } => {
            let net = network(&common.network)?;
            let set = labeled(&scenarios)?;
            let (epsilon, table) = calibrate_threshold(&net, &set, &grid)?;
            let curve = calibration_curve(&net, &set, &grid)?;
            let mut text = String::new();
            for (e, t) in &curve {
                text += &format!("{e:e}\t{t}\tYouden {:.4}\n", youden(t));
            }
            text += &format!("chosen epsilon {epsilon:e}: {table}\n");
            let value = json!({ "epsilon": epsilon, "table": table, "curve": curve });
            emit(&common, text, value)
        }
        Command::Evaluate { common, scenarios, epsilon } => {
            let net = network(&common.network)?;
            let set = labeled(&scenarios)?;
            let table = evaluate(&net, &set, epsilon)?;
            let text = format!("epsilon {epsilon:e}: {table}\naccuracy {:.4}\n", table.accuracy());
            emit(&common, text, json!({ "epsilon": epsilon, "table": table }))
        }
        Command::Compare { common, candidate, reference, scenarios, epsilon } => {
            if let (Some(c), Some(r)) = (candidate, reference) {
                let report = compare_formulas(&c.parse::<Formula>()?, &r.parse::<Formula>()?);
                let value = serde_json::to_value(&report)?;
                return emit(&common, report.to_string(), value);
            }
            let Some(path) = scenarios else { bail!("give --candidate and --reference, or --scenarios") };
            let net = network(&common.network)?;
            let mut text = String::new();
            let mut rows = Vec::new();
            for l in labeled(&path)?.into_iter().filter(|l| l.label == Label::Contradictory) {
                let s = &l.scenario;
                let found = detect(&net, &s.prior_observations, &s.new_observation, epsilon)?;
                let Some(tree) = found.tree else {
                    text += &format!("{}: not contradictory at {epsilon:e} (p = {:e})\n", s.id, found.probability);
                    rows.push(json!({ "id": s.id, "contradictory": false, "probability": found.probability }));
                    continue;
                };
                let formula = tree_to_formula(&tree);
                text += &format!("{}: {formula}\n", s.id);
                let mut row = json!({ "id": s.id, "formula": formula.to_string() });
                if let Some(expert) = &l.expert_formula {
                    let report = compare_formulas(&formula, expert);
                    text += &format!("  expert {expert}\n  {}", report.to_string().replace('\n', "\n  ").trim_end());
                    text += "\n";
                    row["match"] = json!(report.is_match());
                }
                if let Some(expert_ranks) = &l.expert_or_rankings {
                    let ours = rank_or_sets(&oora(&tree, &net, &s.new_observation)?);
                    let mut rhos = Vec::new();
                    for e in expert_ranks {
                        let rho = ours.iter().find_map(|o| spearman(o, e).ok());
                        match rho {
                            Some(rho) => text += &format!("  spearman {rho:.4} for [{}]\n", e.order().join(" > ")),
                            None => text += &format!("  no OR-set matches [{}]\n", e.order().join(" > ")),
                        }
                        rhos.push(rho);
                    }
                    row["spearman"] = json!(rhos);
                }
                rows.push(row);
            }
            emit(&common, text, json!(rows))
        }
    }
}
