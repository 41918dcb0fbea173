use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nldt::closedloop::{collect_visitation, reengineer, reoptimize, ClosedLoopConfig};
use nldt::data::{generate_balanced, generate_regular, read_csv, write_csv, GenerationMode, LabeledDataset};
use nldt::envs::{rollout, write_trace_csv, EnvKind, Policy, ScriptedOracle};
use nldt::eval::{
    closed_loop_stats, collect_trace, emit_plot_data, render_svg, OpenLoopReport, PlotKind, PlotSource, RunReport,
};
use nldt::openloop::{induce_tree, prune, BilevelConfig, LowerMethod, DEFAULT_PRUNE_TOLERANCE};
use nldt::tree::{export_csv_rules, export_text, from_json, to_json, DEFAULT_DECIMALS};
use nldt::Nldt;

use crate::artifact::{read_text, write_atomic, ManifestBuilder};
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "nldt", version, about = "Distill control policies into nonlinear decision trees")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "NLDT_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExportFormat {
    Text,
    Json,
    CsvRules,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Regular,
    Balanced,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Record oracle state-action pairs.
    GenData {
        #[arg(long, value_parser = parse_env)]
        env: EnvKind,
        /// `scripted` or `tree:<path>`.
        #[arg(long, default_value = "scripted")]
        oracle: String,
        #[arg(long, value_enum, default_value = "regular")]
        mode: ModeArg,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Induce a tree from labeled data.
    TrainOpen {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_lower)]
        lower: Option<LowerMethod>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collapse splits that validation accuracy does not need.
    Prune {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        val: PathBuf,
        /// Allowed accuracy loss in percentage points.
        #[arg(long, default_value_t = DEFAULT_PRUNE_TOLERANCE)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep the top levels of a tree.
    Prefix {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-optimize coefficients against episodic reward.
    TrainClosed {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_parser = parse_env)]
        env: EnvKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        curve_svg: Option<PathBuf>,
        /// Incumbent tree, rewritten after every generation.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Drop branches never visited under closed-loop control.
    Reengineer {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_parser = parse_env)]
        env: EnvKind,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Closed-loop statistics and optional open-loop accuracy.
    Evaluate {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_parser = parse_env)]
        env: EnvKind,
        #[arg(long, default_value_t = 50)]
        batches: usize,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print or write a tree.
    Export {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: ExportFormat,
        #[arg(long, default_value_t = DEFAULT_DECIMALS)]
        decimals: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one episode and write its trace.
    Rollout {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_parser = parse_env)]
        env: EnvKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Plot data from closed-loop control: state_scatter or action_vs_time.
    Plot {
        #[arg(long, value_parser = parse_plot)]
        kind: PlotKind,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_parser = parse_env)]
        env: EnvKind,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn parse_env(s: &str) -> Result<EnvKind, String> {
    EnvKind::from_str(s).map_err(|e| e.to_string())
}

fn parse_lower(s: &str) -> Result<LowerMethod, String> {
    LowerMethod::from_str(s).map_err(|e| e.to_string())
}

fn parse_plot(s: &str) -> Result<PlotKind, String> {
    PlotKind::from_str(s).map_err(|e| e.to_string())
}

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::GenData { env, oracle, mode, n, seed, out } => gen_data(env, &oracle, mode, n, seed, &out),
        Command::TrainOpen { data, config, lower, seed, max_depth, out } => {
            train_open(&data, config.as_deref(), lower, seed, max_depth, &out)
        }
        Command::Prune { tree, val, tolerance, out } => prune_cmd(&tree, &val, tolerance, &out),
        Command::Prefix { tree, depth, out } => prefix(&tree, depth, &out),
        Command::TrainClosed { tree, env, config, seed, generations, out, curve, curve_svg, checkpoint } => {
            let opts = ClosedOutputs { out, curve, curve_svg, checkpoint };
            train_closed(&tree, env, config.as_deref(), seed, generations, &opts)
        }
        Command::Reengineer { tree, env, samples, seed, out, profile } => {
            reengineer_cmd(&tree, env, samples, seed, &out, profile.as_deref())
        }
        Command::Evaluate { tree, env, batches, episodes, seed, train, test, report } => {
            evaluate(&tree, env, batches, episodes, seed, train.as_deref(), test.as_deref(), report.as_deref())
        }
        Command::Export { tree, format, decimals, out } => export(&tree, format, decimals, out.as_deref()),
        Command::Rollout { tree, env, seed, trace } => rollout_cmd(&tree, env, seed, &trace),
        Command::Plot { kind, tree, env, steps, seed, out, svg } => {
            plot(kind, &tree, env, steps, seed, &out, svg.as_deref())
        }
    }
}

fn load_tree(path: &Path) -> CliResult<Nldt> {
    let text = read_text(path)?;
    from_json(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load_tree_for(path: &Path, env: EnvKind) -> CliResult<Nldt> {
    let tree = load_tree(path)?;
    if tree.dim() != env.state_dim() || tree.n_actions() != env.n_actions() {
        return Err(CliError::data(format!(
            "{}: tree has {} features and {} actions, {env} needs {} and {}",
            path.display(),
            tree.dim(),
            tree.n_actions(),
            env.state_dim(),
            env.n_actions()
        )));
    }
    Ok(tree)
}

fn load_data(path: &Path, n_actions: Option<usize>) -> CliResult<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(file), n_actions).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn save_tree(tree: &Nldt, path: &Path) -> CliResult {
    write_atomic(path, to_json(tree).as_bytes())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> nldt::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn gen_data(env: EnvKind, oracle: &str, mode: ModeArg, n: usize, seed: u64, out: &Path) -> CliResult {
    let mut manifest = ManifestBuilder::new("gen-data");
    let policy: Box<dyn Policy> = match oracle.split_once(':') {
        None if oracle == "scripted" => Box::new(ScriptedOracle::for_env(env)),
        Some(("tree", path)) => {
            manifest = manifest.input(Path::new(path));
            Box::new(load_tree_for(Path::new(path), env)?)
        }
        _ => return Err(CliError::usage(format!("unknown oracle {oracle:?}; use scripted or tree:<path>"))),
    };
    let mut e = env.build();
    let mut ds = match mode {
        ModeArg::Regular => generate_regular(e.as_mut(), policy.as_ref(), n, seed)?,
        ModeArg::Balanced => generate_balanced(e.as_mut(), policy.as_ref(), n, seed)?,
    };
    ds.meta.oracle = Some(oracle.to_string());
    write_atomic(out, &csv_bytes(|b| write_csv(&ds, b))?)?;
    let mode = match mode {
        ModeArg::Regular => GenerationMode::Regular,
        ModeArg::Balanced => GenerationMode::Balanced,
    };
    manifest
        .config(&json!({"env": env, "oracle": oracle, "mode": mode, "n": n}))
        .seeds(json!({"data": seed}))
        .details(&ds.meta)
        .finish(&[out])?;
    if ds.meta.budget_exhausted {
        eprintln!("warning: balanced generation ran out of episodes; class counts {:?}", ds.meta.class_counts);
    }
    Ok(())
}

fn train_open(
    data: &Path,
    config: Option<&Path>,
    lower: Option<LowerMethod>,
    seed: Option<u64>,
    max_depth: Option<usize>,
    out: &Path,
) -> CliResult {
    let mut manifest = ManifestBuilder::new("train-open").input(data);
    let mut cfg: BilevelConfig = match config {
        Some(p) => {
            manifest = manifest.input(p);
            load_json(p)?
        }
        None => BilevelConfig::default(),
    };
    if let Some(l) = lower {
        cfg.lower = l;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = max_depth {
        cfg.max_depth = d;
    }
    cfg.validate()?;
    let ds = load_data(data, None)?;
    let (tree, report) = induce_tree(&ds, &cfg)?;
    save_tree(&tree, out)?;
    let acc = nldt::eval::open_loop_accuracy(&tree, &ds)?;
    #[derive(Serialize)]
    struct Details<'a> {
        train_accuracy: f64,
        n_rules: usize,
        mean_rule_length: f64,
        induction: &'a nldt::openloop::InductionReport,
    }
    let details = Details {
        train_accuracy: acc,
        n_rules: tree.n_rules(),
        mean_rule_length: tree.mean_rule_length(),
        induction: &report,
    };
    manifest.config(&cfg).seeds(json!({"induction": cfg.seed})).details(&details).finish(&[out])?;
    println!(
        "{} rules, mean length {:.2}, train accuracy {acc:.2}%, {:.1}s",
        tree.n_rules(),
        tree.mean_rule_length(),
        report.wall_ms / 1e3
    );
    Ok(())
}

fn prune_cmd(tree_path: &Path, val: &Path, tolerance: f64, out: &Path) -> CliResult {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(CliError::usage(format!("tolerance {tolerance} must be non-negative")));
    }
    let tree = load_tree(tree_path)?;
    let ds = load_data(val, Some(tree.n_actions()))?;
    let pruned = prune(&tree, &ds, tolerance)?;
    save_tree(&pruned, out)?;
    ManifestBuilder::new("prune")
        .input(tree_path)
        .input(val)
        .config(&json!({"tolerance": tolerance}))
        .details(&json!({"rules_before": tree.n_rules(), "rules_after": pruned.n_rules()}))
        .finish(&[out])?;
    println!("{} -> {} rules", tree.n_rules(), pruned.n_rules());
    Ok(())
}

fn prefix(tree_path: &Path, depth: usize, out: &Path) -> CliResult {
    let tree = load_tree(tree_path)?;
    let cut = tree.depth_prefix(depth);
    save_tree(&cut, out)?;
    ManifestBuilder::new("prefix").input(tree_path).config(&json!({"depth": depth})).finish(&[out])?;
    Ok(())
}

struct ClosedOutputs {
    out: PathBuf,
    curve: Option<PathBuf>,
    curve_svg: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
}

fn train_closed(
    tree_path: &Path,
    env: EnvKind,
    config: Option<&Path>,
    seed: Option<u64>,
    generations: Option<usize>,
    outputs: &ClosedOutputs,
) -> CliResult {
    let mut manifest = ManifestBuilder::new("train-closed").input(tree_path);
    let mut cfg: ClosedLoopConfig = match config {
        Some(p) => {
            manifest = manifest.input(p);
            load_json(p)?
        }
        None => ClosedLoopConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(g) = generations {
        cfg.generations = g;
    }
    cfg.validate()?;
    let tree = load_tree_for(tree_path, env)?;
    let result = reoptimize(&tree, env, &cfg, |point, incumbent| {
        if let Some(p) = &outputs.checkpoint {
            write_atomic(p, to_json(incumbent).as_bytes()).map_err(|e| nldt::NldtError::Environment(e.message))?;
        }
        eprintln!("generation {:>3}  best {:.3}  mean {:.3}", point.generation, point.best, point.mean);
        Ok(())
    })?;
    save_tree(&result.tree, &outputs.out)?;
    let mut written = vec![outputs.out.as_path()];
    let source = PlotSource::Curve(&result.curve);
    if let Some(p) = &outputs.curve {
        write_atomic(p, &csv_bytes(|b| emit_plot_data(PlotKind::TrainingCurve, &source, b))?)?;
        written.push(p);
    }
    if let Some(p) = &outputs.curve_svg {
        write_atomic(p, render_svg(PlotKind::TrainingCurve, &source)?.as_bytes())?;
        written.push(p);
    }
    manifest
        .config(&cfg)
        .seeds(json!({"closed_loop": cfg.seed}))
        .details(&json!({"curve": result.curve}))
        .finish(&written)?;
    Ok(())
}

fn reengineer_cmd(
    tree_path: &Path,
    env: EnvKind,
    samples: usize,
    seed: u64,
    out: &Path,
    profile_out: Option<&Path>,
) -> CliResult {
    if samples == 0 {
        return Err(CliError::usage("--samples must be at least 1"));
    }
    let tree = load_tree_for(tree_path, env)?;
    let profile = collect_visitation(&tree, env, samples, seed)?;
    let simplified = reengineer(&tree, &profile)?;
    save_tree(&simplified, out)?;
    let mut written = vec![out];
    if let Some(p) = profile_out {
        write_atomic(p, serde_json::to_string_pretty(&profile).expect("profile serializes").as_bytes())?;
        written.push(p);
    }
    ManifestBuilder::new("reengineer")
        .input(tree_path)
        .config(&json!({"env": env, "samples": samples}))
        .seeds(json!({"visitation": seed}))
        .details(
            &json!({"rules_before": tree.n_rules(), "rules_after": simplified.n_rules(), "visits": profile.visits}),
        )
        .finish(&written)?;
    println!("{} -> {} rules", tree.n_rules(), simplified.n_rules());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    tree_path: &Path,
    env: EnvKind,
    batches: usize,
    episodes: usize,
    seed: u64,
    train: Option<&Path>,
    test: Option<&Path>,
    report_path: Option<&Path>,
) -> CliResult {
    if batches == 0 || episodes == 0 {
        return Err(CliError::usage("--batches and --episodes must be at least 1"));
    }
    let tree = load_tree_for(tree_path, env)?;
    let train = train.map(|p| load_data(p, Some(tree.n_actions()))).transpose()?;
    let test = test.map(|p| load_data(p, Some(tree.n_actions()))).transpose()?;
    let t = std::time::Instant::now();
    let open_loop = OpenLoopReport::for_tree(&tree, train.as_ref(), test.as_ref())?;
    let open_ms = t.elapsed().as_secs_f64() * 1e3;
    let t = std::time::Instant::now();
    let stats = closed_loop_stats(&tree, env, batches, episodes, seed)?;
    let closed_ms = t.elapsed().as_secs_f64() * 1e3;
    let report = RunReport {
        env,
        open_loop,
        closed_loop: Some(stats),
        seeds: [("evaluation".to_string(), seed)].into(),
        wall_ms: [("open_loop".to_string(), open_ms), ("closed_loop".to_string(), closed_ms)].into(),
    };
    if let Some(p) = report_path {
        write_atomic(p, report.to_json().as_bytes())?;
    }
    let s = report.closed_loop.as_ref().expect("closed-loop stats present");
    if let Some(a) = report.open_loop.train_accuracy {
        println!("train accuracy   {a:.2}%");
    }
    if let Some(a) = report.open_loop.test_accuracy {
        println!("test accuracy    {a:.2}%");
    }
    println!("rules            {} (mean length {:.2})", report.open_loop.n_rules, report.open_loop.mean_rule_length);
    println!("completion       {:.2} +- {:.2} %", s.completion.mean, s.completion.std);
    println!("reward           {:.2} +- {:.2}", s.reward.mean, s.reward.std);
    Ok(())
}

fn export(tree_path: &Path, format: ExportFormat, decimals: usize, out: Option<&Path>) -> CliResult {
    let tree = load_tree(tree_path)?;
    let text = match format {
        ExportFormat::Text => export_text(&tree, decimals),
        ExportFormat::Json => to_json(&tree) + "\n",
        ExportFormat::CsvRules => export_csv_rules(&tree),
    };
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn rollout_cmd(tree_path: &Path, env: EnvKind, seed: u64, trace: &Path) -> CliResult {
    let tree = load_tree_for(tree_path, env)?;
    let mut e = env.build();
    let ep = rollout(e.as_mut(), &tree, seed, None)?;
    let names = e.state_names();
    write_atomic(trace, &csv_bytes(|b| write_trace_csv(&ep, names, b))?)?;
    println!("steps {}  reward {:.3}  success {}", ep.len(), ep.total_reward, ep.success);
    Ok(())
}

fn plot(
    kind: PlotKind,
    tree_path: &Path,
    env: EnvKind,
    steps: usize,
    seed: u64,
    out: &Path,
    svg: Option<&Path>,
) -> CliResult {
    if kind == PlotKind::TrainingCurve {
        return Err(CliError::usage("training curves are written by train-closed --curve"));
    }
    let tree = load_tree_for(tree_path, env)?;
    let trace = collect_trace(&tree, env, steps, seed)?;
    let source = PlotSource::Trace(&trace);
    write_atomic(out, &csv_bytes(|b| emit_plot_data(kind, &source, b))?)?;
    if let Some(p) = svg {
        write_atomic(p, render_svg(kind, &source)?.as_bytes())?;
    }
    Ok(())
}
