//! `satgnn`: dataset generation, solving, encoding, WL analysis and GNN
//! experiments from the command line.

mod config;
mod error;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satgnn_core::generator::{build_dataset, load_dataset, write_dataset, Exponent, GenParams, Split};
use satgnn_core::wl::{compare, counterexample_pair, fold_report, indistinguishable};
use satgnn_core::{
    apply_rni, emit_dimacs, encode, parse_dimacs, solve, to_graph, to_mps, Formula, FormulaPermutation, RniConfig,
    SolveBudget, SolveStatus, World,
};
use satgnn_nn::train::{evaluate, Sample, Splits, TrainConfig};
use satgnn_nn::{load_model, Checkpoint, GnnConfig, GnnModel, LossKind};
use serde_json::json;

use config::{write_json, Layers};
use error::CliError;

#[derive(Parser)]
#[command(name = "satgnn", version, about = "k-CNF satisfiability through MILP graphs and message-passing networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON file of option defaults keyed by long flag name.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; the MSG_WORKERS environment variable takes precedence.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct ModelFlags {
    /// Embedding dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Message-passing rounds.
    #[arg(long)]
    rounds: Option<usize>,
    /// Fraction of nodes that receive a random feature.
    #[arg(long)]
    rni: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct TrainFlags {
    #[command(flatten)]
    model: ModelFlags,
    /// Loss: bce or mse.
    #[arg(long)]
    loss: Option<LossKind>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single-threaded, bit-reproducible gradient accumulation.
    #[arg(long)]
    deterministic: bool,
    /// RNI draws averaged per graph when evaluating.
    #[arg(long)]
    eval_redraws: Option<usize>,
    /// Keep each training graph's random features fixed across epochs.
    #[arg(long)]
    freeze_rni: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a balanced, labelled dataset directory.
    Gen {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Number of formulae; must be even.
        #[arg(long)]
        size: Option<usize>,
        /// Fraction of attempts drawn from the hard window.
        #[arg(long)]
        fp: Option<f64>,
        /// Relative width of the window below the transition.
        #[arg(long)]
        fl: Option<f64>,
        /// Relative width of the window above the transition.
        #[arg(long)]
        fr: Option<f64>,
        /// Exponent of the finite-size correction term, as `a/b`.
        #[arg(long, allow_hyphen_values = true)]
        exponent: Option<Exponent>,
        #[arg(long)]
        seed: Option<u64>,
        /// Decision budget of the labelling solver.
        #[arg(long)]
        max_decisions: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Decide satisfiability of DIMACS files.
    Solve {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Print a model line for satisfiable inputs.
        #[arg(long)]
        model: bool,
        #[arg(long)]
        max_decisions: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the feasibility program of a formula in MPS format.
    Encode {
        input: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the bipartite graph of a formula as JSON.
    Graph {
        input: PathBuf,
        #[arg(long)]
        rni: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Foldability of one formula, or indistinguishability of two.
    Wl {
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<PathBuf>,
        /// Write the full histogram report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model on a dataset directory.
    Train {
        dataset: PathBuf,
        #[command(flatten)]
        flags: TrainFlags,
        /// Output directory for the checkpoint and metrics.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on one split of a dataset directory.
    Eval {
        dataset: PathBuf,
        checkpoint: PathBuf,
        #[command(flatten)]
        flags: TrainFlags,
        /// Split to evaluate: train, valid or test.
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare predictions on a formula and a randomly relabelled copy.
    Invariance {
        input: PathBuf,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random (model, relabelling) trials.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the 1-WL counterexample pair and check its properties.
    Counterexample {
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

pub(crate) fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingFile(path.display().to_string()),
        _ => CliError::Input(format!("{}: {e}", path.display())),
    })
}

fn read_formula(path: &Path) -> Result<Formula, CliError> {
    parse_dimacs(&read_input(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Write(parent.display().to_string(), e))?;
    }
    fs::write(path, text).map_err(|e| CliError::Write(path.display().to_string(), e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(|e| CliError::Write("stdout".into(), e))
        }
    }
}

fn setup_workers(common: &Common, layers: &Layers) -> Result<usize, CliError> {
    let from_env = std::env::var("MSG_WORKERS").ok();
    let workers = match from_env {
        Some(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::Input(format!("MSG_WORKERS={v:?} is not a count")))?),
        None => layers.pick(common.workers.map(Some), "workers", None)?,
    };
    let workers = workers.unwrap_or(0);
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(rayon::current_num_threads())
}

fn resolve_train(flags: &TrainFlags, layers: &Layers) -> Result<TrainConfig, CliError> {
    let def = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: layers.pick(flags.epochs, "epochs", def.epochs)?,
        batch_size: layers.pick(flags.batch, "batch", def.batch_size)?,
        learning_rate: layers.pick(flags.lr, "lr", def.learning_rate)?,
        d: layers.pick(flags.model.d, "d", def.d)?,
        rounds: layers.pick(flags.model.rounds, "rounds", def.rounds)?,
        rni_fraction: layers.pick(flags.model.rni, "rni", def.rni_fraction)?,
        loss: layers.pick_parsed(flags.loss, "loss", def.loss)?,
        seed: layers.pick(flags.seed, "seed", def.seed)?,
        deterministic: layers.flag(flags.deterministic, "deterministic", def.deterministic)?,
        eval_redraws: layers.pick(flags.eval_redraws, "eval-redraws", def.eval_redraws)?,
        freeze_rni: layers.flag(flags.freeze_rni, "freeze-rni", def.freeze_rni)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_gen(
    args: (Option<usize>, Option<usize>, Option<usize>, Option<usize>),
    window: (Option<f64>, Option<f64>, Option<f64>),
    exponent: Option<Exponent>,
    seed: Option<u64>,
    max_decisions: Option<u64>,
    out: &Path,
    layers: &Layers,
) -> Result<(), CliError> {
    let size = layers.pick(args.3, "size", 2000)?;
    let seed = layers.pick(seed, "seed", 0)?;
    let def = GenParams::easy(size, seed);
    let params = GenParams {
        k: layers.pick(args.0, "k", def.k)?,
        n_min: layers.pick(args.1, "n-min", def.n_min)?,
        n_max: layers.pick(args.2, "n-max", def.n_max)?,
        hard_fraction: layers.pick(window.0, "fp", def.hard_fraction)?,
        window_left: layers.pick(window.1, "fl", def.window_left)?,
        window_right: layers.pick(window.2, "fr", def.window_right)?,
        exponent: layers.pick_parsed(exponent, "exponent", def.exponent)?,
        max_decisions: layers.pick(max_decisions, "max-decisions", def.max_decisions)?,
        ..def
    };
    let ds = build_dataset(&params)?;
    write_dataset(&ds, out)?;
    for s in Split::ALL {
        let c = ds.counts(s);
        println!("{}: {} sat, {} unsat", s.name(), c.sat, c.unsat);
    }
    println!("attempts: {}, discarded unknown: {}", ds.manifest.attempts, ds.manifest.discarded_unknown);
    Ok(())
}

fn world_line(w: &World) -> String {
    let mut s = String::from("v");
    for (j, &b) in w.values().iter().enumerate() {
        let lit = j as i64 + 1;
        s.push_str(&format!(" {}", if b { lit } else { -lit }));
    }
    s.push_str(" 0");
    s
}

fn cmd_solve(inputs: &[PathBuf], model: bool, max_decisions: Option<u64>, layers: &Layers) -> Result<(), CliError> {
    let limit: Option<u64> = layers.pick(max_decisions.map(Some), "max-decisions", None)?;
    let budget = limit.map_or(SolveBudget::UNLIMITED, SolveBudget::decisions);
    for path in inputs {
        let f = read_formula(path)?;
        let r = solve(&f, budget);
        let status = match r.status {
            SolveStatus::Sat => "SAT",
            SolveStatus::Unsat => "UNSAT",
            SolveStatus::Unknown => "UNKNOWN",
        };
        println!("{}: {status}", path.display());
        if let (true, Some(w)) = (model, &r.model) {
            println!("{}", world_line(w));
        }
    }
    Ok(())
}

fn cmd_encode(input: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let f = read_formula(input)?;
    let name = input.file_stem().map_or("formula".into(), |s| s.to_string_lossy().replace(' ', "_"));
    let mut text = format!("* satgnn encode input={}\n", input.display());
    text.push_str(&to_mps(&encode(&f), &name));
    emit(out, &text)
}

fn cmd_graph(input: &Path, rni: Option<f64>, seed: Option<u64>, out: Option<&Path>, layers: &Layers) -> Result<(), CliError> {
    let fraction = layers.pick(rni, "rni", 0.0)?;
    let seed = layers.pick(seed, "seed", 0)?;
    let cfg = RniConfig::new(fraction, seed).map_err(|e| CliError::Input(e.to_string()))?;
    let f = read_formula(input)?;
    let g = apply_rni(&to_graph(&encode(&f)), &cfg);
    let doc = json!({
        "config": { "input": input.display().to_string(), "rni": fraction, "seed": seed },
        "graph": g.to_json(),
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Other(e.to_string()))? + "\n";
    emit(out, &text)
}

fn cmd_wl(inputs: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    let names: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
    let doc = if let [a] = inputs {
        let report = fold_report(&read_formula(a)?);
        println!("foldable: {}", report.foldable);
        json!({ "inputs": names, "report": report })
    } else {
        let (f, h) = (read_formula(&inputs[0])?, read_formula(&inputs[1])?);
        let report = compare(&to_graph(&encode(&f)), &to_graph(&encode(&h))).map_err(|e| CliError::Other(e.to_string()))?;
        println!("indistinguishable: {}", report.indistinguishable);
        if let Some(t) = report.first_difference {
            println!("first difference at iteration {t}");
        }
        json!({ "inputs": names, "report": report })
    };
    if let Some(path) = out {
        write_json(path, &doc)?;
    }
    Ok(())
}

fn cmd_train(dataset: &Path, flags: &TrainFlags, out: &Path, layers: &Layers, workers: usize) -> Result<(), CliError> {
    let cfg = resolve_train(flags, layers)?;
    let ds = load_dataset(dataset, cfg.seed)?;
    let splits = Splits::from_dataset(&ds);
    fs::create_dir_all(out).map_err(|e| CliError::Write(out.display().to_string(), e))?;
    let model = GnnModel::init(cfg.gnn()?, cfg.seed);
    let outcome = satgnn_nn::train_from(model, &splits, &cfg, |e| {
        eprintln!(
            "epoch {:>4}  loss {:.5}  train {:.4}  valid {:.4}  {:.2}s",
            e.epoch, e.train_loss, e.train_accuracy, e.valid_accuracy, e.seconds
        );
    })?;
    Checkpoint::from_model(&outcome.model, cfg.loss).save(&out.join("model.json"))?;
    outcome.metrics.write_csv(&out.join("metrics.csv"))?;
    let m = &outcome.metrics;
    let summary = json!({
        "config": cfg,
        "dataset": dataset.display().to_string(),
        "workers": workers,
        "best_epoch": m.best_epoch,
        "best_valid_accuracy": m.best_valid_accuracy,
        "test_accuracy": m.test_accuracy,
        "test_confusion": m.test_confusion,
        "runtime_seconds": m.runtime_seconds,
        "history": m.history,
    });
    write_json(&out.join("summary.json"), &summary)?;
    println!("best epoch {}: valid {:.4}, test {:.4}", m.best_epoch, m.best_valid_accuracy, m.test_accuracy);
    Ok(())
}

fn cmd_eval(
    dataset: &Path,
    checkpoint: &Path,
    flags: &TrainFlags,
    split: &str,
    out: Option<&Path>,
    layers: &Layers,
) -> Result<(), CliError> {
    let split = match split {
        "train" => Split::Train,
        "valid" => Split::Valid,
        "test" => Split::Test,
        other => return Err(CliError::Input(format!("unknown split {other:?}"))),
    };
    if !checkpoint.exists() {
        return Err(CliError::MissingFile(checkpoint.display().to_string()));
    }
    let ck = Checkpoint::load(checkpoint)?;
    // requested shape flags must agree with the checkpoint
    let stored = ck.config()?;
    let want = GnnConfig {
        d: layers.pick(flags.model.d, "d", stored.d)?,
        rounds: layers.pick(flags.model.rounds, "rounds", stored.rounds)?,
        rni_fraction: layers.pick(flags.model.rni, "rni", stored.rni_fraction)?,
    };
    if want != stored {
        return Err(CliError::Dimension(format!(
            "checkpoint has d={}, rounds={}, rni={}; requested d={}, rounds={}, rni={}",
            stored.d, stored.rounds, stored.rni_fraction, want.d, want.rounds, want.rni_fraction
        )));
    }
    let (model, loss) = load_model(checkpoint, Some(&want))?;
    let seed = layers.pick(flags.seed, "seed", 0)?;
    let redraws = layers.pick(flags.eval_redraws, "eval-redraws", 1)?;
    let ds = load_dataset(dataset, seed)?;
    let samples: Vec<Sample> = ds.split(split).map(|e| Sample::from_formula(&e.formula, e.label)).collect();
    let e = evaluate(&model, &samples, redraws, seed)?;
    println!("{} accuracy: {:.4} over {} formulae", split.name(), e.accuracy, samples.len());
    let doc = json!({
        "config": {
            "dataset": dataset.display().to_string(),
            "checkpoint": checkpoint.display().to_string(),
            "split": split.name(),
            "seed": seed,
            "eval_redraws": redraws,
            "d": want.d, "rounds": want.rounds, "rni": want.rni_fraction, "loss": loss,
        },
        "accuracy": e.accuracy,
        "confusion": e.confusion,
    });
    if let Some(path) = out {
        write_json(path, &doc)?;
    }
    Ok(())
}

fn cmd_invariance(
    input: &Path,
    model: &ModelFlags,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<&Path>,
    layers: &Layers,
) -> Result<(), CliError> {
    let seed = layers.pick(seed, "seed", 0)?;
    let trials = layers.pick(trials, "trials", 10)?;
    let cfg = GnnConfig::new(
        layers.pick(model.d, "d", 16)?,
        layers.pick(model.rounds, "rounds", 4)?,
        layers.pick(model.rni, "rni", 0.0)?,
    )?;
    if cfg.uses_rni() {
        return Err(CliError::Input("invariance is checked without random features; use --rni 0".into()));
    }
    let f = read_formula(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_delta: f64 = 0.0;
    for t in 0..trials {
        let perm = FormulaPermutation::random(f.num_clauses(), f.num_vars(), &mut rng);
        let permuted = f.apply_permutation(&perm).map_err(|e| CliError::Other(e.to_string()))?;
        let model = GnnModel::init(cfg, seed.wrapping_add(t as u64));
        let a = model.forward_graph(&to_graph(&encode(&f)))?;
        let b = model.forward_graph(&to_graph(&encode(&permuted)))?;
        max_delta = max_delta.max((a - b).abs());
    }
    println!("max |dy|: {max_delta:e} over {trials} trials");
    if let Some(path) = out {
        let doc = json!({
            "config": { "input": input.display().to_string(), "seed": seed, "trials": trials, "d": cfg.d, "rounds": cfg.rounds },
            "max_abs_delta": max_delta,
        });
        write_json(path, &doc)?;
    }
    Ok(())
}

fn cmd_counterexample(out: &Path) -> Result<(), CliError> {
    let (phi, psi) = counterexample_pair();
    fs::create_dir_all(out).map_err(|e| CliError::Write(out.display().to_string(), e))?;
    write_text(&out.join("phi.cnf"), &emit_dimacs(&phi))?;
    write_text(&out.join("psi.cnf"), &emit_dimacs(&psi))?;
    // w = p1 ¬p2 p3 ¬p4 p5 ¬p6
    let w = World::new((0..6).map(|j| j % 2 == 0).collect());
    let w_models = phi.evaluate(&w).map_err(|e| CliError::Other(e.to_string()))?;
    let psi_unsat = solve(&psi, SolveBudget::UNLIMITED).status == SolveStatus::Unsat;
    let same = indistinguishable(&phi, &psi);
    println!("phi satisfied by p1 -p2 p3 -p4 p5 -p6: {w_models}");
    println!("psi unsatisfiable: {psi_unsat}");
    println!("indistinguishable: {same}");
    if w_models && psi_unsat && same {
        Ok(())
    } else {
        Err(CliError::Other("counterexample properties do not hold".into()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { k, n_min, n_max, size, fp, fl, fr, exponent, seed, max_decisions, out, common } => {
            let layers = Layers::load(common.config.as_deref())?;
            setup_workers(&common, &layers)?;
            cmd_gen((k, n_min, n_max, size), (fp, fl, fr), exponent, seed, max_decisions, &out, &layers)
        }
        Command::Solve { inputs, model, max_decisions, common } => {
            let layers = Layers::load(common.config.as_deref())?;
            cmd_solve(&inputs, model, max_decisions, &layers)
        }
        Command::Encode { input, out, .. } => cmd_encode(&input, out.as_deref()),
        Command::Graph { input, rni, seed, out, common } => {
            let layers = Layers::load(common.config.as_deref())?;
            cmd_graph(&input, rni, seed, out.as_deref(), &layers)
        }
        Command::Wl { inputs, out, .. } => cmd_wl(&inputs, out.as_deref()),
        Command::Train { dataset, flags, out, common } => {
            let layers = Layers::load(common.config.as_deref())?;
            let workers = setup_workers(&common, &layers)?;
            cmd_train(&dataset, &flags, &out, &layers, workers)
        }
        Command::Eval { dataset, checkpoint, flags, split, out, common } => {
            let layers = Layers::load(common.config.as_deref())?;
            setup_workers(&common, &layers)?;
            cmd_eval(&dataset, &checkpoint, &flags, &split, out.as_deref(), &layers)
        }
        Command::Invariance { input, model, seed, trials, out, common } => {
            let layers = Layers::load(common.config.as_deref())?;
            cmd_invariance(&input, &model, seed, trials, out.as_deref(), &layers)
        }
        Command::Counterexample { out, .. } => cmd_counterexample(&out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
