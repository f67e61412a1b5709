//! `liftdec`: validate, generate, lift, ground, solve and size-analyze models.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liftdec::format::{
    dec_solution_document, equivalence_document, mdp_solution_document, parse_model,
    pomdp_solution_document, read_model_file, size_params_document, size_report_document,
    to_canonical_string, write_model, Model,
};
use liftdec::lifting::{ground, lift, range_partition, symmetry_refine};
use liftdec::model::DEFAULT_ENUMERATION_CAP;
use liftdec::nano::{generate_nano_with_cap, nano_desk_preset, nano_paper_preset, NanoParams};
use liftdec::random::{random_liftable, random_mdp, random_pomdp, seeded};
use liftdec::size::{size_report, SizeParams, SizeReport};
use liftdec::solvers::{
    decpomdp_exhaustive_with, lifted_exhaustive_with, mdp_value_iteration_capped,
    pomdp_plan_iteration_with, SolverCaps, DEFAULT_JOINT_CAP, DEFAULT_PLAN_CAP,
};
use liftdec::{verify_equivalence_with, Error, Result};
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "liftdec",
    version,
    about = "Ground and lifted DecPOMDP toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Validate { model: PathBuf },
    /// Generate a nanoscale medical scenario as a lifted model.
    GenNano(GenNano),
    /// Lift a ground DecPOMDP along its coarsest symmetric partitioning.
    Lift {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand a lifted DecPOMDP into its ground form.
    Ground {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a model of any kind.
    Solve(Solve),
    /// Report worst-case representation sizes.
    AnalyzeSize(AnalyzeSize),
    /// Lift a ground model, solve both forms and compare values.
    VerifyEquivalence {
        model: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[command(flatten)]
        caps: CapArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded random model.
    GenRandom(GenRandom),
}

#[derive(Args, Clone, Copy)]
struct CapArgs {
    /// Most plans per agent or partition at any depth.
    #[arg(long, default_value_t = DEFAULT_PLAN_CAP)]
    cap_plans: u64,
    /// Most joint plan evaluations at any depth.
    #[arg(long, default_value_t = DEFAULT_JOINT_CAP)]
    cap_joint: u64,
}

impl From<CapArgs> for SolverCaps {
    fn from(c: CapArgs) -> Self {
        SolverCaps {
            plans: c.cap_plans,
            joint: c.cap_joint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NanoPreset {
    Paper,
    Desk,
}

#[derive(Args)]
struct GenNano {
    /// Start from a preset; explicit flags override it.
    #[arg(long, value_enum)]
    preset: Option<NanoPreset>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    iota: Option<usize>,
    #[arg(long)]
    partition_size: Option<u64>,
    #[arg(long)]
    theta: Option<f64>,
    /// JSON object of rate overrides, applied on top of the preset.
    #[arg(long)]
    rates: Option<PathBuf>,
    /// Most probability entries the generated model may hold.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Solve {
    model: PathBuf,
    /// Required for POMDPs and DecPOMDPs.
    #[arg(long)]
    horizon: Option<usize>,
    /// MDP convergence tolerance.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// MDP iteration cap; required when the discount is 1.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Lifted models only: every member of a partition runs the same plan.
    #[arg(long)]
    peak_only: bool,
    #[command(flatten)]
    caps: CapArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeSize {
    #[arg(long, value_enum, conflicts_with_all = ["model", "params"])]
    preset: Option<NanoPreset>,
    /// Measure a ground or lifted model file.
    #[arg(long, conflicts_with = "params")]
    model: Option<PathBuf>,
    /// Uniform parameters `s,K,n,a,o`.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RandomKind {
    Mdp,
    Pomdp,
    Decpomdp,
    Lifted,
}

#[derive(Args)]
struct GenRandom {
    #[arg(long, value_enum)]
    kind: RandomKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// States (MDP, POMDP) or the maximum state count (DecPOMDPs).
    #[arg(long, default_value_t = 3)]
    states: usize,
    /// Actions and observations (MDP, POMDP) or their maximum per agent.
    #[arg(long, default_value_t = 2)]
    range: usize,
    /// Maximum agent count (DecPOMDPs).
    #[arg(long, default_value_t = 3)]
    agents: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Writes `text` to `out`, or to stdout without one.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Result documents go to `out` when given; the summary always goes to stdout.
fn emit_result(out: Option<&Path>, doc: &Value) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, to_canonical_string(doc))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn params(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}

fn kind_summary(m: &Model) -> String {
    match m {
        Model::Mdp(m) => format!(
            "mdp: {} states, {} actions",
            m.num_states(),
            m.actions.len()
        ),
        Model::Pomdp(m) => format!(
            "pomdp: {} states, {} actions, {} observations",
            m.num_states(),
            m.base.actions.len(),
            m.num_observations()
        ),
        Model::DecPomdp(m) => format!(
            "decpomdp: {} agents, {} states",
            m.num_agents(),
            m.num_states()
        ),
        Model::Lifted(m) => format!(
            "lifted-decpomdp: {} agents in {} partitions (sizes {:?}), {} states",
            m.num_agents(),
            m.num_partitions(),
            m.partitioning.sizes(),
            m.num_states()
        ),
    }
}

fn gen_nano(args: &GenNano) -> Result<()> {
    let mut p = match args.preset {
        Some(NanoPreset::Paper) => nano_paper_preset(),
        Some(NanoPreset::Desk) => nano_desk_preset(),
        None => NanoParams::default(),
    };
    if let Some(path) = &args.rates {
        p.rates = p.rates.with_overrides(&std::fs::read_to_string(path)?)?;
    }
    p.kappa = args.kappa.unwrap_or(p.kappa);
    p.iota = args.iota.unwrap_or(p.iota);
    p.partition_size = args.partition_size.unwrap_or(p.partition_size);
    p.release_threshold = args.theta.unwrap_or(p.release_threshold);
    match generate_nano_with_cap(&p, args.cap) {
        Ok(m) => {
            eprintln!("{}", kind_summary(&Model::Lifted(m.clone())));
            emit(args.out.as_deref(), &write_model(&m.into()))
        }
        Err(e) if e.is_capacity() && matches!(args.preset, Some(NanoPreset::Paper)) => {
            eprintln!("model too large to enumerate ({e}); writing its size parameters instead");
            emit(
                args.out.as_deref(),
                &to_canonical_string(&size_params_document(&p.size_params()?)),
            )
        }
        Err(e) => Err(e),
    }
}

fn lift_cmd(model: &Path, out: Option<&Path>) -> Result<()> {
    let Model::DecPomdp(g) = read_model_file(model)? else {
        return Err(params("lift expects a decpomdp model"));
    };
    let part = symmetry_refine(&g, &range_partition(&g), DEFAULT_ENUMERATION_CAP)?;
    let lifted = lift(&g, &part)?;
    eprintln!("{}", kind_summary(&Model::Lifted(lifted.clone())));
    emit(out, &write_model(&lifted.into()))
}

fn ground_cmd(model: &Path, out: Option<&Path>) -> Result<()> {
    let Model::Lifted(l) = read_model_file(model)? else {
        return Err(params("ground expects a lifted-decpomdp model"));
    };
    let g = ground(&l, DEFAULT_ENUMERATION_CAP)?;
    eprintln!("{}", kind_summary(&Model::DecPomdp(g.clone())));
    emit(out, &write_model(&g.into()))
}

fn need_horizon(h: Option<usize>) -> Result<usize> {
    h.ok_or_else(|| params("--horizon is required for this model kind"))
}

fn solve(args: &Solve) -> Result<()> {
    let model = read_model_file(&args.model)?;
    let caps = SolverCaps::from(args.caps);
    if args.peak_only && !matches!(model, Model::Lifted(_)) {
        return Err(params("--peak-only applies to lifted models only"));
    }
    println!("{}", kind_summary(&model));
    let doc = match &model {
        Model::Mdp(m) => {
            if args.epsilon.is_nan() || args.epsilon <= 0.0 {
                return Err(params("--epsilon must be positive"));
            }
            let (u, policy) = mdp_value_iteration_capped(m, args.epsilon, args.max_iterations)?;
            println!("iterations: {} (converged: {})", u.iterations, u.converged);
            for s in 0..m.num_states() {
                println!(
                    "  {:<12} U = {:<24} {}",
                    m.states.label(s),
                    u.values[s],
                    m.actions.label(policy.actions[s])
                );
            }
            mdp_solution_document(m, &u, &policy)
        }
        Model::Pomdp(m) => {
            let sol = pomdp_plan_iteration_with(m, need_horizon(args.horizon)?, caps)?;
            println!(
                "horizon {}: {} undominated plans",
                sol.horizon,
                sol.vectors.len()
            );
            if let Some(b) = &m.initial_belief {
                println!("value at initial belief: {}", sol.value_at(b.probs()));
            }
            pomdp_solution_document(m, &sol)
        }
        Model::DecPomdp(m) => {
            let sol = decpomdp_exhaustive_with(m, need_horizon(args.horizon)?, caps)?;
            println!("horizon {}: value {}", sol.policy.horizon, sol.value);
            dec_solution_document(&model, &sol, false)
        }
        Model::Lifted(m) => {
            let sol = lifted_exhaustive_with(m, need_horizon(args.horizon)?, args.peak_only, caps)?;
            println!("horizon {}: value {}", sol.policy.horizon, sol.value);
            dec_solution_document(&model, &sol, args.peak_only)
        }
    };
    emit_result(args.out.as_deref(), &doc)
}

/// Integers print without a fractional part.
fn log2_cell(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.12}")
    }
}

fn print_size_table(r: &SizeReport) {
    let p = &r.params;
    println!(
        "s = {}, N = {}, K = {}, n = {}, a = {}, o = {}",
        p.s, p.agents, p.partitions, p.n, p.a, p.o
    );
    println!("{:<8} {:>22} {:>22}", "model", "log2 |T|", "log2 |Omega|");
    for (name, t, o) in [
        ("ground", r.log2_t_ground, r.log2_omega_ground),
        ("lifted", r.log2_t_lifted, r.log2_omega_lifted),
        ("peak", r.log2_t_peak, r.log2_omega_peak),
    ] {
        println!("{name:<8} {:>22} {:>22}", log2_cell(t), log2_cell(o));
    }
    println!(
        "lifted transition bound no larger than ground: {}",
        r.lifted_not_larger
    );
}

fn parse_uniform(spec: &str) -> Result<SizeParams> {
    let v: Vec<u64> = spec
        .split(',')
        .map(|x| x.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| params(format!("--params {spec:?}: {e}")))?;
    let [s, k, n, a, o] = v[..] else {
        return Err(params("--params takes five integers s,K,n,a,o"));
    };
    SizeParams::uniform(s, k, n, a, o)
}

fn analyze_size(args: &AnalyzeSize) -> Result<()> {
    let p = match (&args.preset, &args.model, &args.params) {
        (Some(NanoPreset::Paper), _, _) => nano_paper_preset().size_params()?,
        (Some(NanoPreset::Desk), _, _) => nano_desk_preset().size_params()?,
        (_, Some(path), _) => match read_model_file(path)? {
            Model::DecPomdp(g) => SizeParams::from_ground(&g)?,
            Model::Lifted(l) => SizeParams::from_lifted(&l)?,
            _ => {
                return Err(params(
                    "analyze-size needs a decpomdp or lifted-decpomdp model",
                ))
            }
        },
        (_, _, Some(spec)) => parse_uniform(spec)?,
        _ => return Err(params("give one of --preset, --model or --params")),
    };
    let r = size_report(&p);
    print_size_table(&r);
    emit_result(args.out.as_deref(), &size_report_document(&r))
}

fn verify(model: &Path, horizon: usize, caps: CapArgs, out: Option<&Path>) -> Result<()> {
    let Model::DecPomdp(g) = read_model_file(model)? else {
        return Err(params("verify-equivalence expects a decpomdp model"));
    };
    let r = verify_equivalence_with(&g, horizon, caps.into())?;
    println!("partitions: {:?}", r.partitioning.sizes());
    println!("ground value: {}", r.ground_value);
    println!("lifted value: {}", r.lifted_value);
    println!("delta: {:e}", r.delta);
    println!(
        "joint observation keys: ground {}, lifted {}",
        r.ground_keys.1, r.lifted_keys.1
    );
    println!("pass: {}", r.pass);
    emit_result(out, &equivalence_document(&r))?;
    if r.pass {
        Ok(())
    } else {
        Err(Error::Validation {
            field: "delta".into(),
            message: format!("lifted and ground values differ by {:e}", r.delta),
        })
    }
}

fn gen_random(args: &GenRandom) -> Result<()> {
    if args.states == 0 || args.range == 0 || args.agents == 0 {
        return Err(params("--states, --range and --agents must be positive"));
    }
    let mut rng = seeded(args.seed);
    let model: Model = match args.kind {
        RandomKind::Mdp => random_mdp(&mut rng, args.states, args.range).into(),
        RandomKind::Pomdp => random_pomdp(&mut rng, args.states, args.range, args.range).into(),
        RandomKind::Lifted => {
            random_liftable(&mut rng, args.agents, args.range, args.states)?.into()
        }
        RandomKind::Decpomdp => {
            let l = random_liftable(&mut rng, args.agents, args.range, args.states)?;
            ground(&l, DEFAULT_ENUMERATION_CAP)?.into()
        }
    };
    emit(args.out.as_deref(), &write_model(&model))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { model } => {
            let text = std::fs::read_to_string(model)?;
            let m = parse_model(&text)?;
            println!("valid {}", kind_summary(&m));
            Ok(())
        }
        Command::GenNano(args) => gen_nano(args),
        Command::Lift { model, out } => lift_cmd(model, out.as_deref()),
        Command::Ground { model, out } => ground_cmd(model, out.as_deref()),
        Command::Solve(args) => solve(args),
        Command::AnalyzeSize(args) => analyze_size(args),
        Command::VerifyEquivalence {
            model,
            horizon,
            caps,
            out,
        } => verify(model, *horizon, *caps, out.as_deref()),
        Command::GenRandom(args) => gen_random(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprint!("error[E_USAGE]: {}", msg.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(if e.is_capacity() { 2 } else { 1 })
        }
    }
}
