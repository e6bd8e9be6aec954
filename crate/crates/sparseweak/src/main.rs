//! Command-line front end: config parsing, subcommand dispatch, report
//! emission. Exit codes: 0 success, 1 validation error, 2 computational
//! refusal (a divergent c_phi makes the hypothesis of the estimate fail).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sparseweak::config::{
    parse_removal, ExperimentConfig, FlatConfig, GridFnSpec, SparseSpec, YoungSpec,
};
use sparseweak::error::Error;
use sparseweak::grid::{Grid, GridFunction};
use sparseweak::maximal::{dyadic_frac_maximal, iterated_bound_weight, orlicz_maximal};
use sparseweak::report::{
    experiment_csv, experiment_json, fmt_f64, sanity_json, write_file,
};
use sparseweak::sparse::{LayerDecomposition, SparseFamily, VerifyMode};
use sparseweak::weaktype::{run_experiment, sanity_suite, SanityConfig};
use sparseweak::young::CPhi;

#[derive(Parser)]
#[command(name = "sparseweak", version, about = "dyadic sparse operators and weak-type experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Young-function engine: evaluate phi, its conjugate, the conjugate
    /// inverse (log2 argument), or the series constant c_phi.
    Young(YoungArgs),
    /// Generate a sparse family, verify it, and write it to a file.
    BuildSparse(BuildSparseArgs),
    /// Apply the fractional sparse operator A^S to a grid function.
    Apply(ApplyArgs),
    /// Apply a maximal operator (frac | orlicz | iterated) to a grid function.
    Maximal(MaximalArgs),
    /// Stratify a family against a function: level sets, layers, E/bottom
    /// set statistics and decay ratios.
    Decompose(DecomposeArgs),
    /// Run the end-to-end weak-type experiment and emit JSON/CSV reports.
    Weaktype(RunArgs),
    /// Run the sanity suites (Fefferman-Stein, monotonicity, adversarial).
    Sanity(SanityArgs),
}

#[derive(Args)]
struct YoungArgs {
    /// power | loglog | linear | table
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// JSON array of [t, phi(t)] knots for the table kind
    #[arg(long)]
    table: Option<String>,
    /// Full young spec as JSON (overrides the individual flags)
    #[arg(long)]
    young: Option<String>,
    /// Evaluate phi at T
    #[arg(long, value_name = "T")]
    eval: Option<f64>,
    /// Evaluate the conjugate psi at S
    #[arg(long, value_name = "S")]
    conjugate: Option<f64>,
    /// Evaluate psi^{-1}(y) given LOG2Y = log2(y)
    #[arg(long, value_name = "LOG2Y")]
    inverse: Option<f64>,
    /// Compute the series constant c_phi
    #[arg(long)]
    cphi: bool,
}

#[derive(Args)]
struct BuildSparseArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 10)]
    l: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.125)]
    lambda0: f64,
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, default_value_t = 4)]
    level_gap: u32,
    #[arg(long, default_value_t = 12)]
    target_size: usize,
    /// sum | union
    #[arg(long, default_value = "sum")]
    verify_mode: String,
    /// Output path for the family file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid function spec (JSON) or file for f
    #[arg(long)]
    f: Option<String>,
    /// Sparse family spec (JSON) or file
    #[arg(long)]
    sparse: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the resulting grid function
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaximalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// frac | orlicz | iterated
    #[arg(long, default_value = "frac")]
    op: String,
    /// Grid function spec (JSON) for the input
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    young: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    sparse: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    young: Option<String>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    w: Option<String>,
    #[arg(long)]
    sparse: Option<String>,
    /// frac | plain
    #[arg(long)]
    removal: Option<String>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SanityArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 48)]
    climb_steps: usize,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sparseweak: {e}");
            match e {
                Error::DivergentCPhi => 2,
                _ => 1,
            }
        }
    });
}

fn dispatch(cli: Cli) -> sparseweak::Result<()> {
    match cli.cmd {
        Cmd::Young(args) => cmd_young(args),
        Cmd::BuildSparse(args) => cmd_build_sparse(args),
        Cmd::Apply(args) => cmd_apply(args),
        Cmd::Maximal(args) => cmd_maximal(args),
        Cmd::Decompose(args) => cmd_decompose(args),
        Cmd::Weaktype(args) => cmd_weaktype(args),
        Cmd::Sanity(args) => cmd_sanity(args),
    }
}

fn young_from_args(args: &YoungArgs) -> sparseweak::Result<sparseweak::young::YoungFunction> {
    if let Some(json) = &args.young {
        return YoungSpec::parse(json)?.build();
    }
    let kind = args
        .kind
        .clone()
        .ok_or_else(|| Error::parse("young: --kind or --young is required"))?;
    let table = match &args.table {
        Some(json) => Some(
            serde_json::from_str(json)
                .map_err(|e| Error::parse(format!("bad table json: {e}")))?,
        ),
        None => None,
    };
    YoungSpec {
        kind,
        p: args.p,
        delta: args.delta,
        table,
    }
    .build()
}

fn cmd_young(args: YoungArgs) -> sparseweak::Result<()> {
    let phi = young_from_args(&args)?;
    let mut did_something = false;
    if let Some(t) = args.eval {
        println!("phi({t}) = {}", fmt_f64(phi.eval(t)?));
        did_something = true;
    }
    if let Some(s) = args.conjugate {
        println!("psi({s}) = {}", fmt_f64(phi.conjugate(s)?));
        did_something = true;
    }
    if let Some(log2y) = args.inverse {
        println!(
            "psi_inv(2^{log2y}) = {}",
            fmt_f64(phi.conjugate_inverse(log2y)?)
        );
        did_something = true;
    }
    if args.cphi || !did_something {
        match phi.c_phi(1e-9)? {
            CPhi::Converged { value, terms } => {
                println!("c_phi = {} ({terms} terms)", fmt_f64(value));
            }
            CPhi::Divergent { terms, last_term } => {
                if terms == 0 {
                    println!("c_phi diverges: psi_inv is bounded, every term is at least {}", fmt_f64(last_term));
                } else {
                    println!(
                        "c_phi diverges: terms stuck near {} after {terms} partial sums",
                        fmt_f64(last_term)
                    );
                }
                return Err(Error::DivergentCPhi);
            }
        }
    }
    Ok(())
}

fn cmd_build_sparse(args: BuildSparseArgs) -> sparseweak::Result<()> {
    let mode = match args.verify_mode.as_str() {
        "sum" => VerifyMode::CarlesonSum,
        "union" => VerifyMode::UnionVolume,
        other => {
            return Err(Error::parse(format!(
                "verify mode must be \"sum\" or \"union\", got {other:?}"
            )))
        }
    };
    let generated = sparseweak::sparse::generate_sparse(&sparseweak::sparse::GenerateParams {
        seed: args.seed,
        d: args.d,
        level: args.l,
        lambda0: args.lambda0,
        n_regular: args.n,
        level_gap: args.level_gap,
        target_size: args.target_size,
    })?;
    let fam = &generated.family;
    let sparse_rep = fam.verify_sparse(mode);
    let reg_rep = fam.verify_n_regular(args.n)?;
    println!(
        "family: {} cubes ({}), carleson {}: worst ratio {} vs bound {}, regular(N={}) {}",
        fam.len(),
        if generated.reached_target {
            "complete"
        } else {
            "partial: budget or depth exhausted"
        },
        if sparse_rep.pass { "pass" } else { "FAIL" },
        fmt_f64(sparse_rep.worst_ratio),
        fmt_f64(sparse_rep.bound),
        args.n,
        if reg_rep.pass { "pass" } else { "FAIL" },
    );
    if let Some(path) = args.out {
        write_file(&path, &fam.to_text())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

struct CommonInputs {
    grid: Grid,
    f: GridFunction,
    family: Option<SparseFamily>,
}

fn load_inputs(
    config: &Option<PathBuf>,
    d: Option<usize>,
    l: Option<u32>,
    f: &Option<String>,
    sparse: &Option<String>,
    seed: Option<u64>,
    need_family: bool,
) -> sparseweak::Result<CommonInputs> {
    let mut cfg = ExperimentConfig::default_shell();
    if let Some(path) = config {
        FlatConfig::load(path)?.apply_to(&mut cfg)?;
    }
    if let Some(d) = d {
        cfg.d = d;
    }
    if let Some(l) = l {
        cfg.level = l;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(fjson) = f {
        cfg.f_spec = GridFnSpec::parse(fjson)?;
    }
    if let Some(sjson) = sparse {
        cfg.sparse = SparseSpec::parse(sjson)?;
    }
    let grid = cfg.grid()?;
    let f = cfg.f_spec.materialize(grid, cfg.seed)?;
    let family = if need_family {
        Some(cfg.sparse.materialize(grid, cfg.seed)?)
    } else {
        None
    };
    Ok(CommonInputs { grid, f, family })
}

fn cmd_apply(args: ApplyArgs) -> sparseweak::Result<()> {
    let inputs = load_inputs(
        &args.config,
        args.d,
        args.l,
        &args.f,
        &args.sparse,
        args.seed,
        true,
    )?;
    let alpha = args.alpha.unwrap_or(0.0);
    let nu = args.nu.unwrap_or(1.0);
    let family = inputs.family.expect("family requested");
    let a = sparseweak::sparse::sparse_operator(&inputs.f, &family, alpha, nu)?;
    let max = a.values().iter().cloned().fold(0.0f64, f64::max);
    println!(
        "A^S f on {} cells: max {}, total {}",
        inputs.grid.cell_count(),
        fmt_f64(max),
        fmt_f64(a.total())
    );
    if let Some(path) = args.out {
        write_file(&path, &a.to_text())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_maximal(args: MaximalArgs) -> sparseweak::Result<()> {
    let inputs = load_inputs(
        &args.config,
        args.d,
        args.l,
        &args.f,
        &None,
        args.seed,
        false,
    )?;
    let alpha = args.alpha.unwrap_or(0.0);
    let out = match args.op.as_str() {
        "frac" => dyadic_frac_maximal(&inputs.f, alpha)?,
        "orlicz" => {
            let phi = match &args.young {
                Some(json) => YoungSpec::parse(json)?.build()?,
                None => return Err(Error::parse("maximal --op orlicz requires --young")),
            };
            orlicz_maximal(&inputs.f, &phi)?
        }
        "iterated" => {
            let phi = match &args.young {
                Some(json) => YoungSpec::parse(json)?.build()?,
                None => return Err(Error::parse("maximal --op iterated requires --young")),
            };
            iterated_bound_weight(&inputs.f, &phi, alpha)?
        }
        other => {
            return Err(Error::parse(format!(
                "maximal op must be frac | orlicz | iterated, got {other:?}"
            )))
        }
    };
    let max = out.values().iter().cloned().fold(0.0f64, f64::max);
    println!("{} on {} cells: max {}", args.op, inputs.grid.cell_count(), fmt_f64(max));
    if let Some(path) = args.out {
        write_file(&path, &out.to_text())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_decompose(args: DecomposeArgs) -> sparseweak::Result<()> {
    let inputs = load_inputs(
        &args.config,
        args.d,
        args.l,
        &args.f,
        &args.sparse,
        args.seed,
        true,
    )?;
    let alpha = args.alpha.unwrap_or(0.0);
    let lambda1 = args.lambda1.unwrap_or(4.0);
    let family = inputs.family.expect("family requested");
    let dec = LayerDecomposition::build(&family, &inputs.f, alpha, lambda1)?;
    let mut json = String::from("{\n  \"per_k\": [");
    let mut first = true;
    for (k, kd) in &dec.per_k {
        // per-layer total volumes and their successive decay ratios
        let vols: Vec<f64> = kd
            .layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|&i| family.cubes()[i].volume())
                    .sum::<f64>()
            })
            .collect();
        let ratios: Vec<f64> = vols
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        // geometric-mean fit of the per-layer decay
        let fitted = {
            let pos: Vec<f64> = ratios.iter().cloned().filter(|r| *r > 0.0).collect();
            if pos.is_empty() {
                0.0
            } else {
                (pos.iter().map(|r| r.ln()).sum::<f64>() / pos.len() as f64).exp()
            }
        };
        println!(
            "k={k}: |S_k|={}, layers={}, u={}, layer volumes [{}], decay ratios [{}], fitted {:.4}",
            kd.members.len(),
            kd.layers.len(),
            kd.u,
            vols.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "),
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", "),
            fitted,
        );
        if !first {
            json.push(',');
        }
        first = false;
        let layer_sizes = kd
            .layers
            .iter()
            .map(|l| l.len().to_string())
            .collect::<Vec<_>>()
            .join(",");
        let ratio_list = ratios
            .iter()
            .map(|r| fmt_f64(*r))
            .collect::<Vec<_>>()
            .join(",");
        let _ = std::fmt::Write::write_fmt(
            &mut json,
            format_args!(
                "\n    {{\"k\":{k},\"size\":{},\"u\":{},\"layer_sizes\":[{layer_sizes}],\"decay_ratios\":[{ratio_list}],\"fitted_decay\":{}}}",
                kd.members.len(),
                kd.u,
                fmt_f64(fitted)
            ),
        );
    }
    json.push_str(if first { "]\n}\n" } else { "\n  ]\n}\n" });
    if dec.per_k.is_empty() {
        println!("no level sets: every cube average is zero or above 1/lambda1");
    }
    if let Some(path) = args.out_json {
        write_file(&path, &json)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_weaktype(args: RunArgs) -> sparseweak::Result<()> {
    let mut cfg = ExperimentConfig::default_shell();
    if let Some(path) = &args.config {
        FlatConfig::load(path)?.apply_to(&mut cfg)?;
    }
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = args.l {
        cfg.level = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.nu {
        cfg.nu = v;
    }
    if let Some(v) = args.lambda1 {
        cfg.lambda1 = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.young {
        cfg.young = YoungSpec::parse(v)?;
    }
    if let Some(v) = &args.f {
        cfg.f_spec = GridFnSpec::parse(v)?;
    }
    if let Some(v) = &args.w {
        cfg.w_spec = GridFnSpec::parse(v)?;
    }
    if let Some(v) = &args.sparse {
        cfg.sparse = SparseSpec::parse(v)?;
    }
    if let Some(v) = &args.removal {
        cfg.removal = parse_removal(v)?;
    }
    if let Some(v) = args.out_json {
        cfg.out_json = Some(v);
    }
    if let Some(v) = args.out_csv {
        cfg.out_csv = Some(v);
    }

    let report = run_experiment(&cfg)?;
    let a = &report.aggregate;
    println!(
        "weaktype: {} trials, c_phi {}, max ratio {}, mean {}, p95 {}",
        report.trials.len(),
        fmt_f64(a.c_phi),
        fmt_f64(a.max_ratio),
        fmt_f64(a.mean_ratio),
        fmt_f64(a.p95_ratio)
    );
    if let Some(path) = &cfg.out_json {
        write_file(path, &experiment_json(&report))?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &cfg.out_csv {
        write_file(path, &experiment_csv(&report))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sanity(args: SanityArgs) -> sparseweak::Result<()> {
    let cfg = SanityConfig {
        d: args.d,
        trials: args.trials,
        seed: args.seed,
        delta: args.delta,
        alpha: args.alpha,
        levels: vec![6, 8, 10],
        climb_steps: args.climb_steps,
    };
    let report = sanity_suite(&cfg)?;
    println!(
        "sanity: FS max ratio {} over {} trials; monotonicity violations {}/{}",
        fmt_f64(report.fs_max_ratio),
        report.fs_trials,
        report.mono_violations,
        report.mono_trials
    );
    for row in &report.adversarial {
        println!(
            "adversarial L={}: best cell {} ratio {}",
            row.level,
            row.cell,
            fmt_f64(row.ratio)
        );
    }
    if let Some(path) = args.out_json {
        write_file(&path, &sanity_json(&report))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
