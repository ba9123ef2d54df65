//! Command-line front end: `run` a case, print a `convergence` table, or
//! `check` the discrete invariants on a small configuration.

use clap::{Args, Parser, Subcommand};

use mcl_dgsem::app::{self, config, RunConfig};
use mcl_dgsem::euler;
use mcl_dgsem::limiter::Pipeline;
use mcl_dgsem::semidisc::RhsMode;

#[derive(Parser)]
#[command(name = "mcl-dgsem", about = "LGL-DGSEM Euler solver with subcell convex limiting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CaseArgs {
    /// Benchmark case: density_wave, khi, sedov, jet, custom.
    #[arg(long)]
    case: Option<String>,
    /// Read a key=value config file first; flags override its values.
    #[arg(long)]
    config: Option<String>,
    /// Polynomial degree N.
    #[arg(long)]
    n: Option<usize>,
    /// Elements per direction, "n" or "nx,ny".
    #[arg(long)]
    elements: Option<String>,
    /// Spatial dimension (1 or 2).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    /// Limiter pipeline: off, global, A, B, C.
    #[arg(long)]
    pipeline: Option<String>,
    /// Pressure limiter mode: sharp or cautious.
    #[arg(long)]
    pressure: Option<String>,
    /// Entropy limiter: on or off.
    #[arg(long)]
    entropy_limiter: Option<String>,
    /// Volume flux: central, ranocha, chandrashekar.
    #[arg(long)]
    volume_flux: Option<String>,
    /// Output directory for manifest, diagnostics, snapshots, summary.
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snapshot_times: Option<String>,
    /// Diagnostics row every this many steps.
    #[arg(long)]
    diag_every: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one case to t_final and write run artifacts.
    Run(CaseArgs),
    /// Run the factor-2 refinement ladder and print the EOC table.
    Convergence {
        #[command(flatten)]
        case: CaseArgs,
        /// Comma-separated element counts of the ladder.
        #[arg(long, default_value = "4,8,16,32")]
        ladder: String,
    },
    /// Run the discrete invariant suite on a small configuration.
    Check(CaseArgs),
}

fn resolve(args: &CaseArgs) -> Result<RunConfig, mcl_dgsem::SolverError> {
    let mut cfg = match (&args.config, &args.case) {
        (Some(path), _) => {
            let cfg = RunConfig::from_text(&std::fs::read_to_string(path)?)?;
            if let Some(case) = &args.case {
                // An explicit --case on top of --config restarts from that
                // case's defaults; the remaining flags still apply.
                let name = config::CaseName::parse(case)?;
                if name != cfg.case {
                    RunConfig::default_for(name)
                } else {
                    cfg
                }
            } else {
                cfg
            }
        }
        (None, Some(case)) => RunConfig::default_for(config::CaseName::parse(case)?),
        (None, None) => RunConfig::default_for(config::CaseName::DensityWave),
    };
    if let Some(n) = args.n {
        cfg.degree = n;
    }
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    if let Some(e) = &args.elements {
        let parts: Vec<usize> = e
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| mcl_dgsem::SolverError::Config(format!("bad --elements '{e}'")))?;
        cfg.elements = match parts.as_slice() {
            [n] => [*n, *n],
            [a, b] => [*a, *b],
            _ => {
                return Err(mcl_dgsem::SolverError::Config(
                    "--elements takes 'n' or 'nx,ny'".into(),
                ))
            }
        };
    }
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    if let Some(c) = args.cfl {
        cfg.cfl = c;
    }
    if let Some(t) = args.t_final {
        cfg.t_final = t;
    }
    if let Some(p) = &args.pipeline {
        cfg.pipeline = config::parse_pipeline(p)?;
    }
    if let Some(p) = &args.pressure {
        cfg.pressure = config::parse_pressure(p)?;
    }
    if let Some(e) = &args.entropy_limiter {
        cfg.entropy_limiter = match e.as_str() {
            "on" => true,
            "off" => false,
            _ => {
                return Err(mcl_dgsem::SolverError::Config(
                    "--entropy-limiter takes on or off".into(),
                ))
            }
        };
    }
    if let Some(f) = &args.volume_flux {
        cfg.volume_flux = config::parse_volume_flux(f)?;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = &args.snapshot_times {
        cfg.snapshot_times = s
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                mcl_dgsem::SolverError::Config(format!("bad --snapshot-times '{s}'"))
            })?;
    }
    if let Some(d) = args.diag_every {
        cfg.diag_every = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => resolve(args).and_then(cmd_run),
        Command::Convergence { case, ladder } => {
            resolve(case).and_then(|cfg| cmd_convergence(cfg, ladder))
        }
        Command::Check(args) => resolve(args).and_then(cmd_check),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn cmd_run(cfg: RunConfig) -> Result<(), mcl_dgsem::SolverError> {
    let out = app::run(&cfg)?;
    println!(
        "case {} finished: {} steps to t = {}",
        cfg.case.as_str(),
        out.steps,
        out.t
    );
    println!(
        "rho range [{:.6e}, {:.6e}], p range [{:.6e}, {:.6e}]",
        out.rho_range.0, out.rho_range.1, out.p_range.0, out.p_range.1
    );
    if let Some(row) = out.rows.last() {
        println!(
            "mean limiting factors: rho {:.4}, v1 {:.4}, v2 {:.4}, E {:.4}, p {:.4}, s {:.4}",
            row.alpha_rho, row.alpha_v1, row.alpha_v2, row.alpha_e, row.alpha_p, row.alpha_s
        );
    }
    if let Some(dir) = &cfg.out {
        println!("artifacts written to {dir}");
    }
    Ok(())
}

fn cmd_convergence(cfg: RunConfig, ladder: &str) -> Result<(), mcl_dgsem::SolverError> {
    let counts: Vec<usize> = ladder
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| mcl_dgsem::SolverError::Config(format!("bad --ladder '{ladder}'")))?;
    let result = app::convergence_ladder(&cfg, &counts)?;
    print!("{}", app::format_ladder(&result));
    Ok(())
}

/// Small-configuration invariant suite: SBP identities, flux properties,
/// free-stream preservation, and a limited step with full verification.
fn cmd_check(cfg: RunConfig) -> Result<(), mcl_dgsem::SolverError> {
    use mcl_dgsem::basis;

    for degree in 1..=7 {
        let ops = basis::operators(degree)?;
        let n1 = degree + 1;
        let mut worst: f64 = 0.0;
        for i in 0..n1 {
            let mut row = 0.0;
            for j in 0..n1 {
                let qqt = ops.q.get(i, j) + ops.q.get(j, i) - ops.b.get(i, j);
                worst = worst.max(qqt.abs());
                assert!(ops.s.get(i, j) + ops.s.get(j, i) == 0.0);
                row += ops.diff.get(i, j);
            }
            worst = worst.max(row.abs());
        }
        if worst > 1e-13 {
            return Err(mcl_dgsem::SolverError::Invariant(format!(
                "SBP identity residual {worst} at degree {degree}"
            )));
        }
    }
    println!("SBP identities: ok (N = 1..7)");

    let gas = euler::GasModel::new(cfg.gamma)?;
    let mut worst: f64 = 0.0;
    let mut x = 0.123456_f64;
    let mut rand = move || {
        // Small deterministic LCG; enough for a smoke suite.
        x = (x * 16807.0) % 2147483647.0;
        x / 2147483647.0
    };
    for _ in 0..1000 {
        let mk = |r: &mut dyn FnMut() -> f64| {
            euler::State::from_primitives(
                0.1 + 5.0 * r(),
                [4.0 * r() - 2.0, 4.0 * r() - 2.0],
                0.1 + 5.0 * r(),
                &gas,
            )
        };
        let a = mk(&mut rand);
        let b = mk(&mut rand);
        for flux in [euler::TwoPointFlux::Ranocha, euler::TwoPointFlux::Chandrashekar] {
            let f = flux.evaluate(&a, &b, euler::Dir::X, &gas)?;
            let va = euler::entropy_variables(&a, &gas)?;
            let vb = euler::entropy_variables(&b, &gas)?;
            let psi = euler::entropy_potential(&b, euler::Dir::X, &gas)?
                - euler::entropy_potential(&a, euler::Dir::X, &gas)?;
            let mut prod = 0.0;
            let mut scale: f64 = psi.abs().max(1.0);
            for k in 0..4 {
                prod += (vb[k] - va[k]) * f[k];
                scale = scale.max(((vb[k] - va[k]) * f[k]).abs());
            }
            worst = worst.max((prod - psi).abs() / scale);
        }
    }
    if worst > 1e-11 {
        return Err(mcl_dgsem::SolverError::Invariant(format!(
            "entropy-conservation residual {worst}"
        )));
    }
    println!("two-point flux entropy conservation: ok (residual {worst:.2e})");

    // One limited step on a coarse version of the requested case.
    let mut small = cfg.clone();
    small.elements = [small.elements[0].min(8), small.elements[1].min(8)];
    small.t_final = small.t_final.min(1e-3);
    small.out = None;
    small.pipeline = if small.pipeline == Pipeline::Off {
        Pipeline::C
    } else {
        small.pipeline
    };
    let (mut disc, u, _) = app::driver::build(&small)?;
    let mut rhs = vec![[0.0; 4]; disc.n_nodes()];
    let stats = disc.assemble_rhs(&u, &mut rhs, RhsMode::Diagnose)?;
    if stats.verify.rho_bound_excess > 1e-10 || stats.verify.prim_bound_excess > 1e-10 {
        return Err(mcl_dgsem::SolverError::Invariant(format!(
            "bound violation: rho {}, primitives {}",
            stats.verify.rho_bound_excess, stats.verify.prim_bound_excess
        )));
    }
    println!(
        "limited assembly on {}: bounds ok, min bar-state pressure {:.3e}",
        small.case.as_str(),
        stats.verify.min_bar_pressure
    );
    println!("check passed");
    Ok(())
}
