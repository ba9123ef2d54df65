//! The time loop: configuration to run artifacts (manifest, diagnostics
//! CSV, snapshots, summary) plus the convergence-ladder harness.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Result, SolverError};
use crate::euler::{self, Cons};
use crate::limiter::LimiterConfig;
use crate::semidisc::{RhsMode, Semidiscretization, Solution, VerifyReport};
use crate::timeint::{self, Integrator};

use super::cases::{builtin_case, CaseSetup};
use super::config::RunConfig;
use super::norms;

/// One diagnostics record: time, step size, mean limiter factors per stage,
/// solution extrema, and conserved totals.
#[derive(Clone, Copy, Debug)]
pub struct DiagRow {
    pub t: f64,
    pub dt: f64,
    pub alpha_rho: f64,
    pub alpha_v1: f64,
    pub alpha_v2: f64,
    pub alpha_e: f64,
    pub alpha_p: f64,
    pub alpha_s: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub totals: Cons,
}

/// Everything a caller needs to inspect a finished run.
pub struct RunOutput {
    pub steps: usize,
    pub t: f64,
    pub rows: Vec<DiagRow>,
    pub solution: Solution,
    pub disc: Semidiscretization,
    /// Global extrema over the whole run (every accepted step).
    pub rho_range: (f64, f64),
    pub p_range: (f64, f64),
    /// Worst invariant violations over all diagnosed stages.
    pub verify: VerifyReport,
}

fn limiter_config(cfg: &RunConfig) -> LimiterConfig {
    LimiterConfig {
        pipeline: cfg.pipeline,
        pressure_mode: cfg.pressure,
        entropy_limiter: cfg.entropy_limiter,
    }
}

/// Builds the discretization and initial solution for a config.
pub fn build(cfg: &RunConfig) -> Result<(Semidiscretization, Solution, CaseSetup)> {
    cfg.validate()?;
    let case = builtin_case(cfg)?;
    let disc = Semidiscretization::new(
        case.mesh.clone(),
        cfg.degree,
        case.gas,
        cfg.volume_flux,
        limiter_config(cfg),
    )?;
    let u = disc.solution_from(|x, y| (case.init)(x, y));
    for (i, s) in u.states.iter().enumerate() {
        if !euler::is_admissible(s, &disc.gas) {
            return Err(SolverError::Inadmissible {
                elem: 0,
                node: i,
                what: "initial condition".into(),
            });
        }
    }
    Ok((disc, u, case))
}

fn extrema(disc: &Semidiscretization, u: &Solution) -> Result<(f64, f64, f64, f64)> {
    let mut rho = (f64::INFINITY, f64::NEG_INFINITY);
    let mut p = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &u.states {
        rho.0 = rho.0.min(s.rho);
        rho.1 = rho.1.max(s.rho);
        let ps = euler::pressure(s, &disc.gas)?;
        p.0 = p.0.min(ps);
        p.1 = p.1.max(ps);
    }
    Ok((rho.0, rho.1, p.0, p.1))
}

/// Runs a configured case to `t_final`, writing artifacts if an output
/// directory is set.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let (mut disc, mut u, _case) = build(cfg)?;
    let out_dir: Option<PathBuf> = cfg.out.as_ref().map(PathBuf::from);
    let mut diag_file = match &out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("manifest.txt"), cfg.to_text())?;
            let mut f = fs::File::create(dir.join("diagnostics.csv"))?;
            writeln!(
                f,
                "t,dt,alpha_rho,alpha_v1,alpha_v2,alpha_e,alpha_p,alpha_s,\
                 rho_min,rho_max,p_min,p_max,mass,mom1,mom2,energy"
            )?;
            Some(f)
        }
        None => None,
    };
    let mut snapshots: Vec<f64> = cfg.snapshot_times.clone();
    snapshots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snapshots.retain(|t| *t <= cfg.t_final);
    let mut next_snapshot = 0usize;

    let mut integ = Integrator::new(disc.n_nodes());
    let mut scratch = vec![[0.0; 4]; disc.n_nodes()];
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut rows: Vec<DiagRow> = Vec::new();
    let mut verify = VerifyReport::default();
    let (mut rho_lo, mut rho_hi, mut p_lo, mut p_hi) = extrema(&disc, &u)?;

    // Snapshot requested at t = 0.
    while next_snapshot < snapshots.len() && snapshots[next_snapshot] <= 0.0 {
        if let Some(dir) = &out_dir {
            write_snapshot(dir, next_snapshot, t, &mut disc, &u, &mut scratch)?;
        }
        next_snapshot += 1;
    }

    while t < cfg.t_final {
        let mut dt = timeint::compute_dt(&mut disc, &u, cfl_of(cfg), t, cfg.t_final)?;
        if next_snapshot < snapshots.len() && t + dt > snapshots[next_snapshot] {
            dt = snapshots[next_snapshot] - t;
        }
        let diagnose = steps % cfg.diag_every == 0 || t + dt >= cfg.t_final;
        let mode = if diagnose { RhsMode::Diagnose } else { RhsMode::Fast };
        let stats = integ.step(&mut disc, &mut u, dt, mode)?;
        t += dt;
        steps += 1;
        let (rlo, rhi, plo, phi) = extrema(&disc, &u)?;
        rho_lo = rho_lo.min(rlo);
        rho_hi = rho_hi.max(rhi);
        p_lo = p_lo.min(plo);
        p_hi = p_hi.max(phi);
        if diagnose {
            merge_verify(&mut verify, &stats.verify);
            let n = stats.interfaces.max(1) as f64;
            let row = DiagRow {
                t,
                dt,
                alpha_rho: stats.sum_rho / n,
                alpha_v1: stats.sum_v[0] / n,
                alpha_v2: stats.sum_v[1] / n,
                alpha_e: stats.sum_e / n,
                alpha_p: stats.sum_pressure / n,
                alpha_s: stats.sum_entropy / n,
                rho_min: rlo,
                rho_max: rhi,
                p_min: plo,
                p_max: phi,
                totals: disc.integrate_conserved(&u),
            };
            if let Some(f) = diag_file.as_mut() {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    row.t,
                    row.dt,
                    row.alpha_rho,
                    row.alpha_v1,
                    row.alpha_v2,
                    row.alpha_e,
                    row.alpha_p,
                    row.alpha_s,
                    row.rho_min,
                    row.rho_max,
                    row.p_min,
                    row.p_max,
                    row.totals[0],
                    row.totals[1],
                    row.totals[2],
                    row.totals[3]
                )?;
            }
            rows.push(row);
        }
        while next_snapshot < snapshots.len() && t >= snapshots[next_snapshot] - 1e-14 {
            if let Some(dir) = &out_dir {
                write_snapshot(dir, next_snapshot, t, &mut disc, &u, &mut scratch)?;
            }
            next_snapshot += 1;
        }
    }

    if let Some(dir) = &out_dir {
        write_snapshot_named(dir, "snapshot_final.txt", t, &mut disc, &u, &mut scratch)?;
        let totals = disc.integrate_conserved(&u);
        let mut f = fs::File::create(dir.join("summary.txt"))?;
        writeln!(f, "steps = {steps}")?;
        writeln!(f, "t_final = {t}")?;
        writeln!(f, "rho_range = [{rho_lo}, {rho_hi}]")?;
        writeln!(f, "p_range = [{p_lo}, {p_hi}]")?;
        writeln!(
            f,
            "totals = {} {} {} {}",
            totals[0], totals[1], totals[2], totals[3]
        )?;
    }

    Ok(RunOutput {
        steps,
        t,
        rows,
        solution: u,
        disc,
        rho_range: (rho_lo, rho_hi),
        p_range: (p_lo, p_hi),
        verify,
    })
}

fn cfl_of(cfg: &RunConfig) -> f64 {
    cfg.cfl
}

fn merge_verify(into: &mut VerifyReport, other: &VerifyReport) {
    into.rho_bound_excess = into.rho_bound_excess.max(other.rho_bound_excess);
    into.prim_bound_excess = into.prim_bound_excess.max(other.prim_bound_excess);
    into.min_bar_pressure = into.min_bar_pressure.min(other.min_bar_pressure);
    into.tadmor_excess = into.tadmor_excess.max(other.tadmor_excess);
}

fn write_snapshot(
    dir: &Path,
    index: usize,
    t: f64,
    disc: &mut Semidiscretization,
    u: &Solution,
    scratch: &mut [Cons],
) -> Result<()> {
    write_snapshot_named(dir, &format!("snapshot_{index:03}.txt"), t, disc, u, scratch)
}

/// One plain-text table: `nx ny t` header, then per-node rows
/// x y rho mom1 mom2 energy p alpha.
fn write_snapshot_named(
    dir: &Path,
    name: &str,
    t: f64,
    disc: &mut Semidiscretization,
    u: &Solution,
    scratch: &mut [Cons],
) -> Result<()> {
    // Refresh interface factors on the current solution for nodal alpha.
    disc.assemble_rhs(u, scratch, RhsMode::Diagnose)?;
    let alpha = disc.nodal_alpha();
    let (nx, ny) = disc.shape();
    let mut f = std::io::BufWriter::new(fs::File::create(dir.join(name))?);
    writeln!(f, "{nx} {ny} {t:.16e}")?;
    for (i, s) in u.states.iter().enumerate() {
        let [x, y] = disc.node_coords(i);
        let c = s.as_cons();
        let p = euler::pressure(s, &disc.gas)?;
        writeln!(
            f,
            "{x:.16e} {y:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {p:.16e} {:.16e}",
            c[0], c[1], c[2], c[3], alpha[i]
        )?;
    }
    Ok(())
}

/// One refinement level of the convergence study.
pub struct LadderLevel {
    pub elements: usize,
    pub errors: Cons,
    pub steps: usize,
}

pub struct LadderResult {
    pub levels: Vec<LadderLevel>,
    /// EOC per equation between consecutive levels.
    pub eoc: Vec<Cons>,
    pub mean_eoc: Cons,
}

/// Runs the case on a factor-2 refinement ladder and measures L2 errors
/// against the case's exact solution.
pub fn convergence_ladder(base: &RunConfig, element_counts: &[usize]) -> Result<LadderResult> {
    let mut levels = Vec::new();
    for &n in element_counts {
        let mut cfg = base.clone();
        cfg.elements = [n, n];
        cfg.out = None;
        cfg.snapshot_times = Vec::new();
        cfg.diag_every = usize::MAX;
        let (_, _, case) = build(&cfg)?;
        let exact = case
            .exact
            .ok_or_else(|| SolverError::Config("case has no exact solution".into()))?;
        let out = run(&cfg)?;
        let errors = norms::l2_error(&out.disc, &out.solution, out.t, exact.as_ref());
        levels.push(LadderLevel {
            elements: n,
            errors,
            steps: out.steps,
        });
    }
    let mut eoc = Vec::new();
    for w in levels.windows(2) {
        let mut o = [0.0; 4];
        for k in 0..4 {
            o[k] = (w[0].errors[k] / w[1].errors[k]).log2();
        }
        eoc.push(o);
    }
    let mut mean_eoc = [0.0; 4];
    for o in &eoc {
        for k in 0..4 {
            mean_eoc[k] += o[k] / eoc.len() as f64;
        }
    }
    Ok(LadderResult {
        levels,
        eoc,
        mean_eoc,
    })
}

/// Renders the ladder in the layout of the published error tables.
pub fn format_ladder(result: &LadderResult) -> String {
    let mut s = String::new();
    s.push_str("  N_e |      L2(rho)     L2(rho v1)     L2(rho v2)      L2(rho E) |   EOC(rho)  EOC(v1)  EOC(v2)   EOC(E)\n");
    for (i, level) in result.levels.iter().enumerate() {
        let e = &level.errors;
        s.push_str(&format!(
            "{:>5} | {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} |",
            level.elements, e[0], e[1], e[2], e[3]
        ));
        if i == 0 {
            s.push_str("        -        -        -        -\n");
        } else {
            let o = &result.eoc[i - 1];
            s.push_str(&format!(
                " {:>10.2} {:>8.2} {:>8.2} {:>8.2}\n",
                o[0], o[1], o[2], o[3]
            ));
        }
    }
    let m = &result.mean_eoc;
    s.push_str(&format!(
        " mean |                                                            | {:>10.2} {:>8.2} {:>8.2} {:>8.2}\n",
        m[0], m[1], m[2], m[3]
    ));
    s
}
