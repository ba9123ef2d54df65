//! Built-in benchmark setups: initial conditions, boundary assignments,
//! and (where available) exact solutions.

use crate::error::{Result, SolverError};
use crate::euler::{GasModel, State};
use crate::semidisc::{FaceBc, InflowProfile, Mesh};

use super::config::{CaseName, RunConfig};

pub type InitFn = Box<dyn Fn(f64, f64) -> State>;
/// Exact solution (x, y, t) -> State.
pub type ExactFn = Box<dyn Fn(f64, f64, f64) -> State>;

pub struct CaseSetup {
    pub mesh: Mesh,
    pub gas: GasModel,
    pub init: InitFn,
    pub exact: Option<ExactFn>,
}

/// Instantiates a built-in case on the configured mesh resolution.
pub fn builtin_case(cfg: &RunConfig) -> Result<CaseSetup> {
    let gas = GasModel::new(cfg.gamma)?;
    match cfg.case {
        CaseName::DensityWave => density_wave(cfg, gas),
        CaseName::Khi => khi(cfg, gas),
        CaseName::Sedov => sedov(cfg, gas),
        CaseName::Jet => jet(cfg, gas),
        CaseName::Custom => custom(cfg, gas),
    }
}

/// Advected density wave: rho = 2 + 0.98 sin(2 pi (x + y)), v = (0.1, 0.2),
/// p = 20 on [-1, 1]^2, periodic. Exact solution by advection.
fn density_wave(cfg: &RunConfig, gas: GasModel) -> Result<CaseSetup> {
    let mesh = periodic_box(cfg, [-1.0, -1.0], [1.0, 1.0])?;
    let dim = cfg.dim;
    let profile = move |x: f64, y: f64, t: f64, gas: &GasModel| {
        let (v, phase) = if dim == 2 {
            ([0.1, 0.2], x + y - 0.3 * t)
        } else {
            ([0.1, 0.0], x - 0.1 * t)
        };
        let rho = 2.0 + 0.98 * (2.0 * std::f64::consts::PI * phase).sin();
        State::from_primitives(rho, v, 20.0, gas)
    };
    let g0 = gas;
    let g1 = gas;
    Ok(CaseSetup {
        mesh,
        gas,
        init: Box::new(move |x, y| profile(x, y, 0.0, &g0)),
        exact: Some(Box::new(move |x, y, t| profile(x, y, t, &g1))),
    })
}

/// Kelvin-Helmholtz instability on [-1, 1]^2 with
/// B = tanh(15 y + 7.5) - tanh(15 y - 7.5):
/// rho = 1/2 + 3/4 B, p = 1, v1 = (B - 1)/2, v2 = sin(2 pi x)/10.
fn khi(cfg: &RunConfig, gas: GasModel) -> Result<CaseSetup> {
    if cfg.dim != 2 {
        return Err(SolverError::Config("khi is a 2D case".into()));
    }
    let mesh = periodic_box(cfg, [-1.0, -1.0], [1.0, 1.0])?;
    let g = gas;
    Ok(CaseSetup {
        mesh,
        gas,
        init: Box::new(move |x, y| {
            let b = (15.0 * y + 7.5).tanh() - (15.0 * y - 7.5).tanh();
            State::from_primitives(
                0.5 + 0.75 * b,
                [0.5 * (b - 1.0), 0.1 * (2.0 * std::f64::consts::PI * x).sin()],
                1.0,
                &g,
            )
        }),
        exact: None,
    })
}

/// Sedov blast (FLASH setup): rho = 1, v = 0, p = 1e-5 ambient and
/// p = (gamma - 1) e / (pi r0^2) inside r < r0 = 0.21875, e = 1,
/// on [-2, 2]^2, periodic.
fn sedov(cfg: &RunConfig, gas: GasModel) -> Result<CaseSetup> {
    if cfg.dim != 2 {
        return Err(SolverError::Config("sedov is a 2D case".into()));
    }
    let mesh = periodic_box(cfg, [-2.0, -2.0], [2.0, 2.0])?;
    let r0 = 0.21875;
    let p_in = (cfg.gamma - 1.0) * 1.0 / (std::f64::consts::PI * r0 * r0);
    let g = gas;
    Ok(CaseSetup {
        mesh,
        gas,
        init: Box::new(move |x, y| {
            let r = (x * x + y * y).sqrt();
            let p = if r < r0 { p_in } else { 1e-5 };
            State::from_primitives(1.0, [0.0, 0.0], p, &g)
        }),
        exact: None,
    })
}

/// High-Mach astrophysical jet on [-0.5, 0.5]^2: ambient gas at rest with
/// rho = 0.5, p = 0.4127; inflow strip |y| <= 0.05 on the left boundary
/// with rho = 5, v1 = 800. Monoatomic gas, gamma = 5/3.
fn jet(cfg: &RunConfig, gas: GasModel) -> Result<CaseSetup> {
    if cfg.dim != 2 {
        return Err(SolverError::Config("jet is a 2D case".into()));
    }
    let ambient = State::from_primitives(0.5, [0.0, 0.0], 0.4127, &gas);
    let inflow = State::from_primitives(5.0, [800.0, 0.0], 0.4127, &gas);
    let mesh = Mesh::new_2d(
        cfg.elements,
        [-0.5, -0.5],
        [0.5, 0.5],
        [
            FaceBc::Inflow(InflowProfile::Jet {
                inflow,
                ambient,
                half_width: 0.05,
            }),
            FaceBc::Outflow,
            FaceBc::Periodic,
            FaceBc::Periodic,
        ],
    )?;
    Ok(CaseSetup {
        mesh,
        gas,
        init: Box::new(move |_, _| ambient),
        exact: None,
    })
}

/// Uniform free stream; useful as a smoke test and steady exact solution.
fn custom(cfg: &RunConfig, gas: GasModel) -> Result<CaseSetup> {
    let mesh = periodic_box(cfg, [0.0, 0.0], [1.0, 1.0])?;
    let state = State::from_primitives(1.0, [0.3, if cfg.dim == 2 { -0.2 } else { 0.0 }], 1.0, &gas);
    Ok(CaseSetup {
        mesh,
        gas,
        init: Box::new(move |_, _| state),
        exact: Some(Box::new(move |_, _, _| state)),
    })
}

fn periodic_box(cfg: &RunConfig, min: [f64; 2], max: [f64; 2]) -> Result<Mesh> {
    if cfg.dim == 1 {
        Mesh::new_1d(cfg.elements[0], min[0], max[0], FaceBc::Periodic, FaceBc::Periodic)
    } else {
        Mesh::new_2d(
            cfg.elements,
            min,
            max,
            [FaceBc::Periodic, FaceBc::Periodic, FaceBc::Periodic, FaceBc::Periodic],
        )
    }
}
