//! Compressible Euler physics: state algebra, physical flux, wave speeds,
//! the entropy framework, and the catalog of two-point numerical fluxes.
//!
//! Conserved quantities are stored in a uniform four-component layout
//! `[rho, rho*v1, rho*v2, rho*E]` for both 1D and 2D. In 1D the second
//! momentum component is identically zero, so all formulas below hold
//! unchanged and jumps/fluxes in that slot vanish.

use crate::error::{Result, SolverError};

/// Four-component conserved vector `[rho, rho*v1, rho*v2, rho*E]`.
pub type Cons = [f64; 4];

pub const RHO: usize = 0;
pub const MOM1: usize = 1;
pub const MOM2: usize = 2;
pub const ENER: usize = 3;

/// Coordinate direction of a flux or interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    X,
    Y,
}

impl Dir {
    #[inline]
    pub fn mom_index(self) -> usize {
        match self {
            Dir::X => MOM1,
            Dir::Y => MOM2,
        }
    }

    #[inline]
    pub fn axis(self) -> usize {
        match self {
            Dir::X => 0,
            Dir::Y => 1,
        }
    }
}

pub const DIRS: [Dir; 2] = [Dir::X, Dir::Y];

/// Ideal gas model. The heat capacity ratio must lie in (1, 3].
#[derive(Clone, Copy, Debug)]
pub struct GasModel {
    pub gamma: f64,
}

impl GasModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 1.0 && gamma <= 3.0 {
            Ok(Self { gamma })
        } else {
            Err(SolverError::Config(format!(
                "heat capacity ratio must be in (1, 3], got {gamma}"
            )))
        }
    }
}

/// Conserved state at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub rho: f64,
    pub mom: [f64; 2],
    pub energy: f64,
}

impl State {
    #[inline]
    pub fn from_cons(u: Cons) -> Self {
        Self {
            rho: u[RHO],
            mom: [u[MOM1], u[MOM2]],
            energy: u[ENER],
        }
    }

    #[inline]
    pub fn as_cons(&self) -> Cons {
        [self.rho, self.mom[0], self.mom[1], self.energy]
    }

    /// Build a state from primitive quantities (density, velocity, pressure).
    pub fn from_primitives(rho: f64, v: [f64; 2], p: f64, gas: &GasModel) -> Self {
        let kinetic = 0.5 * rho * (v[0] * v[0] + v[1] * v[1]);
        Self {
            rho,
            mom: [rho * v[0], rho * v[1]],
            energy: p / (gas.gamma - 1.0) + kinetic,
        }
    }

    #[inline]
    pub fn velocity(&self) -> [f64; 2] {
        [self.mom[0] / self.rho, self.mom[1] / self.rho]
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.rho.is_finite()
            && self.mom[0].is_finite()
            && self.mom[1].is_finite()
            && self.energy.is_finite()
    }
}

/// Pressure from the calorically perfect gas law. No positivity guarantee;
/// callers check the sign where it matters.
#[inline]
pub fn pressure(u: &State, gas: &GasModel) -> Result<f64> {
    if u.rho <= 0.0 {
        return Err(SolverError::InvalidState(format!(
            "non-positive density {}",
            u.rho
        )));
    }
    let kinetic = 0.5 * (u.mom[0] * u.mom[0] + u.mom[1] * u.mom[1]) / u.rho;
    Ok((gas.gamma - 1.0) * (u.energy - kinetic))
}

/// Strict admissibility: rho > 0 and p > 0, no epsilon floor.
#[inline]
pub fn is_admissible(u: &State, gas: &GasModel) -> bool {
    u.rho > 0.0 && matches!(pressure(u, gas), Ok(p) if p > 0.0)
}

fn require_admissible(u: &State, gas: &GasModel) -> Result<f64> {
    let p = pressure(u, gas)?;
    if p <= 0.0 {
        return Err(SolverError::InvalidState(format!(
            "non-positive pressure {p}"
        )));
    }
    Ok(p)
}

/// Physical flux in direction `d`: `(rho v_d, rho v_d v + p e_d, v_d (rho E + p))`.
#[inline]
pub fn physical_flux(u: &State, d: Dir, gas: &GasModel) -> Result<Cons> {
    let p = pressure(u, gas)?;
    let vd = u.mom[d.axis()] / u.rho;
    let mut f = [
        u.mom[d.axis()],
        vd * u.mom[0],
        vd * u.mom[1],
        vd * (u.energy + p),
    ];
    f[d.mom_index()] += p;
    Ok(f)
}

#[inline]
pub fn sound_speed(u: &State, gas: &GasModel) -> Result<f64> {
    let p = require_admissible(u, gas)?;
    Ok((gas.gamma * p / u.rho).sqrt())
}

/// Upper bound for the maximum wave speed of the Riemann problem:
/// `max(|v_ld| + c_l, |v_rd| + c_r)`. Symmetric in its arguments.
#[inline]
pub fn max_wave_speed(ul: &State, ur: &State, d: Dir, gas: &GasModel) -> Result<f64> {
    let cl = sound_speed(ul, gas)?;
    let cr = sound_speed(ur, gas)?;
    let vl = (ul.mom[d.axis()] / ul.rho).abs();
    let vr = (ur.mom[d.axis()] / ur.rho).abs();
    Ok((vl + cl).max(vr + cr))
}

/// Mathematical entropy S = -rho s / (gamma - 1) with s = ln(p rho^-gamma).
#[inline]
pub fn entropy(u: &State, gas: &GasModel) -> Result<f64> {
    let p = require_admissible(u, gas)?;
    let s = (p * u.rho.powf(-gas.gamma)).ln();
    Ok(-u.rho * s / (gas.gamma - 1.0))
}

/// Entropy variables v = dS/du in the four-component layout:
/// `((gamma - s)/(gamma - 1) - beta |v|^2, 2 beta v1, 2 beta v2, -2 beta)`.
#[inline]
pub fn entropy_variables(u: &State, gas: &GasModel) -> Result<Cons> {
    let p = require_admissible(u, gas)?;
    let s = (p * u.rho.powf(-gas.gamma)).ln();
    let beta = u.rho / (2.0 * p);
    let v = u.velocity();
    let v_sq = v[0] * v[0] + v[1] * v[1];
    Ok([
        (gas.gamma - s) / (gas.gamma - 1.0) - beta * v_sq,
        2.0 * beta * v[0],
        2.0 * beta * v[1],
        -2.0 * beta,
    ])
}

/// Entropy flux potential Psi_d = v^T f_d(u) - v_d S(u).
///
/// Evaluated from the definition; for the Euler entropy this reduces to
/// rho v_d, which the tests use as an independent cross-check.
#[inline]
pub fn entropy_potential(u: &State, d: Dir, gas: &GasModel) -> Result<f64> {
    let v = entropy_variables(u, gas)?;
    let f = physical_flux(u, d, gas)?;
    let s = entropy(u, gas)?;
    let vd = u.mom[d.axis()] / u.rho;
    Ok(v[0] * f[0] + v[1] * f[1] + v[2] * f[2] + v[3] * f[3] - vd * s)
}

/// Logarithmic mean of two positive numbers, with a series expansion for
/// nearly equal arguments to remove the 0/0 at a = b.
#[inline]
pub fn log_mean(a: f64, b: f64) -> Result<f64> {
    if a <= 0.0 || b <= 0.0 {
        return Err(SolverError::InvalidState(format!(
            "log-mean of non-positive arguments ({a}, {b})"
        )));
    }
    // Canonical argument order makes the mean exactly symmetric in
    // floating point.
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let f = (b - a) / (a + b);
    if f < 1e-4 {
        let u = f * f;
        Ok((a + b) / (2.0 * (1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0)))
    } else {
        Ok((b - a) / (b / a).ln())
    }
}

/// Volumetric two-point flux kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoPointFlux {
    /// Standard average (f_l + f_r)/2; recovers the strong-form DGSEM.
    Central,
    /// Entropy-conservative, kinetic-energy- and pressure-equilibrium-
    /// preserving flux with density and (rho/p) log-means.
    Ranocha,
    /// Entropy-conservative, kinetic-energy-preserving flux with density
    /// and inverse-temperature log-means.
    Chandrashekar,
}

impl TwoPointFlux {
    pub fn evaluate(self, ul: &State, ur: &State, d: Dir, gas: &GasModel) -> Result<Cons> {
        match self {
            TwoPointFlux::Central => {
                let fl = physical_flux(ul, d, gas)?;
                let fr = physical_flux(ur, d, gas)?;
                Ok([
                    0.5 * (fl[0] + fr[0]),
                    0.5 * (fl[1] + fr[1]),
                    0.5 * (fl[2] + fr[2]),
                    0.5 * (fl[3] + fr[3]),
                ])
            }
            TwoPointFlux::Ranocha => ranocha_flux(ul, ur, d, gas),
            TwoPointFlux::Chandrashekar => chandrashekar_flux(ul, ur, d, gas),
        }
    }
}

fn ranocha_flux(ul: &State, ur: &State, d: Dir, gas: &GasModel) -> Result<Cons> {
    let pl = require_admissible(ul, gas)?;
    let pr = require_admissible(ur, gas)?;
    let vl = ul.velocity();
    let vr = ur.velocity();

    let rho_ln = log_mean(ul.rho, ur.rho)?;
    let rho_p_ln = log_mean(ul.rho / pl, ur.rho / pr)?;
    let v_avg = [0.5 * (vl[0] + vr[0]), 0.5 * (vl[1] + vr[1])];
    let p_avg = 0.5 * (pl + pr);
    // Product average of the velocity magnitude, not the average of squares.
    let v_dot_avg = 0.5 * (vl[0] * vr[0] + vl[1] * vr[1]);

    let vd_avg = v_avg[d.axis()];
    let f_rho = rho_ln * vd_avg;
    let mut f = [
        f_rho,
        f_rho * v_avg[0],
        f_rho * v_avg[1],
        f_rho * (v_dot_avg + 1.0 / ((gas.gamma - 1.0) * rho_p_ln))
            + 0.5 * (pl * vr[d.axis()] + pr * vl[d.axis()]),
    ];
    f[d.mom_index()] += p_avg;
    Ok(f)
}

fn chandrashekar_flux(ul: &State, ur: &State, d: Dir, gas: &GasModel) -> Result<Cons> {
    let pl = require_admissible(ul, gas)?;
    let pr = require_admissible(ur, gas)?;
    let vl = ul.velocity();
    let vr = ur.velocity();
    let beta_l = 0.5 * ul.rho / pl;
    let beta_r = 0.5 * ur.rho / pr;

    let rho_ln = log_mean(ul.rho, ur.rho)?;
    let beta_ln = log_mean(beta_l, beta_r)?;
    let rho_avg = 0.5 * (ul.rho + ur.rho);
    let beta_avg = 0.5 * (beta_l + beta_r);
    let v_avg = [0.5 * (vl[0] + vr[0]), 0.5 * (vl[1] + vr[1])];
    let kin_avg = 0.25 * (vl[0] * vl[0] + vl[1] * vl[1] + vr[0] * vr[0] + vr[1] * vr[1]);
    let p_hat = 0.5 * rho_avg / beta_avg;

    let vd_avg = v_avg[d.axis()];
    let f_rho = rho_ln * vd_avg;
    let mut f = [f_rho, f_rho * v_avg[0], f_rho * v_avg[1], 0.0];
    f[d.mom_index()] += p_hat;
    f[ENER] = f_rho * (0.5 / ((gas.gamma - 1.0) * beta_ln) - kin_avg)
        + f[MOM1] * v_avg[0]
        + f[MOM2] * v_avg[1];
    Ok(f)
}

/// Rusanov (local Lax-Friedrichs) flux for the interface between a lower
/// node `ul` and its upper neighbor `ur`, together with the wave speed
/// estimate used for the dissipation.
#[inline]
pub fn rusanov_flux(ul: &State, ur: &State, d: Dir, gas: &GasModel) -> Result<(Cons, f64)> {
    let fl = physical_flux(ul, d, gas)?;
    let fr = physical_flux(ur, d, gas)?;
    let lambda = max_wave_speed(ul, ur, d, gas)?;
    let cl = ul.as_cons();
    let cr = ur.as_cons();
    let mut f = [0.0; 4];
    for k in 0..4 {
        f[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * lambda * (cr[k] - cl[k]);
    }
    Ok((f, lambda))
}
