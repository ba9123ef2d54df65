//! Explicit time integration with the three-stage, third-order SSP
//! Runge-Kutta scheme of Shu and Osher.
//!
//! Each stage is a forward-Euler step or a convex combination of such
//! steps, so every invariant-domain guarantee of the semi-discrete operator
//! carries over to the fully discrete update under the low-order CFL bound.

use crate::error::{Result, SolverError};
use crate::euler::{self, Cons};
use crate::semidisc::{RhsMode, RhsStats, Semidiscretization, Solution};

/// Time step from the low-order convexity bound, clipped so the run lands
/// exactly on `t_final`.
pub fn compute_dt(
    disc: &mut Semidiscretization,
    u: &Solution,
    cfl: f64,
    t: f64,
    t_final: f64,
) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(SolverError::Config(format!("CFL must be positive, got {cfl}")));
    }
    let mut dt = disc.max_stable_dt(u, cfl)?;
    if t + dt > t_final {
        dt = t_final - t;
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SolverError::InvalidState(format!(
            "non-positive time step {dt} at t = {t}"
        )));
    }
    Ok(dt)
}

/// Reusable stage buffers for [`step_ssprk3_with`].
pub struct Integrator {
    rhs: Vec<Cons>,
    stage: Vec<crate::euler::State>,
}

impl Integrator {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            rhs: vec![[0.0; 4]; n_nodes],
            stage: Vec::with_capacity(n_nodes),
        }
    }

    /// One SSPRK(3,3) step driven by an arbitrary right-hand side.
    ///
    /// Shu-Osher form:
    ///   u1 = u + dt L(u)
    ///   u2 = 3/4 u + 1/4 (u1 + dt L(u1))
    ///   u  = 1/3 u + 2/3 (u2 + dt L(u2))
    pub fn step_ssprk3_with<F>(&mut self, u: &mut Solution, dt: f64, mut rhs_fn: F) -> Result<RhsStats>
    where
        F: FnMut(&Solution, &mut [Cons]) -> Result<RhsStats>,
    {
        let n = u.states.len();
        if self.rhs.len() != n {
            return Err(SolverError::InvalidState("integrator buffer size mismatch".into()));
        }
        let mut stats = rhs_fn(u, &mut self.rhs)?;
        self.stage.clear();
        for (i, s) in u.states.iter().enumerate() {
            let c = s.as_cons();
            let r = &self.rhs[i];
            self.stage.push(crate::euler::State::from_cons([
                c[0] + dt * r[0],
                c[1] + dt * r[1],
                c[2] + dt * r[2],
                c[3] + dt * r[3],
            ]));
        }
        let stage = Solution {
            states: std::mem::take(&mut self.stage),
        };
        let s2 = rhs_fn(&stage, &mut self.rhs)?;
        let mut stage = stage;
        for (i, s) in stage.states.iter_mut().enumerate() {
            let c0 = u.states[i].as_cons();
            let c1 = s.as_cons();
            let r = &self.rhs[i];
            *s = crate::euler::State::from_cons([
                0.75 * c0[0] + 0.25 * (c1[0] + dt * r[0]),
                0.75 * c0[1] + 0.25 * (c1[1] + dt * r[1]),
                0.75 * c0[2] + 0.25 * (c1[2] + dt * r[2]),
                0.75 * c0[3] + 0.25 * (c1[3] + dt * r[3]),
            ]);
        }
        let s3 = rhs_fn(&stage, &mut self.rhs)?;
        const THIRD: f64 = 1.0 / 3.0;
        const TWO_THIRDS: f64 = 2.0 / 3.0;
        for (i, s) in u.states.iter_mut().enumerate() {
            let c0 = s.as_cons();
            let c2 = stage.states[i].as_cons();
            let r = &self.rhs[i];
            *s = crate::euler::State::from_cons([
                THIRD * c0[0] + TWO_THIRDS * (c2[0] + dt * r[0]),
                THIRD * c0[1] + TWO_THIRDS * (c2[1] + dt * r[1]),
                THIRD * c0[2] + TWO_THIRDS * (c2[2] + dt * r[2]),
                THIRD * c0[3] + TWO_THIRDS * (c2[3] + dt * r[3]),
            ]);
        }
        self.stage = stage.states;
        merge(&mut stats, &s2);
        merge(&mut stats, &s3);
        Ok(stats)
    }

    /// One step of the semidiscretization, with an admissibility check of
    /// the accepted solution (intermediate stages are checked by the RHS
    /// assembly itself).
    pub fn step(
        &mut self,
        disc: &mut Semidiscretization,
        u: &mut Solution,
        dt: f64,
        mode: RhsMode,
    ) -> Result<RhsStats> {
        let stats = self.step_ssprk3_with(u, dt, |s, rhs| disc.assemble_rhs(s, rhs, mode))?;
        for (i, s) in u.states.iter().enumerate() {
            if !s.is_finite() {
                return Err(SolverError::NonFinite {
                    elem: 0,
                    node: i,
                    what: "state after time step".into(),
                });
            }
            if !euler::is_admissible(s, &disc.gas) {
                return Err(SolverError::Inadmissible {
                    elem: 0,
                    node: i,
                    what: "density or pressure not positive after time step".into(),
                });
            }
        }
        Ok(stats)
    }
}

fn merge(into: &mut RhsStats, other: &RhsStats) {
    into.interfaces += other.interfaces;
    into.sum_rho += other.sum_rho;
    into.sum_v[0] += other.sum_v[0];
    into.sum_v[1] += other.sum_v[1];
    into.sum_e += other.sum_e;
    into.sum_pressure += other.sum_pressure;
    into.sum_entropy += other.sum_entropy;
    into.min_combined = into.min_combined.min(other.min_combined);
    into.verify.rho_bound_excess = into.verify.rho_bound_excess.max(other.verify.rho_bound_excess);
    into.verify.prim_bound_excess =
        into.verify.prim_bound_excess.max(other.verify.prim_bound_excess);
    into.verify.min_bar_pressure = into.verify.min_bar_pressure.min(other.verify.min_bar_pressure);
    into.verify.tadmor_excess = into.verify.tadmor_excess.max(other.verify.tadmor_excess);
}
