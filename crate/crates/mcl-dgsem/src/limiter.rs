//! Monolithic convex limiting of anti-diffusive subcell fluxes.
//!
//! Every function here operates on one subcell interface between a lower
//! node `a` and its upper neighbor `b`. The anti-diffusive flux is stored
//! in the lower-to-upper orientation, i.e. `delta = f_fv - f_dg`, so that
//! the limited bar states are
//!
//!   ubar_lim(a side) = ubar + delta_lim / lambda,
//!   ubar_lim(b side) = ubar - delta_lim / lambda,
//!
//! and the blended interface flux is `f_hat = f_fv - delta_lim`.
//!
//! Limiting never receives a time-step size: the limited fluxes are a pure
//! function of the solution snapshot, which is what makes the semi-discrete
//! scheme independent of the time integrator.

use crate::error::{Result, SolverError};
use crate::euler::{self, Cons, Dir, GasModel, State, ENER, MOM1, MOM2, RHO};

/// Division guard used when converting limited fluxes to effective factors
/// and in the entropy correction.
pub const EPS_DIV: f64 = 1e-100;
/// Relative threshold below which a raw anti-diffusive flux counts as zero.
pub const EPS_ZERO_REL: f64 = 1e-14;

/// Which limiter stages run, and in which order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    /// No limiting; the blended flux equals the DG flux.
    Off,
    /// One-sided density positivity clamp plus the sharp pressure fix.
    GlobalOnly,
    /// Sequential limiting (rho, then velocities and specific total
    /// energy), pressure fix, entropy fix.
    A,
    /// Conservative density limiting, density factor applied to all other
    /// components, pressure fix, entropy fix.
    B,
    /// B's density step followed by A's sequential stage, pressure fix,
    /// entropy fix.
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureMode {
    Sharp,
    Cautious,
}

#[derive(Clone, Copy, Debug)]
pub struct LimiterConfig {
    pub pipeline: Pipeline,
    pub pressure_mode: PressureMode,
    pub entropy_limiter: bool,
}

impl LimiterConfig {
    pub fn off() -> Self {
        Self {
            pipeline: Pipeline::Off,
            pressure_mode: PressureMode::Sharp,
            entropy_limiter: false,
        }
    }
}

/// Lower/upper bounds for the controlled scalar quantities at one node.
///
/// `v` and `e` are bounds on the "primitive" ratios v_d = (rho v_d)/rho
/// and E = (rho E)/rho; they are only populated for pipelines that impose
/// local bounds.
#[derive(Clone, Copy, Debug)]
pub struct NodeBounds {
    pub rho: (f64, f64),
    pub v: [(f64, f64); 2],
    pub e: (f64, f64),
}

impl NodeBounds {
    pub fn unbounded() -> Self {
        let inf = (f64::NEG_INFINITY, f64::INFINITY);
        Self {
            rho: inf,
            v: [inf, inf],
            e: inf,
        }
    }
}

/// Effective limiting factors reported for one interface, all in [0, 1].
///
/// Factors are per stage: the density factor, the auxiliary-flux factors of
/// the sequential stage (or the density factor again when it is applied to
/// all components), and the synchronized pressure and entropy factors.
#[derive(Clone, Copy, Debug)]
pub struct InterfaceFactors {
    pub rho: f64,
    pub v: [f64; 2],
    pub e: f64,
    pub pressure: f64,
    pub entropy: f64,
}

impl InterfaceFactors {
    pub fn unlimited() -> Self {
        Self {
            rho: 1.0,
            v: [1.0, 1.0],
            e: 1.0,
            pressure: 1.0,
            entropy: 1.0,
        }
    }

    /// Product of all stage factors, the combined nodal measure used in
    /// the mean-limiting diagnostics.
    pub fn combined(&self, dim: usize) -> f64 {
        let mut alpha = self.rho * self.v[0] * self.e * self.pressure * self.entropy;
        if dim == 2 {
            alpha *= self.v[1];
        }
        alpha.clamp(0.0, 1.0)
    }
}

/// Everything the pipeline needs to limit one interior subcell interface.
#[derive(Clone, Copy, Debug)]
pub struct InterfaceContext<'a> {
    /// Anti-diffusive flux in lower-to-upper orientation (f_fv - f_dg).
    pub delta: Cons,
    /// Low-order Rusanov flux.
    pub fv: Cons,
    /// Low-order bar state (symmetric).
    pub bar: Cons,
    /// Wave speed estimate of the interface.
    pub lambda: f64,
    /// Bounds at the lower and upper node.
    pub bounds: [&'a NodeBounds; 2],
    /// Nodal states at the lower and upper node (for the entropy fix).
    pub states: [&'a State; 2],
    pub dir: Dir,
}

/// Two-sided clamp of a scalar anti-diffusive flux so that both limited
/// bar states stay inside their nodes' bounds.
///
/// Bounds must be feasible, i.e. contain the bar state value; infeasible
/// bounds indicate a bounds bug and are reported as an invariant violation.
pub fn limit_conservative(
    delta: f64,
    bar: f64,
    lambda: f64,
    bounds_a: (f64, f64),
    bounds_b: (f64, f64),
) -> Result<f64> {
    let slack = 1e-10 * bar.abs().max(1.0);
    if bar < bounds_a.0 - slack
        || bar > bounds_a.1 + slack
        || bar < bounds_b.0 - slack
        || bar > bounds_b.1 + slack
    {
        return Err(SolverError::Invariant(format!(
            "infeasible bounds: bar state {bar} outside [{}, {}] or [{}, {}]",
            bounds_a.0, bounds_a.1, bounds_b.0, bounds_b.1
        )));
    }
    let plus = lambda * (bounds_a.1 - bar).min(bar - bounds_b.0).max(0.0);
    let minus = lambda * (bounds_a.0 - bar).max(bar - bounds_b.1).min(0.0);
    Ok(if delta >= 0.0 {
        delta.min(plus)
    } else {
        delta.max(minus)
    })
}

/// Sequential limiting of the flux of a product quantity rho*phi, given the
/// already-limited density data.
///
/// The auxiliary flux
///   dg = delta_rhophi - lambda (rho_lim_a * phi_bar - rhophi_bar)
/// is clamped so the constraint holds at *both* endpoints, using each
/// endpoint's own limited density bar state as the scaling factor, and the
/// returned flux is recovered from the clamped auxiliary flux.
///
/// Returns (limited rho*phi flux, clamped auxiliary flux, raw auxiliary flux).
pub fn limit_sequential(
    delta_rhophi: f64,
    rhophi_bar: f64,
    rho_bar: f64,
    delta_rho_lim: f64,
    lambda: f64,
    phi_bounds_a: (f64, f64),
    phi_bounds_b: (f64, f64),
) -> Result<(f64, f64, f64)> {
    let rho_lim_a = rho_bar + delta_rho_lim / lambda;
    let rho_lim_b = rho_bar - delta_rho_lim / lambda;
    if rho_lim_a <= 0.0 || rho_lim_b <= 0.0 {
        return Err(SolverError::Invariant(format!(
            "sequential limiter received non-positive limited density bar state \
             ({rho_lim_a}, {rho_lim_b})"
        )));
    }
    let phi_bar = rhophi_bar / rho_bar;

    let g_raw = delta_rhophi - lambda * (rho_lim_a * phi_bar - rhophi_bar);
    let upper = (lambda * rho_lim_a * (phi_bounds_a.1 - phi_bar))
        .min(lambda * rho_lim_b * (phi_bar - phi_bounds_b.0))
        .max(0.0);
    let lower = (lambda * rho_lim_a * (phi_bounds_a.0 - phi_bar))
        .max(lambda * rho_lim_b * (phi_bar - phi_bounds_b.1))
        .min(0.0);
    let g_lim = if g_raw >= 0.0 {
        g_raw.min(upper)
    } else {
        g_raw.max(lower)
    };
    let limited = g_lim + lambda * (rho_lim_a * phi_bar - rhophi_bar);
    Ok((limited, g_lim, g_raw))
}

/// Synchronized scaling factor that keeps the internal energy of both
/// limited bar states non-negative.
///
/// `P` is the exact linearization (sharp) or its triangle-inequality upper
/// bound (cautious); cautious therefore never scales less than sharp.
pub fn pressure_alpha(delta_lim: &Cons, bar: &Cons, lambda: f64, mode: PressureMode) -> f64 {
    let w = [
        lambda * bar[RHO],
        lambda * bar[MOM1],
        lambda * bar[MOM2],
        lambda * bar[ENER],
    ];
    let a = 0.5 * (delta_lim[MOM1] * delta_lim[MOM1] + delta_lim[MOM2] * delta_lim[MOM2])
        - delta_lim[RHO] * delta_lim[ENER];
    let b = w[MOM1] * delta_lim[MOM1] + w[MOM2] * delta_lim[MOM2]
        - w[RHO] * delta_lim[ENER]
        - w[ENER] * delta_lim[RHO];
    // Scaled internal-energy margin of the (admissible) low-order bar state.
    let q = w[RHO] * w[ENER] - 0.5 * (w[MOM1] * w[MOM1] + w[MOM2] * w[MOM2]);
    let p = match mode {
        PressureMode::Sharp => a.max(0.0) + b.abs(),
        PressureMode::Cautious => {
            a.max(0.0)
                + (w[MOM1] * delta_lim[MOM1]).abs()
                + (w[MOM2] * delta_lim[MOM2]).abs()
                + (w[RHO] * delta_lim[ENER]).abs()
                + (w[ENER] * delta_lim[RHO]).abs()
        }
    };
    if p > q {
        (q / p).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Entropy correction factor enforcing Tadmor's condition
/// [[v]]^T f_hat <= [[Psi]] at the interface.
///
/// `jump_v` and `jump_psi` are upper-minus-lower jumps of the entropy
/// variables and the flux potential; `delta_term` is the oriented limited
/// anti-diffusive contribution delta_lim/(i-j) = -delta_lim.
pub fn entropy_alpha(jump_v: &Cons, jump_psi: f64, fv: &Cons, delta_term: &Cons) -> f64 {
    let dot = |x: &Cons, y: &Cons| x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3];
    let production_fv = dot(jump_v, fv);
    let production_delta = dot(jump_v, delta_term);
    if production_fv + production_delta > jump_psi {
        // The Rusanov part satisfies the condition on its own, so the
        // admissible budget for the anti-diffusive part is non-negative.
        let budget = jump_psi - production_fv;
        (budget / (production_delta + EPS_DIV)).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Epsilon-regularized effective factor limited/raw, reported as 1 when the
/// raw flux is negligible at the given scale.
pub fn effective_factor(limited: f64, raw: f64, zero_scale: f64) -> f64 {
    if raw.abs() <= EPS_ZERO_REL * zero_scale.max(1e-300) {
        1.0
    } else {
        let s = EPS_DIV * raw.signum();
        ((limited + s) / (raw + s)).clamp(0.0, 1.0)
    }
}

/// Run the configured limiter pipeline on one interior interface.
///
/// Returns the limited anti-diffusive flux (same orientation as the input
/// `delta`) and the per-stage effective factors.
pub fn apply_pipeline(
    ctx: &InterfaceContext,
    cfg: &LimiterConfig,
    gas: &GasModel,
    dim: usize,
) -> Result<(Cons, InterfaceFactors)> {
    let mut factors = InterfaceFactors::unlimited();
    if cfg.pipeline == Pipeline::Off {
        return Ok((ctx.delta, factors));
    }

    let delta = ctx.delta;
    let bar = ctx.bar;
    let lambda = ctx.lambda;
    let zero_scale = delta.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut limited = delta;

    match cfg.pipeline {
        Pipeline::Off => unreachable!(),
        Pipeline::GlobalOnly => {
            // One-sided rho >= 0 clamp: lower bound 0, no upper bound.
            let positivity = (0.0, f64::INFINITY);
            limited[RHO] =
                limit_conservative(delta[RHO], bar[RHO], lambda, positivity, positivity)?;
            factors.rho = effective_factor(limited[RHO], delta[RHO], zero_scale);
        }
        Pipeline::A => {
            limited[RHO] = limit_conservative(
                delta[RHO],
                bar[RHO],
                lambda,
                ctx.bounds[0].rho,
                ctx.bounds[1].rho,
            )?;
            factors.rho = effective_factor(limited[RHO], delta[RHO], zero_scale);
            sequential_stage(ctx, &mut limited, &mut factors, zero_scale, dim)?;
        }
        Pipeline::B | Pipeline::C => {
            limited[RHO] = limit_conservative(
                delta[RHO],
                bar[RHO],
                lambda,
                ctx.bounds[0].rho,
                ctx.bounds[1].rho,
            )?;
            let alpha_rho = effective_factor(limited[RHO], delta[RHO], zero_scale);
            factors.rho = alpha_rho;
            for k in [MOM1, MOM2, ENER] {
                limited[k] = alpha_rho * delta[k];
            }
            if cfg.pipeline == Pipeline::C {
                // Sequential stage on the density-synchronized fluxes.
                let scaled = InterfaceContext {
                    delta: limited,
                    ..*ctx
                };
                sequential_stage(&scaled, &mut limited, &mut factors, zero_scale, dim)?;
            } else {
                factors.v = [alpha_rho, alpha_rho];
                factors.e = alpha_rho;
            }
        }
    }

    // Pressure positivity fix: synchronized scaling of all components.
    let mode = if cfg.pipeline == Pipeline::GlobalOnly {
        PressureMode::Sharp
    } else {
        cfg.pressure_mode
    };
    let alpha_p = pressure_alpha(&limited, &bar, lambda, mode);
    for k in 0..4 {
        limited[k] *= alpha_p;
    }
    factors.pressure = alpha_p;

    // Semi-discrete entropy fix.
    if cfg.entropy_limiter && cfg.pipeline != Pipeline::GlobalOnly {
        let va = euler::entropy_variables(ctx.states[0], gas)?;
        let vb = euler::entropy_variables(ctx.states[1], gas)?;
        let jump_v = [vb[0] - va[0], vb[1] - va[1], vb[2] - va[2], vb[3] - va[3]];
        let jump_psi = euler::entropy_potential(ctx.states[1], ctx.dir, gas)?
            - euler::entropy_potential(ctx.states[0], ctx.dir, gas)?;
        let delta_term = [-limited[0], -limited[1], -limited[2], -limited[3]];
        let alpha_s = entropy_alpha(&jump_v, jump_psi, &ctx.fv, &delta_term);
        for k in 0..4 {
            limited[k] *= alpha_s;
        }
        factors.entropy = alpha_s;
    }

    Ok((limited, factors))
}

/// Sequential limiting of the momentum and energy fluxes after the density
/// stage, using each component's primitive bounds.
fn sequential_stage(
    ctx: &InterfaceContext,
    limited: &mut Cons,
    factors: &mut InterfaceFactors,
    zero_scale: f64,
    dim: usize,
) -> Result<()> {
    let quantities: &[(usize, (f64, f64), (f64, f64))] = &[
        (MOM1, ctx.bounds[0].v[0], ctx.bounds[1].v[0]),
        (MOM2, ctx.bounds[0].v[1], ctx.bounds[1].v[1]),
        (ENER, ctx.bounds[0].e, ctx.bounds[1].e),
    ];
    for &(k, ba, bb) in quantities {
        if k == MOM2 && dim < 2 {
            continue;
        }
        let (lim, g_lim, g_raw) = limit_sequential(
            ctx.delta[k],
            ctx.bar[k],
            ctx.bar[RHO],
            limited[RHO],
            ctx.lambda,
            ba,
            bb,
        )?;
        limited[k] = lim;
        let alpha = effective_factor(g_lim, g_raw, zero_scale);
        match k {
            MOM1 => factors.v[0] = alpha,
            MOM2 => factors.v[1] = alpha,
            ENER => factors.e = alpha,
            _ => unreachable!(),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{pressure, rusanov_flux, GasModel, State};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn gas() -> GasModel {
        GasModel::new(1.4).unwrap()
    }

    #[test]
    fn conservative_limiter_zero_flux() {
        let r = limit_conservative(0.0, 1.0, 2.0, (0.9, 1.2), (0.8, 1.1)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn conservative_limiter_worked_example() {
        // lambda=2, bar=1.0, rho_max_a=1.2, rho_min_b=0.9, delta=0.5:
        // plus = 2 * min(0.2, 0.1) = 0.2 -> limited 0.2.
        let r = limit_conservative(0.5, 1.0, 2.0, (0.0, 1.2), (0.9, 10.0)).unwrap();
        assert!((r - 0.2).abs() < 1e-15);
    }

    #[test]
    fn conservative_limiter_inactive_for_wide_bounds() {
        let delta = 0.3f64;
        let lambda = 1.5;
        let wide = 10.0 * delta.abs() / lambda;
        let r = limit_conservative(delta, 1.0, lambda, (1.0 - wide, 1.0 + wide), (1.0 - wide, 1.0 + wide))
            .unwrap();
        assert_eq!(r, delta);
    }

    #[test]
    fn conservative_limiter_detects_infeasible_bounds() {
        assert!(limit_conservative(0.1, 5.0, 1.0, (0.0, 1.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn conservative_limiter_keeps_bar_states_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..2000 {
            let bar = rng.gen_range(0.5..2.0);
            let lambda = rng.gen_range(0.1..5.0);
            let lo_a = bar - rng.gen_range(0.0..0.5);
            let hi_a = bar + rng.gen_range(0.0..0.5);
            let lo_b = bar - rng.gen_range(0.0..0.5);
            let hi_b = bar + rng.gen_range(0.0..0.5);
            let delta = rng.gen_range(-2.0..2.0);
            let lim = limit_conservative(delta, bar, lambda, (lo_a, hi_a), (lo_b, hi_b)).unwrap();
            // Same sign, no amplification: an effective factor in [0,1] exists.
            assert!(lim.abs() <= delta.abs() + 1e-15);
            assert!(lim * delta >= -1e-15);
            let side_a = bar + lim / lambda;
            let side_b = bar - lim / lambda;
            assert!(side_a >= lo_a - 1e-12 && side_a <= hi_a + 1e-12);
            assert!(side_b >= lo_b - 1e-12 && side_b <= hi_b + 1e-12);
        }
    }

    #[test]
    fn sequential_limiter_uniform_phi_gives_zero_auxiliary_flux() {
        // phi identical on both sides: phi bounds collapse, g must vanish and
        // the returned flux is the pure product-rule correction.
        let rho_bar = 1.2;
        let phi = 0.7;
        let rhophi_bar = rho_bar * phi;
        let lambda = 1.5;
        let delta_rho_lim = 0.3;
        let (lim, g_lim, _) = limit_sequential(
            0.9,
            rhophi_bar,
            rho_bar,
            delta_rho_lim,
            lambda,
            (phi, phi),
            (phi, phi),
        )
        .unwrap();
        assert_eq!(g_lim, 0.0);
        let rho_lim_a = rho_bar + delta_rho_lim / lambda;
        assert!((lim - lambda * (rho_lim_a * phi - rhophi_bar)).abs() < 1e-14);
    }

    #[test]
    fn sequential_limiter_identity_when_within_bounds() {
        // When g stays within its bounds the returned flux is unchanged.
        let (lim, _, _) = limit_sequential(
            0.05,
            0.84,
            1.2,
            0.0,
            1.5,
            (0.0, 2.0),
            (0.0, 2.0),
        )
        .unwrap();
        assert!((lim - 0.05).abs() < 1e-14);
    }

    #[test]
    fn sequential_limiter_constraint_holds_at_both_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut flux_ratio_escaped_unit_interval = false;
        for _ in 0..5000 {
            let rho_bar = rng.gen_range(0.5..2.0);
            let lambda = rng.gen_range(0.2..4.0);
            // Feasible limited density flux: keeps both bar states positive.
            let delta_rho_lim = rng.gen_range(-0.9..0.9) * rho_bar * lambda;
            let phi = rng.gen_range(-1.0..1.0);
            let rhophi_bar = rho_bar * phi;
            let lo_a = phi - rng.gen_range(0.0..0.4);
            let hi_a = phi + rng.gen_range(0.0..0.4);
            let lo_b = phi - rng.gen_range(0.0..0.4);
            let hi_b = phi + rng.gen_range(0.0..0.4);
            let delta_rhophi = rng.gen_range(-2.0..2.0);
            let (lim, g_lim, g_raw) = limit_sequential(
                delta_rhophi,
                rhophi_bar,
                rho_bar,
                delta_rho_lim,
                lambda,
                (lo_a, hi_a),
                (lo_b, hi_b),
            )
            .unwrap();
            // Direct substitution into the product-quantity constraint.
            let rho_lim_a = rho_bar + delta_rho_lim / lambda;
            let rho_lim_b = rho_bar - delta_rho_lim / lambda;
            let rhophi_lim_a = rhophi_bar + lim / lambda;
            let rhophi_lim_b = rhophi_bar - lim / lambda;
            let tol = 1e-12 * (1.0 + rhophi_bar.abs());
            assert!(rhophi_lim_a >= rho_lim_a * lo_a - tol && rhophi_lim_a <= rho_lim_a * hi_a + tol);
            assert!(rhophi_lim_b >= rho_lim_b * lo_b - tol && rhophi_lim_b <= rho_lim_b * hi_b + tol);
            // Effective factor of the auxiliary flux lies in [0, 1] ...
            if g_raw.abs() > 1e-12 {
                let alpha_g = g_lim / g_raw;
                assert!((-1e-12..=1.0 + 1e-12).contains(&alpha_g));
            }
            // ... but the ratio of the returned flux may leave [0, 1].
            if delta_rhophi.abs() > 1e-12 {
                let r = lim / delta_rhophi;
                if !(0.0..=1.0).contains(&r) {
                    flux_ratio_escaped_unit_interval = true;
                }
            }
        }
        assert!(flux_ratio_escaped_unit_interval);
    }

    #[test]
    fn pressure_alpha_trivial_cases() {
        let bar = State::from_primitives(1.0, [0.2, -0.1], 1.0, &gas()).as_cons();
        assert_eq!(pressure_alpha(&[0.0; 4], &bar, 1.3, PressureMode::Sharp), 1.0);
        assert_eq!(
            pressure_alpha(&[0.0; 4], &bar, 1.3, PressureMode::Cautious),
            1.0
        );
        // Tiny flux: P <= Q -> alpha = 1.
        let small = [1e-8, -1e-8, 0.0, 1e-8];
        assert_eq!(pressure_alpha(&small, &bar, 1.3, PressureMode::Sharp), 1.0);
    }

    #[test]
    fn pressure_alpha_enforces_internal_energy_positivity() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..3000 {
            let bar_state = crate::euler::State::from_primitives(
                rng.gen_range(0.1..3.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.01..3.0),
                &g,
            );
            let bar = bar_state.as_cons();
            let lambda = rng.gen_range(0.5..5.0);
            let delta: Cons = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            for mode in [PressureMode::Sharp, PressureMode::Cautious] {
                let alpha = pressure_alpha(&delta, &bar, lambda, mode);
                assert!((0.0..=1.0).contains(&alpha));
                for sign in [1.0, -1.0] {
                    let mut lim = [0.0; 4];
                    for k in 0..4 {
                        lim[k] = bar[k] + sign * alpha * delta[k] / lambda;
                    }
                    let margin =
                        lim[RHO] * lim[ENER] - 0.5 * (lim[MOM1] * lim[MOM1] + lim[MOM2] * lim[MOM2]);
                    assert!(
                        margin >= -1e-11 * (1.0 + lim[RHO].abs() * lim[ENER].abs()),
                        "{mode:?}: internal energy margin {margin} at alpha {alpha}"
                    );
                }
                // The linear condition implies the quadratic for every
                // alpha in [0, alpha_p], not just the endpoint.
                let a_sub = alpha * rng.gen::<f64>();
                for sign in [1.0, -1.0] {
                    let mut lim = [0.0; 4];
                    for k in 0..4 {
                        lim[k] = bar[k] + sign * a_sub * delta[k] / lambda;
                    }
                    let margin =
                        lim[RHO] * lim[ENER] - 0.5 * (lim[MOM1] * lim[MOM1] + lim[MOM2] * lim[MOM2]);
                    assert!(margin >= -1e-11 * (1.0 + lim[RHO].abs() * lim[ENER].abs()));
                }
            }
        }
    }

    #[test]
    fn cautious_never_exceeds_sharp() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let g = gas();
        for _ in 0..2000 {
            let bar = crate::euler::State::from_primitives(
                rng.gen_range(0.1..3.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.01..3.0),
                &g,
            )
            .as_cons();
            let lambda = rng.gen_range(0.5..5.0);
            let delta: Cons = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let sharp = pressure_alpha(&delta, &bar, lambda, PressureMode::Sharp);
            let cautious = pressure_alpha(&delta, &bar, lambda, PressureMode::Cautious);
            assert!(cautious <= sharp + 1e-15);
        }
    }

    #[test]
    fn entropy_alpha_inactive_when_condition_holds() {
        let jump_v = [0.1, -0.2, 0.0, 0.3];
        let fv = [0.0; 4];
        assert_eq!(entropy_alpha(&jump_v, 1.0, &fv, &[0.0; 4]), 1.0);
        // Equal states: all jumps zero, delta zero.
        assert_eq!(entropy_alpha(&[0.0; 4], 0.0, &fv, &[0.0; 4]), 1.0);
    }

    #[test]
    fn entropy_alpha_restores_tadmor_condition() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let mut violations_seen = 0usize;
        for _ in 0..3000 {
            let ua = crate::euler::State::from_primitives(
                rng.gen_range(0.2..3.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.1..3.0),
                &g,
            );
            let ub = crate::euler::State::from_primitives(
                rng.gen_range(0.2..3.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.1..3.0),
                &g,
            );
            let d = Dir::X;
            let (fv, _) = rusanov_flux(&ua, &ub, d, &g).unwrap();
            let va = crate::euler::entropy_variables(&ua, &g).unwrap();
            let vb = crate::euler::entropy_variables(&ub, &g).unwrap();
            let jump_v = [vb[0] - va[0], vb[1] - va[1], vb[2] - va[2], vb[3] - va[3]];
            let jump_psi = crate::euler::entropy_potential(&ub, d, &g).unwrap()
                - crate::euler::entropy_potential(&ua, d, &g).unwrap();
            // Large anti-diffusive amplitudes so a decent fraction of the
            // samples actually violate the entropy condition.
            let amp = rng.gen_range(0.1..50.0);
            let delta_term: Cons = [
                amp * rng.gen_range(-2.0..2.0),
                amp * rng.gen_range(-2.0..2.0),
                amp * rng.gen_range(-2.0..2.0),
                amp * rng.gen_range(-2.0..2.0),
            ];
            let dot = |x: &Cons, y: &Cons| x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3];
            let before = dot(&jump_v, &fv) + dot(&jump_v, &delta_term);
            if before > jump_psi {
                violations_seen += 1;
            }
            let alpha = entropy_alpha(&jump_v, jump_psi, &fv, &delta_term);
            let after = dot(&jump_v, &fv) + alpha * dot(&jump_v, &delta_term);
            let scale = jump_psi.abs().max(dot(&jump_v, &fv).abs()).max(1.0);
            assert!(after <= jump_psi + 1e-10 * scale);
        }
        assert!(violations_seen > 100, "sampler never produced violations");
    }

    #[test]
    fn effective_factor_edge_cases() {
        assert_eq!(effective_factor(0.3, 0.0, 1.0), 1.0);
        assert_eq!(effective_factor(0.7, 0.7, 1.0), 1.0);
        let near_zero = effective_factor(0.0, 1.0, 1.0);
        assert!(near_zero >= 0.0 && near_zero < 1e-12);
        let half = effective_factor(0.5, 1.0, 1.0);
        assert!((half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pipeline_off_passes_through() {
        let g = gas();
        let a = State::from_primitives(1.0, [0.3, 0.0], 1.0, &g);
        let b = State::from_primitives(1.1, [0.2, 0.0], 1.1, &g);
        let (fv, lambda) = rusanov_flux(&a, &b, Dir::X, &g).unwrap();
        let bounds = NodeBounds::unbounded();
        let delta = [0.1, -0.2, 0.0, 0.3];
        let ctx = InterfaceContext {
            delta,
            fv,
            bar: a.as_cons(),
            lambda,
            bounds: [&bounds, &bounds],
            states: [&a, &b],
            dir: Dir::X,
        };
        let (lim, f) = apply_pipeline(&ctx, &LimiterConfig::off(), &g, 2).unwrap();
        assert_eq!(lim, delta);
        assert_eq!(f.combined(2), 1.0);
    }

    /// Pipeline on in-bounds data leaves the flux unchanged with all
    /// factors equal to one.
    #[test]
    fn pipeline_all_factors_one_when_bounds_respected() {
        let g = gas();
        let a = State::from_primitives(1.0, [0.1, 0.05], 1.0, &g);
        let b = State::from_primitives(1.01, [0.1, 0.05], 1.0, &g);
        let (fv, lambda) = rusanov_flux(&a, &b, Dir::X, &g).unwrap();
        let mut bar = [0.0; 4];
        let fa = crate::euler::physical_flux(&a, Dir::X, &g).unwrap();
        let fb = crate::euler::physical_flux(&b, Dir::X, &g).unwrap();
        let ca = a.as_cons();
        let cb = b.as_cons();
        for k in 0..4 {
            bar[k] = 0.5 * (ca[k] + cb[k]) - (fb[k] - fa[k]) / (2.0 * lambda);
        }
        // Wide bounds: nothing limits.
        let wide = NodeBounds {
            rho: (0.0, 10.0),
            v: [(-10.0, 10.0), (-10.0, 10.0)],
            e: (-100.0, 100.0),
        };
        let delta = [1e-4, -2e-4, 5e-5, 1e-4];
        let ctx = InterfaceContext {
            delta,
            fv,
            bar,
            lambda,
            bounds: [&wide, &wide],
            states: [&a, &b],
            dir: Dir::X,
        };
        let cfg = LimiterConfig {
            pipeline: Pipeline::A,
            pressure_mode: PressureMode::Sharp,
            entropy_limiter: true,
        };
        let (lim, f) = apply_pipeline(&ctx, &cfg, &g, 2).unwrap();
        for k in 0..4 {
            assert!((lim[k] - delta[k]).abs() <= 1e-14);
        }
        assert!(f.rho == 1.0 && f.pressure == 1.0);
        assert!((f.combined(2) - 1.0).abs() < 1e-12);
    }

    /// The structural contract: no limiter entry point accepts a time-step
    /// size, so limited fluxes are a function of the solution snapshot only.
    #[test]
    fn pipeline_has_no_time_step_input() {
        let g = gas();
        let a = State::from_primitives(1.0, [0.3, 0.0], 1.0, &g);
        let b = State::from_primitives(0.5, [0.1, 0.0], 0.4, &g);
        let (fv, lambda) = rusanov_flux(&a, &b, Dir::X, &g).unwrap();
        let bounds = NodeBounds {
            rho: (0.4, 1.1),
            v: [(-1.0, 1.0), (-1.0, 1.0)],
            e: (0.0, 5.0)
        };
        let ca = a.as_cons();
        let cb = b.as_cons();
        let fa = crate::euler::physical_flux(&a, Dir::X, &g).unwrap();
        let fb = crate::euler::physical_flux(&b, Dir::X, &g).unwrap();
        let mut bar = [0.0; 4];
        for k in 0..4 {
            bar[k] = 0.5 * (ca[k] + cb[k]) - (fb[k] - fa[k]) / (2.0 * lambda);
        }
        let ctx = InterfaceContext {
            delta: [0.05, -0.02, 0.0, 0.04],
            fv,
            bar,
            lambda,
            bounds: [&bounds, &bounds],
            states: [&a, &b],
            dir: Dir::X,
        };
        let cfg = LimiterConfig {
            pipeline: Pipeline::C,
            pressure_mode: PressureMode::Sharp,
            entropy_limiter: true,
        };
        let (first, _) = apply_pipeline(&ctx, &cfg, &g, 2).unwrap();
        let (second, _) = apply_pipeline(&ctx, &cfg, &g, 2).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn global_only_enforces_density_and_pressure_positivity() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..2000 {
            let a = crate::euler::State::from_primitives(
                rng.gen_range(0.05..2.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.01..2.0),
                &g,
            );
            let b = crate::euler::State::from_primitives(
                rng.gen_range(0.05..2.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.01..2.0),
                &g,
            );
            let (fv, lambda) = rusanov_flux(&a, &b, Dir::X, &g).unwrap();
            let ca = a.as_cons();
            let cb = b.as_cons();
            let fa = crate::euler::physical_flux(&a, Dir::X, &g).unwrap();
            let fb = crate::euler::physical_flux(&b, Dir::X, &g).unwrap();
            let mut bar = [0.0; 4];
            for k in 0..4 {
                bar[k] = 0.5 * (ca[k] + cb[k]) - (fb[k] - fa[k]) / (2.0 * lambda);
            }
            let delta: Cons = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let bounds = NodeBounds::unbounded();
            let ctx = InterfaceContext {
                delta,
                fv,
                bar,
                lambda,
                bounds: [&bounds, &bounds],
                states: [&a, &b],
                dir: Dir::X,
            };
            let cfg = LimiterConfig {
                pipeline: Pipeline::GlobalOnly,
                pressure_mode: PressureMode::Sharp,
                entropy_limiter: false,
            };
            let (lim, _) = apply_pipeline(&ctx, &cfg, &g, 2).unwrap();
            for sign in [1.0, -1.0] {
                let mut s = [0.0; 4];
                for k in 0..4 {
                    s[k] = bar[k] + sign * lim[k] / lambda;
                }
                assert!(s[RHO] >= -1e-12);
                if s[RHO] > 1e-12 {
                    let st = State::from_cons(s);
                    let p = pressure(&st, &g).unwrap();
                    assert!(p >= -1e-10 * (1.0 + s[ENER].abs()), "pressure {p}");
                }
            }
        }
    }
}
