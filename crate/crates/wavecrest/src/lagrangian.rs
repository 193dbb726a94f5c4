//! Independent cross-validation integrator in Lagrangian coordinates.
//!
//! Evolves the interface position, velocity and acceleration `(z, z_t,
//! z_tt)` directly, with every nonlocal coefficient computed through the
//! curve operators of [`crate::curve`]:
//!
//! ```text
//! z̄_ttt + i 𝔞 ∂z̄_t = (z̄_tt - i)/|z_tt + i| · (𝔞_t|z_α|)
//! 𝔞|z_α| = |z_tt + i|
//! (I + 𝒦*)(𝔞_t|z_α|) = Re{ i z_α/|z_α| ( 2[z_tt,𝔥](∂z̄_t/z_α)
//!                        + 2[z_t,𝔥](∂z̄_tt/z_α) - [z_t,z_t; ∂z̄_t] ) }
//! ```
//!
//! This path is `O(n²)` per step and deliberately modest: it exists to
//! falsify or confirm the conformal-variable solver, not to compete with
//! it. Agreement between the two is checked as a parametrization-free
//! distance between the interfaces.

use num_complex::Complex64;

use crate::curve::{
    commutator_bracket, curve_hilbert, solve_i_plus_kstar, square_bracket, CurveParam,
};
use crate::error::{Result, WaveError};
use crate::interp::hausdorff_periodic;
use crate::riemann::{self, RiemannState, SolverConfig};
use crate::spectral::{deriv, GridFunction, C64};

/// Lagrangian state; `z_offset` holds the periodic part `z - α`.
#[derive(Clone, Debug)]
pub struct LagrangianState {
    pub t: f64,
    pub z_offset: GridFunction,
    pub zt: GridFunction,
    pub ztt: GridFunction,
}

/// Derived fields for one Lagrangian state.
#[derive(Clone, Debug)]
pub struct LagAux {
    /// `𝔞|z_α| = |z_tt + i|`, strictly positive in the regular regime.
    pub a_za: GridFunction,
    /// `𝔞_t|z_α|`, from the second-kind solve.
    pub at_za: GridFunction,
    /// Unit direction `(z̄_tt - i)/|z_tt + i|`.
    pub unit: GridFunction,
}

impl LagrangianState {
    pub fn curve(&self, floor: f64) -> Result<CurveParam> {
        CurveParam::new(&self.z_offset, floor)
    }

    /// Initial data sampled from a reconstructed conformal-solver state.
    pub fn from_riemann(state: &RiemannState, chord_arc_floor: f64) -> Result<Self> {
        let offset = riemann::reconstruct_offset(state, chord_arc_floor)?;
        Ok(Self {
            t: state.t,
            z_offset: offset,
            zt: state.u.conj(),
            ztt: state.w.conj(),
        })
    }
}

/// `𝔞|z_α|`, `𝔞_t|z_α|` and the unit direction for the current state.
pub fn compute_lag_aux(state: &LagrangianState, floor: f64, tol: f64) -> Result<LagAux> {
    let c = state.curve(floor)?;
    let i_c = C64::new(0.0, 1.0);
    let a_za = state.ztt.map(|v| C64::new((v + i_c).norm(), 0.0));
    let min_a = a_za
        .values
        .iter()
        .map(|v| v.re)
        .fold(f64::INFINITY, f64::min);
    if min_a < 1e-8 {
        return Err(WaveError::TaylorDegeneracy {
            a1_min: min_a,
            t: state.t,
        });
    }
    let unit = state.ztt.zip(&a_za, |v, a| (v.conj() - i_c) / a.re);

    let zbt = state.zt.conj();
    let zbtt = state.ztt.conj();
    let bracket = commutator_bracket(&c, &state.ztt, &zbt)?
        .scale(C64::new(2.0, 0.0))
        .add(&commutator_bracket(&c, &state.zt, &zbtt)?.scale(C64::new(2.0, 0.0)))
        .sub(&square_bracket(&c, &state.zt, &deriv(&zbt))?);
    let unit_tangent: Vec<C64> = c.z_alpha.iter().map(|&za| i_c * za / za.norm()).collect();
    let rhs = GridFunction::new(
        c.grid,
        bracket
            .values
            .iter()
            .zip(&unit_tangent)
            .map(|(&bv, &ut)| C64::new((ut * bv).re, 0.0))
            .collect(),
    );
    let at_za = solve_i_plus_kstar(&c, &rhs, tol)?;
    Ok(LagAux { a_za, at_za, unit })
}

/// Time derivative `(dz, dz_t, dz_tt)`.
pub fn rhs_lag(
    state: &LagrangianState,
    floor: f64,
    tol: f64,
) -> Result<(GridFunction, GridFunction, GridFunction)> {
    let c = state.curve(floor)?;
    let aux = compute_lag_aux(state, floor, tol)?;
    let i_c = C64::new(0.0, 1.0);
    let dzbt = deriv(&state.zt.conj());
    let za_abs: Vec<f64> = c.z_alpha.iter().map(|v| v.norm()).collect();
    let dztt_bar = GridFunction::new(
        c.grid,
        dzbt.values
            .iter()
            .enumerate()
            .map(|(j, &d)| {
                let fraka = aux.a_za.values[j].re / za_abs[j];
                -i_c * fraka * d + aux.unit.values[j] * aux.at_za.values[j].re
            })
            .collect(),
    );
    Ok((state.zt.clone(), state.ztt.clone(), dztt_bar.conj()))
}

/// One RK4 step; if `project` is set, the conjugate velocity is re-projected
/// onto the holomorphic side with the curve transform `½(I + 𝔥)`.
pub fn step_lag(
    state: &LagrangianState,
    dt: f64,
    floor: f64,
    tol: f64,
    project: bool,
) -> Result<LagrangianState> {
    let stage = |s: &LagrangianState| rhs_lag(s, floor, tol);
    let advance = |k: &(GridFunction, GridFunction, GridFunction), h: f64| LagrangianState {
        t: state.t + h,
        z_offset: state.z_offset.add_scaled(&k.0, h),
        zt: state.zt.add_scaled(&k.1, h),
        ztt: state.ztt.add_scaled(&k.2, h),
    };
    let k1 = stage(state)?;
    let k2 = stage(&advance(&k1, dt / 2.0))?;
    let k3 = stage(&advance(&k2, dt / 2.0))?;
    let k4 = stage(&advance(&k3, dt))?;
    let sixth = dt / 6.0;
    let comb = |a: &GridFunction,
                k1: &GridFunction,
                k2: &GridFunction,
                k3: &GridFunction,
                k4: &GridFunction| {
        a.add_scaled(k1, sixth)
            .add_scaled(k2, 2.0 * sixth)
            .add_scaled(k3, 2.0 * sixth)
            .add_scaled(k4, sixth)
    };
    let mut next = LagrangianState {
        t: state.t + dt,
        z_offset: comb(&state.z_offset, &k1.0, &k2.0, &k3.0, &k4.0),
        zt: comb(&state.zt, &k1.1, &k2.1, &k3.1, &k4.1),
        ztt: comb(&state.ztt, &k1.2, &k2.2, &k3.2, &k4.2),
    };
    if !next.z_offset.is_finite() || !next.zt.is_finite() || !next.ztt.is_finite() {
        return Err(WaveError::NumericalBlowup { t: next.t });
    }
    if project {
        let c = next.curve(floor)?;
        let zbt = next.zt.conj();
        let projected = zbt.add(&curve_hilbert(&c, &zbt)?).scale(C64::new(0.5, 0.0));
        next.zt = projected.conj();
    }
    Ok(next)
}

/// Relative holomorphicity residual of the conjugate velocity on the
/// current curve.
pub fn holo_residual(state: &LagrangianState, floor: f64) -> Result<f64> {
    let c = state.curve(floor)?;
    let zbt = state.zt.conj();
    let r = zbt.sub(&curve_hilbert(&c, &zbt)?).norm_l2();
    Ok(r / (1.0 + state.zt.norm_l2()))
}

/// Result of running both formulations from matched initial data.
#[derive(Clone, Debug)]
pub struct CrossValidation {
    /// Hausdorff distance between the two interfaces at the final time.
    pub hausdorff: f64,
    /// Sup difference of the velocity fields compared at matched points.
    pub velocity_sup: f64,
    pub riemann_offset: GridFunction,
    pub lagrangian_state: LagrangianState,
}

/// Run the conformal-variable and Lagrangian solvers to `cfg.t_end` from
/// identical initial data and compare the interfaces as point sets.
///
/// `lag_dt` fixes the (shared) step size; `lag_projection_cadence` controls
/// the curve-projection of the Lagrangian conjugate velocity (0 disables).
pub fn cross_validate(
    cfg: &SolverConfig,
    lag_dt: f64,
    lag_projection_cadence: usize,
) -> Result<CrossValidation> {
    let state0 = riemann::init_from_config(cfg)?;
    let mut rs = state0.clone();
    let mut ls = LagrangianState::from_riemann(&state0, cfg.chord_arc_floor)?;

    let steps = (cfg.t_end / lag_dt).round().max(1.0) as usize;
    let dt = cfg.t_end / steps as f64;
    for step in 0..steps {
        let project_r = cfg.projection_cadence > 0 && (step + 1) % cfg.projection_cadence == 0;
        rs = riemann::step_rk4(&rs, dt, cfg.dealias_fraction, project_r)?;
        let project_l = lag_projection_cadence > 0 && (step + 1) % lag_projection_cadence == 0;
        ls = step_lag(&ls, dt, cfg.chord_arc_floor, cfg.solver_tol, project_l)?;
    }

    let off_r = riemann::reconstruct_offset(&rs, cfg.chord_arc_floor)?;
    let hausdorff = hausdorff_periodic(&off_r, &ls.z_offset, 16);

    // velocity fields compared at matched interface points
    let m = 16 * cfg.n;
    let fine_pos = crate::interp::sample_curve(&off_r, m);
    let fine_vel = crate::interp::resample(&rs.u.conj(), m);
    let mut velocity_sup: f64 = 0.0;
    let tau = std::f64::consts::TAU;
    let nodes = ls.z_offset.grid.nodes();
    for (j, &zoff) in ls.z_offset.values.iter().enumerate() {
        let zl = zoff + Complex64::new(nodes[j], 0.0);
        let mut best = f64::INFINITY;
        let mut vel = C64::new(0.0, 0.0);
        for (i, &p) in fine_pos.iter().enumerate() {
            for shift in [-tau, 0.0, tau] {
                let d = (p + Complex64::new(shift, 0.0) - zl).norm();
                if d < best {
                    best = d;
                    vel = fine_vel[i];
                }
            }
        }
        velocity_sup = velocity_sup.max((vel - ls.zt.values[j]).norm());
    }

    Ok(CrossValidation {
        hausdorff,
        velocity_sup,
        riemann_offset: off_r,
        lagrangian_state: ls,
    })
}
