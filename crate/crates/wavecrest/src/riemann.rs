//! Primary evolution in the conformal boundary variable.
//!
//! The state is the pair `(u, w)` of conjugate velocity and conjugate
//! acceleration traces on the interface, parametrized by the conformal
//! half-plane coordinate `α'`. The interface never enters the evolution; it
//! is reconstructed afterwards from the algebraic relation between `w`, the
//! Taylor coefficient `A₁` and the map derivative `Z_α'`.
//!
//! The evolved system is
//!
//! ```text
//! ∂_t u = -B ∂u + w
//! ∂_t w = -B ∂w - i 𝒜 ∂u + g
//! ```
//!
//! with every coefficient field computed from `(u, w)` alone:
//!
//! ```text
//! A₁   = 1 - Im [Z_t, H] ∂ū          (Z_t = conj(u), real, >= 1)
//! 1/Z_α' = i (w - i) / A₁
//! 𝒜    = A₁ |1/Z_α'|²
//! B    = Re([Z_t, H](1/Z_α' - 1)) + 2 Re Z_t
//! g    = (w - i) · (-Im(2[Z_t,H]∂w + 2[Z_tt,H]∂u - [Z_t,Z_t; D u]) / A₁)
//! ```
//!
//! All commutators use the flat multiplier transform `H`; this is the point
//! of the conformal variable. The squared bracket has two routes: an exact
//! spectral form used in the hot loop (see [`square_bracket_flat`]) and the
//! `O(n²)` quadrature in [`crate::curve::square_bracket`], kept as an
//! independent cross-check.

use crate::curve::chord_arc_ratio;
use crate::error::{Result, WaveError};
use crate::spectral::{
    antideriv, commutator_flat, dealias, deriv, half_deriv, hilbert, project_lower, GridFunction,
    PeriodicGrid, C64,
};

/// Lower bound enforced on `|w - i|`; below it the Taylor coefficient
/// machinery degenerates (angled-crest regime, out of scope).
const W_MINUS_I_FLOOR: f64 = 1e-8;

/// Tolerance slack on the `A₁ >= 1` guarantee before declaring breakdown.
const A1_BREAKDOWN: f64 = 1e-6;

/// Evolved unknowns at one time.
#[derive(Clone, Debug)]
pub struct RiemannState {
    pub t: f64,
    /// Conjugate velocity trace (holomorphic side, mean zero).
    pub u: GridFunction,
    /// Conjugate acceleration trace.
    pub w: GridFunction,
    /// Mean of the interface offset `Z - α'`, carried for reconstruction.
    pub zbar_mean: C64,
}

/// Per-step derived fields.
#[derive(Clone, Debug)]
pub struct AuxFields {
    pub a1: GridFunction,
    pub inv_za: GridFunction,
    pub acal: GridFunction,
    pub b: GridFunction,
    pub at_over_a: GridFunction,
    pub g: GridFunction,
}

/// Scalar health indicators at one output time.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub taylor_min: f64,
    pub a1_min: f64,
    pub chord_arc: f64,
    pub holo_residual: f64,
    pub mean_height: f64,
}

/// Time step policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// CFL-derived: `dt = c · min(h/(|B|∞ + 0.1), 2.8/sqrt(k_max · sup 𝒜))`
    /// with `k_max` the dealias cutoff.
    Cfl(f64),
}

/// Initial data descriptors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitKind {
    /// Flat surface at rest.
    Rest,
    /// Flat conformal map, single-mode velocity `u₀ = ε e^{i(phase - kα')}`.
    SingleMode { k: i64, eps: f64, phase: f64 },
    /// Displaced surface at rest: `Z_α' = 1 + ε e^{i(phase - kα')}`, `u₀ = 0`.
    Graph { k: i64, eps: f64, phase: f64 },
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub n: usize,
    pub dt: DtPolicy,
    pub t_end: f64,
    pub dealias_fraction: f64,
    /// Project the constraints every this many steps; 0 disables.
    pub projection_cadence: usize,
    pub output_cadence: usize,
    pub solver_tol: f64,
    pub chord_arc_floor: f64,
    /// Order `s` of the energy functional `E_s`.
    pub energy_order: usize,
    pub init: InitKind,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 128,
            dt: DtPolicy::Cfl(0.5),
            t_end: 1.0,
            dealias_fraction: 2.0 / 3.0,
            projection_cadence: 1,
            output_cadence: 10,
            solver_tol: 1e-10,
            chord_arc_floor: 1e-3,
            energy_order: 0,
            init: InitKind::Rest,
            seed: 0,
        }
    }
}

/// Taylor coefficient via the commutator form:
/// `A₁ = 1 - Im [Z_t, H] ∂_α' conj(Z_t)`.
pub fn a1_commutator(u: &GridFunction) -> GridFunction {
    let zt = u.conj();
    let c = commutator_flat(&zt, &deriv(u));
    c.map(|v| C64::new(1.0 - v.im, 0.0))
}

/// Taylor coefficient via the positive-kernel quadrature:
/// `A₁ = 1 + (1/8π) ∫ |Z_t(α')-Z_t(β')|² / sin²((α'-β')/2) dβ'`.
///
/// The kernel is the image resummation of `1/(α'-β')²`; positivity of the
/// integrand makes `A₁ >= 1` manifest. Used as the independent cross-check
/// of [`a1_commutator`].
pub fn a1_quadrature(u: &GridFunction) -> GridFunction {
    let zt = u.conj();
    let n = u.grid.len();
    let h = u.grid.step();
    let nodes = u.grid.nodes();
    let scale = h / (4.0 * std::f64::consts::PI); // 2h · (1/8π)
    let mut out = GridFunction::zeros(u.grid);
    for i in 0..n {
        let mut acc = 0.0;
        let mut j = (i + 1) % 2;
        while j < n {
            let s = ((nodes[i] - nodes[j]) / 2.0).sin();
            acc += (zt.values[i] - zt.values[j]).norm_sqr() / (s * s);
            j += 2;
        }
        out.values[i] = C64::new(1.0 + scale * acc, 0.0);
    }
    out
}

/// Spectral evaluation of the squared-difference bracket on the flat
/// interface:
///
/// `[f, f; q] = -( f²·H∂q - 2f·H∂(fq) + H∂(f²q) )`.
///
/// The sign comes from the finite part of the `¼csc²` convolution, whose
/// multiplier is `-π|k|`; the `|k|`-independent part cancels in the
/// three-term combination.
pub fn square_bracket_flat(f: &GridFunction, q: &GridFunction) -> GridFunction {
    let f2 = f.mul(f);
    let t1 = f2.mul(&hilbert(&deriv(q)));
    let t2 = f.mul(&hilbert(&deriv(&f.mul(q)))).scale(C64::new(2.0, 0.0));
    let t3 = hilbert(&deriv(&f2.mul(q)));
    t1.sub(&t2).add(&t3).scale(C64::new(-1.0, 0.0))
}

/// Derived coefficient fields for a state `(u, w)`.
///
/// Fails with [`WaveError::TaylorDegeneracy`] when `A₁` drops below its
/// guaranteed floor or `|w - i|` collapses.
pub fn compute_aux(u: &GridFunction, w: &GridFunction, t: f64) -> Result<AuxFields> {
    u.ensure_finite("aux input u")?;
    w.ensure_finite("aux input w")?;
    let a1 = a1_commutator(u);
    let a1_min = a1.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if a1_min < 1.0 - A1_BREAKDOWN {
        return Err(WaveError::TaylorDegeneracy { a1_min, t });
    }
    let i_c = C64::new(0.0, 1.0);
    let w_minus_i_min = w
        .values
        .iter()
        .map(|&v| (v - i_c).norm())
        .fold(f64::INFINITY, f64::min);
    if w_minus_i_min < W_MINUS_I_FLOOR {
        return Err(WaveError::TaylorDegeneracy { a1_min, t });
    }

    let zt = u.conj();
    let ztt = w.conj();
    let inv_za = w.zip(&a1, |wv, a| i_c * (wv - i_c) / a.re);
    let acal = inv_za.zip(&a1, |z, a| C64::new(a.re * z.norm_sqr(), 0.0));
    let b_comm = commutator_flat(&zt, &inv_za.map(|v| v - C64::new(1.0, 0.0)));
    let b = b_comm.zip(&zt, |c, z| C64::new(c.re + 2.0 * z.re, 0.0));

    let d_u = inv_za.mul(&deriv(u));
    let bracket_sum = commutator_flat(&zt, &deriv(w))
        .scale(C64::new(2.0, 0.0))
        .add(&commutator_flat(&ztt, &deriv(u)).scale(C64::new(2.0, 0.0)))
        .sub(&square_bracket_flat(&zt, &d_u));
    let at_over_a = bracket_sum.zip(&a1, |v, a| C64::new(-v.im / a.re, 0.0));
    let g = w.zip(&at_over_a, |wv, r| (wv - i_c) * r.re);

    Ok(AuxFields {
        a1,
        inv_za,
        acal,
        b,
        at_over_a,
        g,
    })
}

/// Time derivative of `(u, w, zbar_mean)`.
pub fn rhs(
    u: &GridFunction,
    w: &GridFunction,
    t: f64,
    frac: f64,
) -> Result<(GridFunction, GridFunction, C64)> {
    let (du, dw, dzm, _) = rhs_with_aux(u, w, t, frac)?;
    Ok((du, dw, dzm))
}

/// Same as [`rhs`] but also returns the aux fields of the evaluation point
/// (the transport coefficient `B` is needed to advect material labels).
pub fn rhs_with_aux(
    u: &GridFunction,
    w: &GridFunction,
    t: f64,
    frac: f64,
) -> Result<(GridFunction, GridFunction, C64, AuxFields)> {
    let aux = compute_aux(u, w, t)?;
    let du = dealias(
        &aux.b.mul(&deriv(u)).scale(C64::new(-1.0, 0.0)).add(w),
        frac,
    );
    let dw = dealias(
        &aux.b
            .mul(&deriv(w))
            .scale(C64::new(-1.0, 0.0))
            .sub(&aux.acal.mul(&deriv(u)).scale(C64::new(0.0, 1.0)))
            .add(&aux.g),
        frac,
    );
    // mean of dZ/dt = Z_t - B Z_α' drives the offset mean
    let za = aux.inv_za.map(|v| C64::new(1.0, 0.0) / v);
    let dzm = u.conj().sub(&aux.b.mul(&za)).mean();
    Ok((du, dw, dzm, aux))
}

/// Enforce the structural constraints on `(u, w)`.
///
/// `u` is restricted to spectrum `k < 0` (the holomorphicity constraint
/// `Hu = u` plus the zero-mean convention). For `w` the constraint is not
/// holomorphy of `w` itself but of the map derivative: `1/Z_α' - 1`
/// computed from `(w, A₁)` must have spectrum in `k < 0` with zero mean, so
/// the projection is conjugated through that relation.
pub fn project_constraints(u: &GridFunction, w: &GridFunction) -> (GridFunction, GridFunction) {
    let i_c = C64::new(0.0, 1.0);
    let u2 = project_lower(u);
    let a1 = a1_commutator(&u2);
    let q = w.zip(&a1, |wv, a| i_c * (wv - i_c) / a.re - 1.0);
    let q_proj = project_lower(&q);
    let w2 = q_proj.zip(&a1, |qv, a| i_c - i_c * a.re * (qv + 1.0));
    (u2, w2)
}

/// One classical RK4 step of size `dt`; projection applied afterwards when
/// `project` is set.
pub fn step_rk4(state: &RiemannState, dt: f64, frac: f64, project: bool) -> Result<RiemannState> {
    let t = state.t;
    let (k1u, k1w, k1m) = rhs(&state.u, &state.w, t, frac)?;
    let (k2u, k2w, k2m) = rhs(
        &state.u.add_scaled(&k1u, dt / 2.0),
        &state.w.add_scaled(&k1w, dt / 2.0),
        t + dt / 2.0,
        frac,
    )?;
    let (k3u, k3w, k3m) = rhs(
        &state.u.add_scaled(&k2u, dt / 2.0),
        &state.w.add_scaled(&k2w, dt / 2.0),
        t + dt / 2.0,
        frac,
    )?;
    let (k4u, k4w, k4m) = rhs(
        &state.u.add_scaled(&k3u, dt),
        &state.w.add_scaled(&k3w, dt),
        t + dt,
        frac,
    )?;
    let sixth = dt / 6.0;
    let mut u = state
        .u
        .add_scaled(&k1u, sixth)
        .add_scaled(&k2u, 2.0 * sixth)
        .add_scaled(&k3u, 2.0 * sixth)
        .add_scaled(&k4u, sixth);
    let mut w = state
        .w
        .add_scaled(&k1w, sixth)
        .add_scaled(&k2w, 2.0 * sixth)
        .add_scaled(&k3w, 2.0 * sixth)
        .add_scaled(&k4w, sixth);
    let zbar_mean = state.zbar_mean + sixth * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    if project {
        let (u2, w2) = project_constraints(&u, &w);
        u = u2;
        w = w2;
    }
    if !u.is_finite() || !w.is_finite() || !(zbar_mean.re.is_finite() && zbar_mean.im.is_finite()) {
        return Err(WaveError::NumericalBlowup { t: t + dt });
    }
    Ok(RiemannState {
        t: t + dt,
        u,
        w,
        zbar_mean,
    })
}

fn holo_residual_rel(f: &GridFunction) -> f64 {
    f.sub(&hilbert(f)).norm_l2() / (1.0 + f.norm_l2())
}

/// Build a compatible state from the map derivative `Z_α' - 1` and the
/// initial conjugate velocity `u₀`.
///
/// `w` is not free data: it is computed from the interface relation
/// `w = i - i A₁ / Z_α'`, which makes the pair satisfy the first-order
/// system at `t = 0` by construction.
pub fn init_state(za_minus_1: &GridFunction, u0: &GridFunction) -> Result<RiemannState> {
    za_minus_1.ensure_finite("Z_alpha - 1")?;
    u0.ensure_finite("u0")?;
    let resid_u = u0.sub(&project_lower(u0)).norm_l2() / (1.0 + u0.norm_l2());
    if resid_u > 1e-10 {
        return Err(WaveError::NotHolomorphic {
            what: "u0",
            residual: resid_u,
        });
    }
    let resid_za =
        za_minus_1.sub(&project_lower(za_minus_1)).norm_l2() / (1.0 + za_minus_1.norm_l2());
    if resid_za > 1e-10 {
        return Err(WaveError::NotHolomorphic {
            what: "Z_alpha - 1",
            residual: resid_za,
        });
    }
    let za = za_minus_1.map(|v| v + C64::new(1.0, 0.0));
    let min_za = za
        .values
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    if min_za < 1e-3 {
        return Err(WaveError::DegenerateMap { min_abs: min_za });
    }
    let i_c = C64::new(0.0, 1.0);
    let a1 = a1_commutator(u0);
    let w = za.zip(&a1, |zav, a| i_c - i_c * a.re / zav);

    // round-trip: 1/Z_α' recomputed from (w, A₁) must reproduce the input
    let inv_back = w.zip(&a1, |wv, a| i_c * (wv - i_c) / a.re);
    let inv_direct = za.map(|v| C64::new(1.0, 0.0) / v);
    let rt = inv_back.sub(&inv_direct).norm_inf();
    debug_assert!(rt <= 1e-10, "init round-trip residual {rt:.3e}");

    Ok(RiemannState {
        t: 0.0,
        u: u0.clone(),
        w,
        zbar_mean: C64::new(0.0, 0.0),
    })
}

/// Build the initial state described by a config.
pub fn init_from_config(cfg: &SolverConfig) -> Result<RiemannState> {
    let grid = PeriodicGrid::new(cfg.n)?;
    let (za_minus_1, u0) = match cfg.init {
        InitKind::Rest => (GridFunction::zeros(grid), GridFunction::zeros(grid)),
        InitKind::SingleMode { k, eps, phase } => {
            if k <= 0 || k as usize >= cfg.n / 2 {
                return Err(WaveError::Config(format!(
                    "init.k must satisfy 0 < k < n/2, got {k}"
                )));
            }
            let u0 =
                GridFunction::from_fn(grid, |a| C64::new(0.0, phase - k as f64 * a).exp() * eps);
            (GridFunction::zeros(grid), u0)
        }
        InitKind::Graph { k, eps, phase } => {
            if k <= 0 || k as usize >= cfg.n / 2 {
                return Err(WaveError::Config(format!(
                    "init.k must satisfy 0 < k < n/2, got {k}"
                )));
            }
            let za =
                GridFunction::from_fn(grid, |a| C64::new(0.0, phase - k as f64 * a).exp() * eps);
            (za, GridFunction::zeros(grid))
        }
    };
    init_state(&za_minus_1, &u0)
}

/// Reconstruct the interface offset `Z - α'` from the state.
///
/// `Z_α' = A₁ / (i(w - i))`; the offset is the antiderivative of
/// `Z_α' - 1` plus the carried mean. The reconstructed curve must satisfy
/// the chord-arc floor.
pub fn reconstruct_offset(state: &RiemannState, chord_arc_floor: f64) -> Result<GridFunction> {
    let aux = compute_aux(&state.u, &state.w, state.t)?;
    let za = aux.inv_za.map(|v| C64::new(1.0, 0.0) / v);
    let mut s = za.map(|v| v - C64::new(1.0, 0.0));
    let m = s.mean();
    s = s.shift(-m); // rounding-level mean removal before integrating
    let off = antideriv(&s)?.shift(state.zbar_mean);
    let nodes = state.u.grid.nodes();
    let z: Vec<C64> = nodes
        .iter()
        .zip(&off.values)
        .map(|(&a, &v)| C64::new(a, 0.0) + v)
        .collect();
    let mu = chord_arc_ratio(&nodes, &z);
    if mu < chord_arc_floor {
        return Err(WaveError::SurfaceContact {
            mu,
            floor: chord_arc_floor,
            t: state.t,
        });
    }
    Ok(off)
}

/// Energy functional `E_s = Σ_{j<=s} ∫ |∂ʲ w|² + |∂ʲ |D|^{1/2} u|² dα'`.
pub fn energy(state: &RiemannState, order: usize) -> f64 {
    let mut total = 0.0;
    let mut wj = state.w.clone();
    let mut uj = half_deriv(&state.u);
    for j in 0..=order {
        total += wj.norm_l2().powi(2) + uj.norm_l2().powi(2);
        if j < order {
            wj = deriv(&wj);
            uj = deriv(&uj);
        }
    }
    total
}

/// Scalar diagnostics for one state.
pub fn diagnostics(state: &RiemannState, cfg: &SolverConfig) -> Result<DiagnosticsRecord> {
    let aux = compute_aux(&state.u, &state.w, state.t)?;
    let a1_min = aux
        .a1
        .values
        .iter()
        .map(|v| v.re)
        .fold(f64::INFINITY, f64::min);
    let taylor_min = aux
        .a1
        .values
        .iter()
        .zip(&aux.inv_za.values)
        .map(|(a, z)| a.re * z.norm())
        .fold(f64::INFINITY, f64::min);
    let off = reconstruct_offset(state, cfg.chord_arc_floor)?;
    let nodes = state.u.grid.nodes();
    let z: Vec<C64> = nodes
        .iter()
        .zip(&off.values)
        .map(|(&a, &v)| C64::new(a, 0.0) + v)
        .collect();
    let chord_arc = chord_arc_ratio(&nodes, &z);
    let za = aux.inv_za.map(|v| C64::new(1.0, 0.0) / v);
    // mass proxy: (1/2π) ∫ Im Z · ∂_α' Re Z dα', conserved by the flow
    let mean_height = off
        .values
        .iter()
        .zip(&za.values)
        .map(|(o, zav)| o.im * zav.re)
        .sum::<f64>()
        / state.u.len() as f64;
    Ok(DiagnosticsRecord {
        t: state.t,
        energy: energy(state, cfg.energy_order),
        taylor_min,
        a1_min,
        chord_arc,
        holo_residual: holo_residual_rel(&state.u),
        mean_height,
    })
}

/// CFL-derived step size for the current state.
pub fn cfl_dt(aux: &AuxFields, n: usize, frac: f64, c: f64) -> f64 {
    let h = std::f64::consts::TAU / n as f64;
    let b_sup = aux.b.norm_inf();
    let acal_sup = aux.acal.values.iter().map(|v| v.re).fold(0.0, f64::max);
    let k_max = (frac * n as f64 / 2.0).max(1.0);
    let advective = h / (b_sup + 0.1);
    let dispersive = 2.8 / (k_max * acal_sup).sqrt();
    c * advective.min(dispersive)
}

/// One interface snapshot.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub index: usize,
    pub t: f64,
    pub offset: GridFunction,
    pub u: GridFunction,
    pub w: GridFunction,
}

/// Output of a batch run; on failure the partial output is retained and the
/// error recorded.
#[derive(Debug)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: Option<RiemannState>,
    pub failure: Option<WaveError>,
}

/// Execute init -> step loop -> periodic diagnostics/snapshots.
pub fn run(cfg: &SolverConfig) -> RunOutput {
    let mut out = RunOutput {
        snapshots: Vec::new(),
        records: Vec::new(),
        final_state: None,
        failure: None,
    };
    let mut state = match init_from_config(cfg) {
        Ok(s) => s,
        Err(e) => {
            out.failure = Some(e);
            return out;
        }
    };
    let emit = |state: &RiemannState, out: &mut RunOutput| -> Result<()> {
        let rec = diagnostics(state, cfg)?;
        let off = reconstruct_offset(state, cfg.chord_arc_floor)?;
        out.records.push(rec);
        out.snapshots.push(Snapshot {
            index: out.snapshots.len(),
            t: state.t,
            offset: off,
            u: state.u.clone(),
            w: state.w.clone(),
        });
        Ok(())
    };
    if let Err(e) = emit(&state, &mut out) {
        out.failure = Some(e);
        return out;
    }

    let mut step_index = 0usize;
    const MAX_STEPS: usize = 10_000_000;
    while state.t < cfg.t_end - 1e-12 && step_index < MAX_STEPS {
        let dt_raw = match cfg.dt {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl(c) => match compute_aux(&state.u, &state.w, state.t) {
                Ok(aux) => cfl_dt(&aux, cfg.n, cfg.dealias_fraction, c),
                Err(e) => {
                    out.failure = Some(e);
                    out.final_state = Some(state);
                    return out;
                }
            },
        };
        let dt = dt_raw.min(cfg.t_end - state.t);
        step_index += 1;
        let project = cfg.projection_cadence > 0 && step_index % cfg.projection_cadence == 0;
        match step_rk4(&state, dt, cfg.dealias_fraction, project) {
            Ok(next) => state = next,
            Err(e) => {
                out.failure = Some(e);
                out.final_state = Some(state);
                return out;
            }
        }
        let at_end = state.t >= cfg.t_end - 1e-12;
        if step_index % cfg.output_cadence.max(1) == 0 || at_end {
            if let Err(e) = emit(&state, &mut out) {
                out.failure = Some(e);
                out.final_state = Some(state);
                return out;
            }
        }
    }
    out.final_state = Some(state);
    out
}
