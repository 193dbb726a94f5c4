//! Normal-form diagnostics: the flattening coordinate change, the
//! transformed height unknown, and numerical verification of the
//! quadratic/cubic structure of the transformed equations.
//!
//! The diffeomorphism `k` is built map-free from the curve alone,
//!
//! ```text
//! k = z̄ + ½(I + 𝔥)(I + 𝔎)^{-1}(z - z̄),        𝔎 = Re 𝔥,
//! ```
//!
//! normalized to `mean(k - α) = 0`. The construction makes `k` real; the
//! discrete imaginary part is asserted small as a correctness check. The
//! transformed unknown is `θ = Π ∘ k^{-1}` with `Π = (I - 𝔥)(z - z̄)`.
//!
//! Working on trajectory windows (five Lagrangian samples at uniform
//! spacing), the module evaluates both sides of the quadratic identities
//! for `b = k_t ∘ k^{-1}` and `A - 1`, the cubic identity for
//! `(D_t² - iA∂)θ`, and fits amplitude-scaling slopes. Two gauge points
//! matter and are handled explicitly:
//!
//! * the mean normalization of `k` leaves a time-dependent additive
//!   constant in `k_t`, so the `b` identity is compared mean-free and the
//!   formula-`b` is checked to differ from the frame drift by a constant;
//! * inside `D_t = ∂_t + b ∂` the frame-consistent drift is the finite
//!   difference of the normalized `k` itself, which is what the stored
//!   `θ` samples follow.

use num_complex::Complex64;

use crate::curve::{
    commutator_bracket, curve_hilbert, solve_i_minus_kcal, solve_i_plus_kcal, CurveParam,
};
use crate::error::{Result, WaveError};
use crate::interp::trig_eval_many;
use crate::riemann::{self, RiemannState};
use crate::spectral::{deriv, GridFunction, PeriodicGrid, C64};

/// One Lagrangian sample along a trajectory.
#[derive(Clone, Debug)]
pub struct WindowSample {
    pub t: f64,
    /// Periodic part of the interface position, `z - α`.
    pub z_offset: GridFunction,
    pub zt: GridFunction,
    pub ztt: GridFunction,
}

/// Uniformly spaced Lagrangian samples bracketing an analysis time.
#[derive(Clone, Debug)]
pub struct TrajectoryWindow {
    pub dt: f64,
    pub samples: Vec<WindowSample>,
}

impl TrajectoryWindow {
    pub fn mid(&self) -> usize {
        self.samples.len() / 2
    }
}

/// Transformed fields at the middle sample of a window.
#[derive(Clone, Debug)]
pub struct NormalFormFields {
    /// `k - α`, real, mean zero.
    pub k_offset: GridFunction,
    /// `θ = Π ∘ k^{-1}` on the uniform frame grid.
    pub theta: GridFunction,
    /// `b` recovered from the quadratic identity (gauge pinned by the
    /// right-hand side).
    pub b: GridFunction,
    /// `A - 1` recovered from its quadratic identity.
    pub a_minus_1: GridFunction,
}

/// Residuals of the two quadratic identities at the middle sample.
#[derive(Clone, Debug)]
pub struct QuadraticReport {
    pub fields: NormalFormFields,
    /// `‖(I-ℋ)b - rhs‖∞` with the additive gauge constant removed.
    pub b_residual: f64,
    /// `‖(I-ℋ)(A-1) - rhs‖∞`.
    pub a_residual: f64,
    /// Deviation of `b_formula - b_framedrift` from a constant.
    pub b_gauge_spread: f64,
}

/// Cubic-identity evaluation at the middle sample.
#[derive(Clone, Debug)]
pub struct CubicReport {
    pub residual: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
}

/// Amplitude-scaling study results.
#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub epsilons: Vec<f64>,
    pub norms_b: Vec<f64>,
    pub norms_a_minus_1: Vec<f64>,
    pub norms_rhs_cubic: Vec<f64>,
    pub norms_residual: Vec<f64>,
    /// Fitted log-log slopes for the four norm lists above.
    pub slopes: [f64; 4],
}

const IM_K_TOL: f64 = 1e-8;

/// The flattening coordinate change as `k - α` (real, mean zero).
pub fn coordinate_map(c: &CurveParam, tol: f64) -> Result<GridFunction> {
    let offset = c.offset();
    // z - z̄ = 2i Im z; one real second-kind solve gives (I+𝔎)^{-1}
    let im_z = offset.im();
    let psi = solve_i_plus_kcal(c, &im_z, tol)?;
    let phi = psi.scale(C64::new(0.0, 2.0));
    let half_proj = phi.add(&curve_hilbert(c, &phi)?).scale(C64::new(0.5, 0.0));
    let k_off_c = offset.conj().add(&half_proj);
    let im_max = k_off_c.im().norm_inf();
    if im_max > IM_K_TOL {
        return Err(WaveError::Interpolation(format!(
            "coordinate map has imaginary part {im_max:.3e}"
        )));
    }
    let mut k_off = k_off_c.re();
    let m = k_off.mean();
    k_off = k_off.shift(-m);
    let min_kp = deriv(&k_off)
        .values
        .iter()
        .map(|v| 1.0 + v.re)
        .fold(f64::INFINITY, f64::min);
    if min_kp <= 0.0 {
        return Err(WaveError::Monotonicity { min_kprime: min_kp });
    }
    Ok(k_off)
}

/// Invert the monotone map `k(α) = α + k_offset(α)` at the grid nodes:
/// safeguarded Newton on the trigonometric interpolant.
pub fn invert_map(k_offset: &GridFunction) -> Result<Vec<f64>> {
    let grid = k_offset.grid;
    let nodes = grid.nodes();
    let kp = deriv(k_offset);
    let mut out = Vec::with_capacity(grid.len());
    for &target in &nodes {
        let mut x = target;
        let mut converged = false;
        for _ in 0..60 {
            let fx = x + trig_eval_many(k_offset, &[x])[0].re - target;
            if fx.abs() < 1e-13 {
                converged = true;
                break;
            }
            let fpx = 1.0 + trig_eval_many(&kp, &[x])[0].re;
            if fpx <= 0.0 {
                return Err(WaveError::Monotonicity { min_kprime: fpx });
            }
            x -= fx / fpx;
        }
        if !converged {
            let fx = x + trig_eval_many(k_offset, &[x])[0].re - target;
            if fx.abs() > 1e-10 {
                return Err(WaveError::Interpolation(format!(
                    "map inversion stalled at target {target:.6} (residual {fx:.3e})"
                )));
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// `Π = (I - 𝔥)(z - z̄)` on the curve's own parametrization.
pub fn pi_field(c: &CurveParam) -> Result<GridFunction> {
    let d = c.offset().sub(&c.offset().conj());
    Ok(d.sub(&curve_hilbert(c, &d)?))
}

/// Compose a periodic field with the inverse map points.
fn compose(f: &GridFunction, points: &[f64]) -> GridFunction {
    GridFunction::new(f.grid, trig_eval_many(f, points))
}

/// Build the frame curve `ζ = z ∘ k^{-1}` as a [`CurveParam`].
fn zeta_curve(
    z_offset: &GridFunction,
    kinv: &[f64],
    floor: f64,
) -> Result<(CurveParam, GridFunction)> {
    let grid = z_offset.grid;
    let nodes = grid.nodes();
    // ζ(a) - a = (k^{-1}(a) - a) + p(k^{-1}(a))
    let p_at = trig_eval_many(z_offset, kinv);
    let zeta_off = GridFunction::new(
        grid,
        kinv.iter()
            .zip(&nodes)
            .zip(&p_at)
            .map(|((&ki, &a), &pv)| Complex64::new(ki - a, 0.0) + pv)
            .collect(),
    );
    let c = CurveParam::new(&zeta_off, floor)?;
    Ok((c, zeta_off))
}

/// `Π` and `θ = Π ∘ k^{-1}` for a single curve, plus the constraint
/// residual `‖(I + ℋ)θ‖∞` on the frame curve.
pub fn pi_theta(c: &CurveParam, tol: f64, floor: f64) -> Result<(GridFunction, GridFunction, f64)> {
    let pi = pi_field(c)?;
    let k_off = coordinate_map(c, tol)?;
    let kinv = invert_map(&k_off)?;
    let theta = compose(&pi, &kinv);
    let (zc, _) = zeta_curve(&c.offset(), &kinv, floor)?;
    let constraint = theta.add(&curve_hilbert(&zc, &theta)?).norm_inf();
    Ok((pi, theta, constraint))
}

struct FrameData {
    k_offsets: Vec<GridFunction>,
    kinvs: Vec<Vec<f64>>,
    thetas: Vec<GridFunction>,
}

fn frame_data(window: &TrajectoryWindow, tol: f64, floor: f64) -> Result<FrameData> {
    let mut k_offsets = Vec::new();
    let mut kinvs = Vec::new();
    let mut thetas = Vec::new();
    for s in &window.samples {
        let c = CurveParam::new(&s.z_offset, floor)?;
        let k_off = coordinate_map(&c, tol)?;
        let kinv = invert_map(&k_off)?;
        let pi = pi_field(&c)?;
        thetas.push(compose(&pi, &kinv));
        k_offsets.push(k_off);
        kinvs.push(kinv);
    }
    Ok(FrameData {
        k_offsets,
        kinvs,
        thetas,
    })
}

/// Frame drift `b = k_t ∘ k^{-1}` at sample `i` by central differences of
/// the normalized coordinate maps.
fn frame_drift(fd: &FrameData, window: &TrajectoryWindow, i: usize) -> GridFunction {
    let kt = fd.k_offsets[i + 1]
        .sub(&fd.k_offsets[i - 1])
        .scale(C64::new(0.5 / window.dt, 0.0));
    compose(&kt, &fd.kinvs[i])
}

/// Evaluate both quadratic identities at the middle sample of the window.
pub fn quadratic_fields(
    window: &TrajectoryWindow,
    tol: f64,
    floor: f64,
) -> Result<QuadraticReport> {
    assert!(
        window.samples.len() >= 5 && window.samples.len() % 2 == 1,
        "window needs an odd number (>= 5) of samples"
    );
    let fd = frame_data(window, tol, floor)?;
    let mid = window.mid();
    let s = &window.samples[mid];
    let kinv = &fd.kinvs[mid];
    let grid = s.z_offset.grid;
    let nodes = grid.nodes();

    let (zc, zeta_off) = zeta_curve(&s.z_offset, kinv, floor)?;
    let dt_zeta = compose(&s.zt, kinv);
    let dt2_zeta = compose(&s.ztt, kinv);
    let zeta_bar_minus_a = zeta_off.conj(); // conj(ζ) - α is the conj offset

    // identity 1: (I-ℋ) b = -[D_tζ, ℋ](∂(ζ̄ - α)/ζ_α), modulo the gauge
    let rhs_b = commutator_bracket(&zc, &dt_zeta, &zeta_bar_minus_a)?.scale(C64::new(-1.0, 0.0));
    let b_fd = frame_drift(&fd, window, mid);
    let lhs_b = b_fd.sub(&curve_hilbert(&zc, &b_fd)?);
    let mut resid_b = lhs_b.sub(&rhs_b);
    let m = resid_b.mean();
    resid_b = resid_b.shift(-m);
    let b_residual = resid_b.norm_inf();

    // formula b: Re(I-ℋ)b = (I-𝔎)b
    let b_formula = solve_i_minus_kcal(&zc, &rhs_b.re(), tol)?;
    let gauge = b_formula.sub(&b_fd.re());
    let gm = gauge.mean();
    let b_gauge_spread = gauge.shift(-gm).norm_inf();

    // identity 2: (I-ℋ)(A-1) = i[D_tζ,ℋ](∂conj(D_tζ)/ζ_α)
    //                         + i[D_t²ζ,ℋ](∂(ζ̄-α)/ζ_α)
    let rhs_a = commutator_bracket(&zc, &dt_zeta, &dt_zeta.conj())?
        .add(&commutator_bracket(&zc, &dt2_zeta, &zeta_bar_minus_a)?)
        .scale(C64::new(0.0, 1.0));
    // direct A - 1 = (𝔞 k_α) ∘ k^{-1} - 1
    let i_c = C64::new(0.0, 1.0);
    let a_za = s.ztt.map(|v| C64::new((v + i_c).norm(), 0.0));
    let z_alpha = deriv(&s.z_offset).map(|v| v + C64::new(1.0, 0.0));
    let k_alpha = deriv(&fd.k_offsets[mid]).map(|v| v + C64::new(1.0, 0.0));
    let fraka_ka = GridFunction::new(
        grid,
        a_za.values
            .iter()
            .zip(&z_alpha.values)
            .zip(&k_alpha.values)
            .map(|((a, za), ka)| C64::new(a.re / za.norm() * ka.re, 0.0))
            .collect(),
    );
    let a_direct = compose(&fraka_ka, kinv).re().shift(C64::new(-1.0, 0.0));
    let lhs_a = a_direct.sub(&curve_hilbert(&zc, &a_direct)?);
    let a_residual = lhs_a.sub(&rhs_a).norm_inf();
    let a_formula = solve_i_minus_kcal(&zc, &rhs_a.re(), tol)?;

    let _ = nodes;
    Ok(QuadraticReport {
        fields: NormalFormFields {
            k_offset: fd.k_offsets[mid].clone(),
            theta: fd.thetas[mid].clone(),
            b: b_formula,
            a_minus_1: a_formula,
        },
        b_residual,
        a_residual,
        b_gauge_spread,
    })
}

/// Right-hand side of the cubic identity at the middle sample: the two
/// double-sum integrals with sin-periodized denominators.
pub fn cubic_rhs(zeta_off: &GridFunction, dt_zeta: &GridFunction) -> GridFunction {
    let grid = zeta_off.grid;
    let n = grid.len();
    let h = grid.step();
    let nodes = grid.nodes();
    let zeta: Vec<C64> = nodes
        .iter()
        .zip(&zeta_off.values)
        .map(|(&a, &v)| Complex64::new(a, 0.0) + v)
        .collect();
    let d_dtz = deriv(dt_zeta);
    let d_im = deriv(&zeta_off.im());
    let mut out = GridFunction::zeros(grid);
    let four_over_pi = 4.0 / std::f64::consts::PI;
    let two_over_pi = 2.0 / std::f64::consts::PI;
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        let mut j = (i + 1) % 2;
        while j < n {
            let dz = ((zeta[i] - zeta[j]) * 0.5).sin() * 2.0;
            let dv = dt_zeta.values[i] - dt_zeta.values[j];
            let dy = zeta[i].im - zeta[j].im;
            acc += dv * dy / dz.norm_sqr() * four_over_pi * d_dtz.values[j];
            let r = dv / dz;
            acc += r * r * two_over_pi * d_im.values[j];
            j += 2;
        }
        out.values[i] = acc * 2.0 * h;
    }
    out
}

/// Evaluate the cubic identity `(D_t² - iA∂)θ = cubic integrals` at the
/// middle sample; `D_t` uses the frame-consistent finite-difference drift.
pub fn cubic_residual(window: &TrajectoryWindow, tol: f64, floor: f64) -> Result<CubicReport> {
    assert!(
        window.samples.len() >= 5 && window.samples.len() % 2 == 1,
        "window needs an odd number (>= 5) of samples"
    );
    let fd = frame_data(window, tol, floor)?;
    let mid = window.mid();
    let dt = window.dt;

    // D_t θ at the three interior samples
    let mut dt_theta = Vec::new();
    for i in mid - 1..=mid + 1 {
        let ddt = fd.thetas[i + 1]
            .sub(&fd.thetas[i - 1])
            .scale(C64::new(0.5 / dt, 0.0));
        let b_i = frame_drift(&fd, window, i).re();
        dt_theta.push(ddt.add(&b_i.mul(&deriv(&fd.thetas[i]))));
    }
    let b_mid = frame_drift(&fd, window, mid).re();
    let d2 = dt_theta[2]
        .sub(&dt_theta[0])
        .scale(C64::new(0.5 / dt, 0.0))
        .add(&b_mid.mul(&deriv(&dt_theta[1])));

    let s = &window.samples[mid];
    let kinv = &fd.kinvs[mid];
    let (zc, zeta_off) = zeta_curve(&s.z_offset, kinv, floor)?;
    let dt_zeta = compose(&s.zt, kinv);

    // A = 1 + formula value
    let rhs_a = commutator_bracket(&zc, &dt_zeta, &dt_zeta.conj())?
        .add(&commutator_bracket(
            &zc,
            &compose(&s.ztt, kinv),
            &zeta_off.conj(),
        )?)
        .scale(C64::new(0.0, 1.0));
    let a_minus_1 = solve_i_minus_kcal(&zc, &rhs_a.re(), tol)?;
    let a_full = a_minus_1.shift(C64::new(1.0, 0.0));

    let lhs = d2.sub(
        &a_full
            .mul(&deriv(&fd.thetas[mid]))
            .scale(C64::new(0.0, 1.0)),
    );
    let rhs = cubic_rhs(&zeta_off, &dt_zeta);
    Ok(CubicReport {
        residual: lhs.sub(&rhs).norm_inf(),
        lhs_norm: lhs.norm_inf(),
        rhs_norm: rhs.norm_inf(),
    })
}

/// Step the conformal solver while transporting material labels `η` with
/// `dη/dt = B(η, t)`, and emit Lagrangian samples.
pub fn window_from_state(
    state0: &RiemannState,
    frac: f64,
    chord_arc_floor: f64,
    t_center: f64,
    dt_w: f64,
    samples: usize,
) -> Result<TrajectoryWindow> {
    assert!(samples >= 5 && samples % 2 == 1);
    let grid = state0.u.grid;
    let half = (samples / 2) as f64;
    let t_start = t_center - half * dt_w;
    assert!(t_start >= 0.0, "window starts before t = 0");

    // roll forward to the window start with steps of comparable size
    let mut state = state0.clone();
    if t_start > 0.0 {
        let pre_steps = (t_start / 0.02).ceil().max(1.0) as usize;
        let dt_pre = t_start / pre_steps as f64;
        for _ in 0..pre_steps {
            state = riemann::step_rk4(&state, dt_pre, frac, true)?;
        }
    }

    // labels seeded on the grid at the first sample
    let mut eta = grid.nodes();
    let mut window = TrajectoryWindow {
        dt: dt_w,
        samples: Vec::with_capacity(samples),
    };
    let emit = |state: &RiemannState, eta: &[f64], window: &mut TrajectoryWindow| -> Result<()> {
        let off = riemann::reconstruct_offset(state, chord_arc_floor)?;
        let off_at = trig_eval_many(&off, eta);
        let nodes = grid.nodes();
        let z_offset = GridFunction::new(
            grid,
            eta.iter()
                .zip(&nodes)
                .zip(&off_at)
                .map(|((&e, &a), &o)| Complex64::new(e - a, 0.0) + o)
                .collect(),
        );
        let zt = GridFunction::new(grid, trig_eval_many(&state.u, eta)).conj();
        let ztt = GridFunction::new(grid, trig_eval_many(&state.w, eta)).conj();
        window.samples.push(WindowSample {
            t: state.t,
            z_offset,
            zt,
            ztt,
        });
        Ok(())
    };
    emit(&state, &eta, &mut window)?;

    for _ in 1..samples {
        // RK4 on the extended system (u, w, zbar_mean, η)
        let (k1u, k1w, k1m, aux1) = riemann::rhs_with_aux(&state.u, &state.w, state.t, frac)?;
        let k1e = b_at(&aux1.b, &eta);
        let e2: Vec<f64> = eta
            .iter()
            .zip(&k1e)
            .map(|(&e, &d)| e + dt_w / 2.0 * d)
            .collect();
        let (k2u, k2w, k2m, aux2) = riemann::rhs_with_aux(
            &state.u.add_scaled(&k1u, dt_w / 2.0),
            &state.w.add_scaled(&k1w, dt_w / 2.0),
            state.t + dt_w / 2.0,
            frac,
        )?;
        let k2e = b_at(&aux2.b, &e2);
        let e3: Vec<f64> = eta
            .iter()
            .zip(&k2e)
            .map(|(&e, &d)| e + dt_w / 2.0 * d)
            .collect();
        let (k3u, k3w, k3m, aux3) = riemann::rhs_with_aux(
            &state.u.add_scaled(&k2u, dt_w / 2.0),
            &state.w.add_scaled(&k2w, dt_w / 2.0),
            state.t + dt_w / 2.0,
            frac,
        )?;
        let k3e = b_at(&aux3.b, &e3);
        let e4: Vec<f64> = eta.iter().zip(&k3e).map(|(&e, &d)| e + dt_w * d).collect();
        let (k4u, k4w, k4m, aux4) = riemann::rhs_with_aux(
            &state.u.add_scaled(&k3u, dt_w),
            &state.w.add_scaled(&k3w, dt_w),
            state.t + dt_w,
            frac,
        )?;
        let k4e = b_at(&aux4.b, &e4);

        let sixth = dt_w / 6.0;
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
        for j in 0..eta.len() {
            eta[j] += sixth * (k1e[j] + 2.0 * k2e[j] + 2.0 * k3e[j] + k4e[j]);
        }
        let (u2, w2) = riemann::project_constraints(&u, &w);
        u = u2;
        w = w2;
        state = RiemannState {
            t: state.t + dt_w,
            u,
            w,
            zbar_mean,
        };
        emit(&state, &eta, &mut window)?;
    }
    Ok(window)
}

fn b_at(b: &GridFunction, eta: &[f64]) -> Vec<f64> {
    trig_eval_many(b, eta).into_iter().map(|v| v.re).collect()
}

/// Two-mode initial data exposing the generic quadratic interactions.
///
/// A single standing mode has accidentally vanishing quadratic content in
/// `b` (the self-interaction lands on the mean and the `±2k` harmonics in a
/// cancelling combination), so the study seeds modes `k` and `k + 1`.
pub fn scaling_initial_state(n: usize, k_mode: i64, eps: f64) -> Result<RiemannState> {
    let grid = PeriodicGrid::new(n)?;
    let u0 = GridFunction::from_fn(grid, |a| {
        (C64::new(0.0, -k_mode as f64 * a).exp() + C64::new(0.0, -(k_mode + 1) as f64 * a).exp())
            * eps
    });
    riemann::init_state(&GridFunction::zeros(grid), &u0)
}

fn fit_slope(eps: &[f64], norms: &[f64]) -> f64 {
    // least squares slope of log(norm) against log(eps)
    let n = eps.len() as f64;
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|v| v.max(1e-300).ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}

/// Run the solver briefly at each amplitude, extract windows, measure the
/// quadratic/cubic norms and fit log-log slopes.
pub fn scaling_study(
    epsilons: &[f64],
    k_mode: i64,
    t_center: f64,
    n: usize,
    tol: f64,
    floor: f64,
) -> Result<ScalingReport> {
    assert!(
        epsilons.len() >= 3 && epsilons.windows(2).all(|w| w[0] > w[1]),
        "need >= 3 strictly decreasing amplitudes"
    );
    let mut report = ScalingReport {
        epsilons: epsilons.to_vec(),
        norms_b: Vec::new(),
        norms_a_minus_1: Vec::new(),
        norms_rhs_cubic: Vec::new(),
        norms_residual: Vec::new(),
        slopes: [0.0; 4],
    };
    for &eps in epsilons {
        // dt² <= ε³ keeps the finite-difference error under the cubic scale
        let dt_w = 0.9 * eps.powf(1.5);
        let state0 = scaling_initial_state(n, k_mode, eps)?;
        let window = window_from_state(&state0, 2.0 / 3.0, floor, t_center, dt_w, 5)?;
        let quad = quadratic_fields(&window, tol, floor)?;
        let cubic = cubic_residual(&window, tol, floor)?;
        report.norms_b.push(quad.fields.b.norm_inf());
        report
            .norms_a_minus_1
            .push(quad.fields.a_minus_1.norm_inf());
        report.norms_rhs_cubic.push(cubic.rhs_norm);
        report.norms_residual.push(cubic.residual);
    }
    report.slopes = [
        fit_slope(epsilons, &report.norms_b),
        fit_slope(epsilons, &report.norms_a_minus_1),
        fit_slope(epsilons, &report.norms_rhs_cubic),
        fit_slope(epsilons, &report.norms_residual),
    ];
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CHORD_ARC_FLOOR;
    use crate::interp::hausdorff_periodic;

    fn graph_curve(n: usize, eps: f64) -> CurveParam {
        let g = PeriodicGrid::new(n).unwrap();
        let p = GridFunction::from_fn(g, |a| C64::new(0.0, eps * a.cos()));
        CurveParam::new(&p, CHORD_ARC_FLOOR).unwrap()
    }

    #[test]
    fn flat_curve_gives_identity_map() {
        let g = PeriodicGrid::new(64).unwrap();
        let c = CurveParam::flat(g);
        let k = coordinate_map(&c, 1e-11).unwrap();
        assert!(k.norm_inf() < 1e-12);
        let (pi, theta, constraint) = pi_theta(&c, 1e-11, CHORD_ARC_FLOOR).unwrap();
        assert!(pi.norm_inf() < 1e-12);
        assert!(theta.norm_inf() < 1e-12);
        assert!(constraint < 1e-12);
    }

    #[test]
    fn horizontal_perturbation_gives_identity_map() {
        // purely horizontal z = α + δ cos α keeps z - z̄ = 0
        let g = PeriodicGrid::new(64).unwrap();
        let p = GridFunction::from_fn(g, |a| C64::new(0.05 * a.cos(), 0.0));
        let c = CurveParam::new(&p, CHORD_ARC_FLOOR).unwrap();
        let k = coordinate_map(&c, 1e-11).unwrap();
        // k = z̄ = α + δcos α, mean-zeroed: k - α = δ cos α
        let expect = GridFunction::from_fn(g, |a| C64::new(0.05 * a.cos(), 0.0));
        assert!(k.sub(&expect).norm_inf() < 1e-10);
    }

    #[test]
    fn small_graph_map_real_and_first_order() {
        let eps = 0.01;
        let c = graph_curve(128, eps);
        let k = coordinate_map(&c, 1e-11).unwrap();
        // leading order k - α = ε sin α; O(ε²) remainder
        let g = k.grid;
        let expect = GridFunction::from_fn(g, |a| C64::new(eps * a.sin(), 0.0));
        let dev = k.sub(&expect).norm_inf();
        assert!(dev < 5.0 * eps * eps, "k deviation {dev:.3e}");
        // ε-halving: the remainder shrinks superlinearly (no exponent is
        // claimed for k - α itself; only its smallness is recorded)
        let c2 = graph_curve(128, eps / 2.0);
        let k2 = coordinate_map(&c2, 1e-11).unwrap();
        let expect2 = GridFunction::from_fn(g, |a| C64::new(eps / 2.0 * a.sin(), 0.0));
        let dev2 = k2.sub(&expect2).norm_inf();
        let rate = dev / dev2;
        assert!(rate > 3.5 && rate < 9.5, "remainder rate {rate:.2}");
    }

    #[test]
    fn theta_constraint_small_on_graph() {
        let c = graph_curve(256, 0.01);
        let (_, _, constraint) = pi_theta(&c, 1e-11, CHORD_ARC_FLOOR).unwrap();
        assert!(constraint <= 1e-6, "theta constraint {constraint:.3e}");
    }

    #[test]
    fn theta_two_routes_agree() {
        // Π ∘ k^{-1} equals (I - ℋ)(ζ - ζ̄) computed on the frame curve
        let c = graph_curve(128, 0.02);
        let k = coordinate_map(&c, 1e-11).unwrap();
        let kinv = invert_map(&k).unwrap();
        let pi = pi_field(&c).unwrap();
        let theta = compose(&pi, &kinv);
        let (zc, zeta_off) = zeta_curve(&c.offset(), &kinv, CHORD_ARC_FLOOR).unwrap();
        let d = zeta_off.sub(&zeta_off.conj());
        let theta2 = d.sub(&curve_hilbert(&zc, &d).unwrap());
        assert!(theta.sub(&theta2).norm_inf() < 1e-8);
    }

    #[test]
    fn pi_is_a_function_of_the_curve_alone() {
        // two parametrizations of one curve: compare (z, Π(z)) point sets
        let g = PeriodicGrid::new(128).unwrap();
        let eps = 0.02;
        let p1 = GridFunction::from_fn(g, |a| C64::new(0.0, eps * a.cos()));
        let c1 = CurveParam::new(&p1, CHORD_ARC_FLOOR).unwrap();
        // reparametrize: α = φ(β) = β + 0.1 sin β
        let phi = |b: f64| b + 0.1 * b.sin();
        let p2 = GridFunction::from_fn(g, |b| C64::new(phi(b) - b, eps * phi(b).cos()));
        let c2 = CurveParam::new(&p2, CHORD_ARC_FLOOR).unwrap();
        let pi1 = pi_field(&c1).unwrap();
        let pi2 = pi_field(&c2).unwrap();
        // evaluate Π₁ at the pulled-back parameters and compare fields
        let nodes = g.nodes();
        let pulled: Vec<f64> = nodes.iter().map(|&b| phi(b)).collect();
        let pi1_at = trig_eval_many(&pi1, &pulled);
        let mut sup = 0.0f64;
        for (a, b) in pi1_at.iter().zip(&pi2.values) {
            sup = sup.max((a - b).norm());
        }
        assert!(sup < 1e-8, "reparametrization deviation {sup:.3e}");
    }

    #[test]
    fn invert_map_round_trip() {
        let c = graph_curve(64, 0.05);
        let k = coordinate_map(&c, 1e-11).unwrap();
        let kinv = invert_map(&k).unwrap();
        let nodes = k.grid.nodes();
        for (&x, &a) in kinv.iter().zip(&nodes) {
            let kx = x + trig_eval_many(&k, &[x])[0].re;
            assert!((kx - a).abs() < 1e-11);
        }
    }

    #[test]
    fn rest_window_all_identities_vanish() {
        let state0 = riemann::init_from_config(&riemann::SolverConfig {
            n: 64,
            init: riemann::InitKind::Rest,
            ..Default::default()
        })
        .unwrap();
        let window = window_from_state(&state0, 2.0 / 3.0, CHORD_ARC_FLOOR, 0.1, 0.01, 5).unwrap();
        let quad = quadratic_fields(&window, 1e-10, CHORD_ARC_FLOOR).unwrap();
        assert!(quad.fields.k_offset.norm_inf() < 1e-12);
        assert!(quad.fields.theta.norm_inf() < 1e-12);
        assert!(quad.b_residual < 1e-11);
        assert!(quad.a_residual < 1e-11);
        let cubic = cubic_residual(&window, 1e-10, CHORD_ARC_FLOOR).unwrap();
        assert!(cubic.residual < 1e-10, "rest cubic {:.3e}", cubic.residual);
    }

    #[test]
    fn quadratic_identities_on_solver_window() {
        // residuals are bounded by the finite-difference error of the frame
        // drift and fall ~4x when the window spacing halves
        let state0 = scaling_initial_state(128, 1, 0.01).unwrap();
        let measure = |dtw: f64| {
            let window =
                window_from_state(&state0, 2.0 / 3.0, CHORD_ARC_FLOOR, 1.0, dtw, 5).unwrap();
            quadratic_fields(&window, 1e-10, CHORD_ARC_FLOOR).unwrap()
        };
        let q1 = measure(0.02);
        let q2 = measure(0.01);
        assert!(
            q1.b_residual <= (1e-6f64).max(10.0 * 0.02 * 0.02),
            "b residual {:.3e}",
            q1.b_residual
        );
        assert!(q1.a_residual <= 1e-6, "A-1 residual {:.3e}", q1.a_residual);
        assert!(
            q1.b_gauge_spread <= 1e-6,
            "formula b deviates from frame drift beyond a constant: {:.3e}",
            q1.b_gauge_spread
        );
        let rate = q1.b_residual / q2.b_residual.max(1e-300);
        assert!(
            rate > 3.0 && rate < 5.5,
            "k_t-side Richardson rate {rate:.2} ({:.3e} -> {:.3e})",
            q1.b_residual,
            q2.b_residual
        );
    }

    #[test]
    fn hausdorff_helper_available_for_reports() {
        // zeta curve construction preserves the point set of the interface
        // (the floor is the polyline sagitta of the oversampled comparison)
        let c = graph_curve(64, 0.03);
        let k = coordinate_map(&c, 1e-11).unwrap();
        let kinv = invert_map(&k).unwrap();
        let (_, zeta_off) = zeta_curve(&c.offset(), &kinv, CHORD_ARC_FLOOR).unwrap();
        let d = hausdorff_periodic(&c.offset(), &zeta_off, 16);
        assert!(d < 5e-7, "reparametrized curve moved by {d:.3e}");
    }
}
