//! Periodic Fourier infrastructure on the 2π-periodic line.
//!
//! Everything downstream builds on four conventions fixed here once:
//!
//! * fields are sampled on the uniform grid `α_j = 2πj/n`, `n` even;
//! * a field expands as `f(α) = Σ_k c_k e^{ikα}` with integer wavenumbers
//!   `k ∈ {-n/2, …, n/2 - 1}`;
//! * the flat Hilbert transform `H` acts as the multiplier `-sgn(k)` with
//!   `H 1 = 0`, so traces of functions holomorphic in the fluid (below the
//!   surface) are exactly the fields with spectrum in `k < 0`;
//! * the half-plane projection is `½(I + H)`.
//!
//! The kernel realisation of `H` is `(1/2πi)·cot((α-β)/2)`; the curve
//! operators in [`crate::curve`] reduce to it on the flat interface.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Result, WaveError};

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Uniform discretization of the 2π-periodic line.
///
/// `n` must be even and at least 16; nodes are `α_j = 2πj/n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(WaveError::Config(format!(
                "grid size n must be even and >= 16, got n = {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `2π/n`.
    pub fn step(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    /// Node positions `α_j = 2πj/n`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.step() * j as f64).collect()
    }

    /// Signed integer wavenumber for storage index `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }
}

/// Complex samples of a field on a [`PeriodicGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: PeriodicGrid,
    pub values: Vec<C64>,
}

/// Fourier coefficients `c_k`, stored in FFT order (`k = 0..n/2-1, -n/2..-1`).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: PeriodicGrid,
    pub coeffs: Vec<C64>,
}

fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, values: Vec<C64>) -> Self {
        assert_eq!(grid.len(), values.len(), "sample count must match grid");
        Self { grid, values }
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::new(grid, vec![C64::new(0.0, 0.0); grid.len()])
    }

    pub fn constant(grid: PeriodicGrid, c: C64) -> Self {
        Self::new(grid, vec![c; grid.len()])
    }

    /// Sample a closure at the grid nodes.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> C64) -> Self {
        let h = grid.step();
        Self::new(grid, (0..grid.len()).map(|j| f(h * j as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(WaveError::InvalidField(what))
        }
    }

    /// Discrete mean `(1/n) Σ f_j`, equal to the `k = 0` coefficient.
    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / self.len() as f64
    }

    /// `L²` norm with the `dα` measure: `(∫ |f|² dα)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.step()).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn re(&self) -> Self {
        self.map(|v| C64::new(v.re, 0.0))
    }

    pub fn im(&self) -> Self {
        self.map(|v| C64::new(v.im, 0.0))
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.grid, other.grid);
        let v = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        self.zip(other, |a, b| a + c * b)
    }

    pub fn shift(&self, c: C64) -> Self {
        self.map(|v| v + c)
    }
}

/// Forward transform: `c_k = (1/n) Σ_j f_j e^{-ikα_j}`.
pub fn dft(f: &GridFunction) -> Result<Spectrum> {
    f.ensure_finite("dft input")?;
    let n = f.len();
    let (fwd, _) = fft_pair(n);
    let mut buf = f.values.clone();
    fwd.process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in &mut buf {
        *v *= scale;
    }
    Ok(Spectrum {
        grid: f.grid,
        coeffs: buf,
    })
}

/// Inverse transform: `f_j = Σ_k c_k e^{ikα_j}`.
pub fn idft(s: &Spectrum) -> GridFunction {
    let (_, inv) = fft_pair(s.grid.len());
    let mut buf = s.coeffs.clone();
    inv.process(&mut buf);
    GridFunction::new(s.grid, buf)
}

impl Spectrum {
    /// Apply a real multiplier `m(k)` to every coefficient.
    pub fn apply_multiplier(&self, m: impl Fn(i64) -> C64) -> Self {
        let n = self.grid.len();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let k = if j < n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
                m(k) * c
            })
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let n = self.grid.len() as i64;
        debug_assert!(k >= -n / 2 && k < n / 2);
        let j = if k >= 0 { k } else { k + n } as usize;
        self.coeffs[j]
    }
}

fn multiplier_op(f: &GridFunction, m: impl Fn(i64) -> C64) -> GridFunction {
    let s = dft(f).expect("finite input expected");
    idft(&s.apply_multiplier(m))
}

/// Flat Hilbert transform `H`: multiplier `-sgn(k)`, `H 1 = 0`.
pub fn hilbert(f: &GridFunction) -> GridFunction {
    multiplier_op(f, |k| C64::new(-(k.signum() as f64), 0.0))
}

/// Holomorphic-side projection `½(I + H)`: keeps `k < 0` and half the mean.
pub fn holo_project(f: &GridFunction) -> GridFunction {
    multiplier_op(f, |k| match k.cmp(&0) {
        std::cmp::Ordering::Less => C64::new(1.0, 0.0),
        std::cmp::Ordering::Equal => C64::new(0.5, 0.0),
        std::cmp::Ordering::Greater => C64::new(0.0, 0.0),
    })
}

/// Strict restriction to the holomorphic side: keeps only `k < 0` modes.
///
/// This is the projection enforced on constrained fields: `H u = u`
/// together with the zero-mean convention is exactly spectrum in `k < 0`.
pub fn project_lower(f: &GridFunction) -> GridFunction {
    multiplier_op(f, |k| {
        if k < 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Spectral derivative `∂_α` (multiplier `ik`).
pub fn deriv(f: &GridFunction) -> GridFunction {
    multiplier_op(f, |k| C64::new(0.0, k as f64))
}

/// Half derivative `|D|^{1/2}` (multiplier `|k|^{1/2}`).
pub fn half_deriv(f: &GridFunction) -> GridFunction {
    multiplier_op(f, |k| C64::new((k.abs() as f64).sqrt(), 0.0))
}

/// Antiderivative on mean-zero fields; inverts [`deriv`] and returns a
/// mean-zero result.
pub fn antideriv(f: &GridFunction) -> Result<GridFunction> {
    let s = dft(f)?;
    let c0 = s.coeffs[0].norm();
    let tol = 1e-12 * f.norm_l2().max(f64::MIN_POSITIVE);
    if c0 > tol {
        return Err(WaveError::MeanNotZero { c0 });
    }
    Ok(idft(&s.apply_multiplier(|k| {
        if k == 0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, -1.0 / k as f64)
        }
    })))
}

/// Zero all modes with `|k| > fraction·n/2`. The 2/3 default suits the
/// quadratic products in the evolution equations.
pub fn dealias(f: &GridFunction, fraction: f64) -> GridFunction {
    let cutoff = fraction * f.len() as f64 / 2.0;
    multiplier_op(f, |k| {
        if (k.abs() as f64) > cutoff {
            C64::new(0.0, 0.0)
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// `Σ |c_k|²` over the spectrum (Parseval partner of `‖f‖²/2π`).
pub fn spectral_energy(s: &Spectrum) -> f64 {
    s.coeffs.iter().map(|c| c.norm_sqr()).sum()
}

/// Flat commutator `[f, H] g = f·H(g) - H(f·g)` evaluated spectrally.
pub fn commutator_flat(f: &GridFunction, g: &GridFunction) -> GridFunction {
    f.mul(&hilbert(g)).sub(&hilbert(&f.mul(g)))
}

/// Random band-limited mean-zero field, reproducible from the seed.
///
/// Modes `0 < |k| <= kmax` get complex coefficients uniform in the unit
/// square, scaled by `scale`.
pub fn random_band_limited(
    grid: PeriodicGrid,
    kmax: i64,
    scale: f64,
    rng: &mut impl rand::Rng,
) -> GridFunction {
    let n = grid.len();
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (j, c) in coeffs.iter_mut().enumerate() {
        let k = grid.wavenumber(j);
        if k != 0 && k.abs() <= kmax {
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            *c = C64::new(re, im) * scale;
        }
    }
    idft(&Spectrum { grid, coeffs })
}
