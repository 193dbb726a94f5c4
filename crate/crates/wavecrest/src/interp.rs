//! Trigonometric interpolation and curve geometry helpers.
//!
//! Periodic fields are evaluated off-grid through their Fourier series (the
//! Nyquist mode is folded symmetrically so real fields stay real), and
//! periodic interfaces are compared through an oversampled polyline
//! Hausdorff distance with period wrapping.

use num_complex::Complex64;

use crate::spectral::{dft, GridFunction, Spectrum, C64};

/// Evaluate the trigonometric interpolant of `f` at arbitrary points.
pub fn trig_eval_many(f: &GridFunction, points: &[f64]) -> Vec<C64> {
    let s = dft(f).expect("finite field");
    trig_eval_spectrum(&s, points)
}

/// Same, starting from a spectrum.
pub fn trig_eval_spectrum(s: &Spectrum, points: &[f64]) -> Vec<C64> {
    let n = s.grid.len() as i64;
    points
        .iter()
        .map(|&x| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &c) in s.coeffs.iter().enumerate() {
                let k = if (j as i64) < n / 2 {
                    j as i64
                } else {
                    j as i64 - n
                };
                if k == -n / 2 {
                    // fold the unpaired Nyquist mode into a cosine
                    acc += c * C64::new((k as f64 * x).cos(), 0.0);
                } else {
                    acc += c * C64::new(0.0, k as f64 * x).exp();
                }
            }
            acc
        })
        .collect()
}

/// Zero-padded resampling of a periodic field onto `m >= n` points.
pub fn resample(f: &GridFunction, m: usize) -> Vec<C64> {
    let s = dft(f).expect("finite field");
    let n = f.grid.len();
    assert!(m >= n && m % 2 == 0);
    let mut coeffs = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    coeffs[..half].copy_from_slice(&s.coeffs[..half]);
    coeffs[m - half..].copy_from_slice(&s.coeffs[half..]);
    let big = Spectrum {
        grid: crate::spectral::PeriodicGrid::new(m).expect("even m"),
        coeffs,
    };
    crate::spectral::idft(&big).values
}

/// Dense point sampling of a periodic interface given its offset `z - α`.
pub fn sample_curve(offset: &GridFunction, m: usize) -> Vec<C64> {
    let vals = resample(offset, m);
    let h = std::f64::consts::TAU / m as f64;
    vals.into_iter()
        .enumerate()
        .map(|(j, v)| v + C64::new(h * j as f64, 0.0))
        .collect()
}

fn point_to_polyline(p: C64, q: &[C64]) -> f64 {
    // nearest vertex, then refine against its two adjacent segments
    let mut jmin = 0;
    let mut dmin = f64::INFINITY;
    for (j, &qj) in q.iter().enumerate() {
        let d = (p - qj).norm();
        if d < dmin {
            dmin = d;
            jmin = j;
        }
    }
    let mut best = dmin;
    for j in [jmin.saturating_sub(1), jmin.min(q.len().saturating_sub(2))] {
        if j + 1 >= q.len() {
            continue;
        }
        let a = q[j];
        let b = q[j + 1];
        let ab = b - a;
        let denom = ab.norm_sqr();
        if denom == 0.0 {
            continue;
        }
        let t = ((ab.conj() * (p - a)).re / denom).clamp(0.0, 1.0);
        best = best.min((a + ab * t - p).norm());
    }
    best
}

/// Hausdorff distance between two periodic interfaces given their offsets,
/// measured on `oversample`-times refined polylines with period wrapping.
pub fn hausdorff_periodic(a: &GridFunction, b: &GridFunction, oversample: usize) -> f64 {
    let m = a.grid.len().max(b.grid.len()) * oversample;
    let pa = sample_curve(a, m);
    let pb = sample_curve(b, m);
    let tau = std::f64::consts::TAU;
    let extend = |p: &[C64]| -> Vec<C64> {
        let mut out = Vec::with_capacity(3 * p.len());
        out.extend(p.iter().map(|&v| v - Complex64::new(tau, 0.0)));
        out.extend_from_slice(p);
        out.extend(p.iter().map(|&v| v + Complex64::new(tau, 0.0)));
        out
    };
    let pa_ext = extend(&pa);
    let pb_ext = extend(&pb);
    let d_ab = pa
        .iter()
        .map(|&p| point_to_polyline(p, &pb_ext))
        .fold(0.0, f64::max);
    let d_ba = pb
        .iter()
        .map(|&p| point_to_polyline(p, &pa_ext))
        .fold(0.0, f64::max);
    d_ab.max(d_ba)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;

    #[test]
    fn trig_eval_reproduces_nodes_and_shifts() {
        let g = PeriodicGrid::new(32).unwrap();
        let f = GridFunction::from_fn(g, |a| C64::new((2.0 * a).cos(), a.sin()));
        let nodes = g.nodes();
        let at_nodes = trig_eval_many(&f, &nodes);
        for (a, b) in at_nodes.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-13);
        }
        let x = 1.2345;
        let v = trig_eval_many(&f, &[x])[0];
        assert!((v - C64::new((2.0 * x).cos(), x.sin())).norm() < 1e-13);
    }

    #[test]
    fn hausdorff_same_curve_two_parametrizations() {
        let g = PeriodicGrid::new(64).unwrap();
        // same geometric curve sampled with a sliding shift: offset field of
        // the shifted parametrization is p(α+s) + s... realized by comparing
        // z(α) = α + p(α) against z2(α) = α + (p(α + s) + s) which traces the
        // identical point set.
        let p = |a: f64| C64::new(0.03 * (a).sin(), 0.05 * a.cos());
        let s = 0.37;
        let c1 = GridFunction::from_fn(g, p);
        let c2 = GridFunction::from_fn(g, |a| p(a + s) + C64::new(s, 0.0));
        let d = hausdorff_periodic(&c1, &c2, 16);
        assert!(d < 2e-7, "same curve distance {d:.3e}");
    }

    #[test]
    fn hausdorff_detects_vertical_shift() {
        let g = PeriodicGrid::new(64).unwrap();
        let c1 = GridFunction::from_fn(g, |a| C64::new(0.0, 0.02 * a.cos()));
        let c2 = GridFunction::from_fn(g, |a| C64::new(0.0, 0.02 * a.cos() + 1e-4));
        let d = hausdorff_periodic(&c1, &c2, 8);
        assert!((d - 1e-4).abs() < 1e-6, "shift distance {d:.3e}");
    }
}
