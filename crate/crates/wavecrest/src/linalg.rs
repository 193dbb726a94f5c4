//! Small dense-free linear algebra: a restarted GMRES for the second-kind
//! integral equations `(I ± K) x = y`.
//!
//! The operators are compact perturbations of the identity on smooth
//! chord-arc curves, so Krylov iterations converge in a handful of steps;
//! the restart length is generous relative to that.

use crate::error::{Result, WaveError};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = y` with restarted GMRES(m).
///
/// `apply` computes `A v`. Convergence is declared when the residual drops
/// below `tol * ||y||`; `max_iters` caps the total iteration count across
/// restarts.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    y: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let n = y.len();
    let restart = 40.min(max_iters.max(1));
    let ynorm = norm(y);
    if ynorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = tol * ynorm;

    let mut x = vec![0.0; n];
    let mut total = 0usize;

    while total < max_iters {
        // r = y - A x
        let ax = apply(&x);
        let mut r: Vec<f64> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let beta = norm(&r);
        let mut last_resid = beta;
        if beta <= target {
            return Ok(x);
        }
        for v in &mut r {
            *v /= beta;
        }

        let mut basis: Vec<Vec<f64>> = vec![r];
        let mut h = vec![vec![0.0f64; restart]; restart + 1]; // h[i][j]
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = beta;

        let mut cols = 0usize;
        for j in 0..restart {
            if total >= max_iters {
                break;
            }
            total += 1;
            let mut w = apply(&basis[j]);
            // modified Gram-Schmidt
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                h[i][j] = hij;
                for (wv, bv) in w.iter_mut().zip(&basis[i]) {
                    *wv -= hij * bv;
                }
            }
            let hnext = norm(&w);
            h[j + 1][j] = hnext;
            // apply accumulated rotations to the new column
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + hnext * hnext).sqrt();
            if denom == 0.0 {
                cols = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = hnext / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            cols = j + 1;
            last_resid = g[j + 1].abs();

            if hnext > 0.0 && last_resid > target {
                for v in &mut w {
                    *v /= hnext;
                }
                basis.push(w);
            }
            if last_resid <= target || hnext == 0.0 {
                break;
            }
        }

        // back substitution on the cols x cols triangular system
        let mut yv = vec![0.0f64; cols];
        for i in (0..cols).rev() {
            let mut s = g[i];
            for j2 in i + 1..cols {
                s -= h[i][j2] * yv[j2];
            }
            yv[i] = s / h[i][i];
        }
        for (i, yi) in yv.iter().enumerate() {
            for (xv, bv) in x.iter_mut().zip(&basis[i]) {
                *xv += yi * bv;
            }
        }

        if last_resid <= target {
            return Ok(x);
        }
    }

    // final residual check (the loop may exit on the iteration cap)
    let ax = apply(&x);
    let resid = norm(&y.iter().zip(&ax).map(|(a, b)| a - b).collect::<Vec<f64>>());
    if resid <= target {
        Ok(x)
    } else {
        Err(WaveError::SolverConvergence {
            residual: resid / ynorm,
            iters: max_iters,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_identity_plus_small_matrix() {
        // A = I + 0.3 * S with S a fixed "smoothing" matrix
        let n = 24;
        let s = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut acc = 0.0;
                    for (j, vj) in v.iter().enumerate() {
                        let d = (i as f64 - j as f64).abs();
                        acc += vj * (-d * d / 8.0).exp();
                    }
                    acc / n as f64
                })
                .collect()
        };
        let apply = |v: &[f64]| -> Vec<f64> {
            let sv = s(v);
            v.iter().zip(&sv).map(|(a, b)| a + 0.3 * b).collect()
        };
        let xtrue: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let y = apply(&xtrue);
        let x = gmres(apply, &y, 1e-12, 200).unwrap();
        let err = x
            .iter()
            .zip(&xtrue)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err:.3e}");
    }

    #[test]
    fn reports_non_convergence() {
        // a rotation-like stiff operator needs a large Krylov space; a tiny
        // iteration budget must fail loudly
        let n = 50;
        let apply = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for i in 0..n {
                out[i] = v[(i + 7) % n] * 2.0 - v[i] * 0.5;
            }
            out
        };
        let y: Vec<f64> = (0..n).map(|i| (0.9 * i as f64).sin() + 0.1).collect();
        match gmres(apply, &y, 1e-14, 3) {
            Err(WaveError::SolverConvergence { .. }) => {}
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}
