//! The spectral toolbox in isolation: transforms, the Hilbert multiplier,
//! projections and the half derivative.

use num_complex::Complex64 as C64;
use wavecrest::spectral::{
    antideriv, deriv, half_deriv, hilbert, holo_project, GridFunction, PeriodicGrid,
};

fn main() {
    let grid = PeriodicGrid::new(64).unwrap();

    // a single lower-side mode is a fixed point of H and of the projection
    let mode = GridFunction::from_fn(grid, |a| (C64::new(0.0, -a)).exp());
    println!(
        "|| H e^{{-ia}} - e^{{-ia}} ||_inf = {:.3e}",
        hilbert(&mode).sub(&mode).norm_inf()
    );
    println!(
        "|| P e^{{-ia}} - e^{{-ia}} ||_inf = {:.3e}",
        holo_project(&mode).sub(&mode).norm_inf()
    );

    // cos(2a): the projection keeps its lower half, the half derivative
    // scales it by sqrt(2)
    let cosine = GridFunction::from_fn(grid, |a| C64::new((2.0 * a).cos(), 0.0));
    let proj = holo_project(&cosine);
    println!("projection of cos(2a) has sup norm {:.6}", proj.norm_inf());
    let hd = half_deriv(&cosine);
    println!(
        "half derivative of cos(2a) has sup norm {:.6} (= sqrt 2)",
        hd.norm_inf()
    );

    // the antiderivative inverts the derivative on mean-zero fields
    let f = GridFunction::from_fn(grid, |a| C64::new(a.sin(), (3.0 * a).cos()));
    let round = deriv(&antideriv(&f).unwrap());
    println!(
        "|| d/da (antideriv f) - f ||_inf = {:.3e}",
        round.sub(&f).norm_inf()
    );
}
