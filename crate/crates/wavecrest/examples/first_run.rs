//! A first solver run: a small standing wave, stepped for one linear
//! period, with the health indicators printed along the way.

use wavecrest::riemann::{run, DtPolicy, InitKind, SolverConfig};

fn main() {
    let k = 2i64;
    let period = std::f64::consts::TAU / (k as f64).sqrt();
    let cfg = SolverConfig {
        n: 128,
        t_end: period,
        dt: DtPolicy::Fixed(0.02),
        output_cadence: 40,
        init: InitKind::SingleMode {
            k,
            eps: 0.01,
            phase: 0.0,
        },
        ..Default::default()
    };
    let out = run(&cfg);
    assert!(out.failure.is_none(), "run failed: {:?}", out.failure);

    println!("   t        energy      min A1          Taylor    holo resid");
    for r in &out.records {
        println!(
            "{:6.3}  {:.6e}  {:.12}  {:8.5}  {:.3e}",
            r.t, r.energy, r.a1_min, r.taylor_min, r.holo_residual
        );
    }
    let final_state = out.final_state.unwrap();
    println!(
        "final interface mean offset: {:.3e}",
        final_state.zbar_mean.norm()
    );
}
