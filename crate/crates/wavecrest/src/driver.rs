//! Batch driver: config files, deterministic CSV output, run manifests and
//! the command implementations behind the `wavecrest` binary.
//!
//! The config format is a flat `key = value` text file with `#` comments.
//! Recognized keys:
//!
//! ```text
//! n, dt | dt_auto, t_end, dealias, projection_cadence, energy_order,
//! init.kind (rest|single_mode|graph), init.k, init.eps, init.phase,
//! output_dir, output_cadence, seed, solver_tol, chord_arc_floor
//! ```
//!
//! All floating-point output is printed with 17 significant digits so files
//! round-trip exactly; reruns with the same config and seed are
//! byte-identical (manifests carry wall-clock fields and are excluded).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::c1c2::{c1_op, KernelArg, KernelSpec};
use crate::curve::{
    curve_hilbert, identity_battery, solve_i_plus_kstar, CurveParam, CHORD_ARC_FLOOR,
};
use crate::error::{Result, WaveError};
use crate::lagrangian::{self, cross_validate};
use crate::normalform::scaling_study;
use crate::riemann::{self, DtPolicy, InitKind, SolverConfig};
use crate::spectral::{dft, hilbert, random_band_limited, GridFunction, PeriodicGrid, C64};

/// Parsed run configuration: solver settings plus output location.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, detail: impl std::fmt::Display) -> WaveError {
    WaveError::Config(format!("key `{key}`: {detail}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| bad(key, format!("expected a number, got `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| bad(key, format!("expected a non-negative integer, got `{v}`")))
}

/// Parse the flat `key = value` config format.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut init_kind: Option<String> = None;
    let mut init_k: i64 = 1;
    let mut init_eps: f64 = 0.01;
    let mut init_phase: f64 = 0.0;
    let mut dt_fixed: Option<f64> = None;
    let mut dt_auto = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            WaveError::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "n" => {
                let n = parse_usize(key, value)?;
                if n < 16 || n % 2 != 0 {
                    return Err(bad("n", format!("must be even and >= 16, got {n}")));
                }
                cfg.solver.n = n;
            }
            "dt" => dt_fixed = Some(parse_f64(key, value)?),
            "dt_auto" => {
                dt_auto = match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(bad(key, format!("expected true/false, got `{other}`"))),
                }
            }
            "t_end" => {
                let t = parse_f64(key, value)?;
                if t < 0.0 {
                    return Err(bad(key, "must be >= 0"));
                }
                cfg.solver.t_end = t;
            }
            "dealias" => cfg.solver.dealias_fraction = parse_f64(key, value)?,
            "projection_cadence" => cfg.solver.projection_cadence = parse_usize(key, value)?,
            "energy_order" => cfg.solver.energy_order = parse_usize(key, value)?,
            "output_cadence" => cfg.solver.output_cadence = parse_usize(key, value)?.max(1),
            "solver_tol" => cfg.solver.solver_tol = parse_f64(key, value)?,
            "chord_arc_floor" => cfg.solver.chord_arc_floor = parse_f64(key, value)?,
            "seed" => cfg.solver.seed = parse_usize(key, value)? as u64,
            "init.kind" => init_kind = Some(value.to_string()),
            "init.k" => {
                init_k = value
                    .parse::<i64>()
                    .map_err(|_| bad(key, format!("expected an integer, got `{value}`")))?
            }
            "init.eps" => init_eps = parse_f64(key, value)?,
            "init.phase" => init_phase = parse_f64(key, value)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            other => {
                return Err(WaveError::Config(format!("unknown key `{other}`")));
            }
        }
    }

    cfg.solver.dt = match (dt_fixed, dt_auto) {
        (Some(dt), false) => {
            if dt <= 0.0 {
                return Err(bad("dt", "must be > 0"));
            }
            DtPolicy::Fixed(dt)
        }
        (None, _) => DtPolicy::Cfl(0.5),
        (Some(_), true) => {
            return Err(bad("dt", "give either dt or dt_auto = true, not both"));
        }
    };

    cfg.solver.init = match init_kind.as_deref() {
        None | Some("rest") => InitKind::Rest,
        Some("single_mode") => InitKind::SingleMode {
            k: init_k,
            eps: init_eps,
            phase: init_phase,
        },
        Some("graph") => InitKind::Graph {
            k: init_k,
            eps: init_eps,
            phase: init_phase,
        },
        Some(other) => {
            return Err(bad(
                "init.kind",
                format!("expected rest|single_mode|graph, got `{other}`"),
            ));
        }
    };
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| WaveError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// 17-significant-digit float formatting used in every CSV.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Echo of the effective solver config, used in manifests.
fn config_echo(cfg: &RunConfig) -> String {
    let s = &cfg.solver;
    let mut out = String::new();
    let _ = writeln!(out, "config.n = {}", s.n);
    match s.dt {
        DtPolicy::Fixed(dt) => {
            let _ = writeln!(out, "config.dt = {}", fmt_f64(dt));
        }
        DtPolicy::Cfl(c) => {
            let _ = writeln!(out, "config.dt_auto = true");
            let _ = writeln!(out, "config.cfl = {}", fmt_f64(c));
        }
    }
    let _ = writeln!(out, "config.t_end = {}", fmt_f64(s.t_end));
    let _ = writeln!(out, "config.dealias = {}", fmt_f64(s.dealias_fraction));
    let _ = writeln!(out, "config.projection_cadence = {}", s.projection_cadence);
    let _ = writeln!(out, "config.energy_order = {}", s.energy_order);
    let _ = writeln!(out, "config.output_cadence = {}", s.output_cadence);
    let _ = writeln!(out, "config.solver_tol = {}", fmt_f64(s.solver_tol));
    let _ = writeln!(
        out,
        "config.chord_arc_floor = {}",
        fmt_f64(s.chord_arc_floor)
    );
    let _ = writeln!(out, "config.seed = {}", s.seed);
    match s.init {
        InitKind::Rest => {
            let _ = writeln!(out, "config.init.kind = rest");
        }
        InitKind::SingleMode { k, eps, phase } => {
            let _ = writeln!(out, "config.init.kind = single_mode");
            let _ = writeln!(out, "config.init.k = {k}");
            let _ = writeln!(out, "config.init.eps = {}", fmt_f64(eps));
            let _ = writeln!(out, "config.init.phase = {}", fmt_f64(phase));
        }
        InitKind::Graph { k, eps, phase } => {
            let _ = writeln!(out, "config.init.kind = graph");
            let _ = writeln!(out, "config.init.k = {k}");
            let _ = writeln!(out, "config.init.eps = {}", fmt_f64(eps));
            let _ = writeln!(out, "config.init.phase = {}", fmt_f64(phase));
        }
    }
    out
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Write the run manifest: config echo, version, wall times, termination
/// cause and a checksum inventory of produced files. Written atomically at
/// the end of every invocation, including failed ones.
pub fn write_manifest(
    dir: &Path,
    cfg: Option<&RunConfig>,
    start_ms: u128,
    termination: &str,
    exit_code: i32,
    files: &[PathBuf],
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "start_unix_ms = {start_ms}");
    let _ = writeln!(out, "end_unix_ms = {}", now_ms());
    let _ = writeln!(out, "termination = {termination}");
    let _ = writeln!(out, "exit_code = {exit_code}");
    if let Some(cfg) = cfg {
        out.push_str(&config_echo(cfg));
    }
    let mut sorted: Vec<&PathBuf> = files.iter().collect();
    sorted.sort();
    for f in sorted {
        let name = f
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match fs::read(f) {
            Ok(bytes) => {
                let mut hasher = Sha256::new();
                hasher.update(&bytes);
                let _ = writeln!(out, "file.{name} = sha256:{:x}", hasher.finalize());
            }
            Err(_) => {
                let _ = writeln!(out, "file.{name} = missing");
            }
        }
    }
    write_atomic(&dir.join("manifest.txt"), &out)
}

fn snapshot_csv(snap: &riemann::Snapshot) -> String {
    let nodes = snap.offset.grid.nodes();
    let mut out = String::from("alpha,ReZ,ImZ,Reu,Imu,Rew,Imw\n");
    for (j, &a) in nodes.iter().enumerate() {
        let z = Complex64::new(a, 0.0) + snap.offset.values[j];
        let u = snap.u.values[j];
        let w = snap.w.values[j];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(a),
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(u.re),
            fmt_f64(u.im),
            fmt_f64(w.re),
            fmt_f64(w.im)
        );
    }
    out
}

fn lagrangian_csv(state: &lagrangian::LagrangianState) -> String {
    let nodes = state.z_offset.grid.nodes();
    let mut out = String::from("alpha,Rez,Imz,Rezt,Imzt,Reztt,Imztt\n");
    for (j, &a) in nodes.iter().enumerate() {
        let z = Complex64::new(a, 0.0) + state.z_offset.values[j];
        let zt = state.zt.values[j];
        let ztt = state.ztt.values[j];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(a),
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(zt.re),
            fmt_f64(zt.im),
            fmt_f64(ztt.re),
            fmt_f64(ztt.im)
        );
    }
    out
}

fn diagnostics_csv(records: &[riemann::DiagnosticsRecord]) -> String {
    let mut out = String::from("t,energy,taylor_min,A1_min,chord_arc,holo_residual,mean_height\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.energy),
            fmt_f64(r.taylor_min),
            fmt_f64(r.a1_min),
            fmt_f64(r.chord_arc),
            fmt_f64(r.holo_residual),
            fmt_f64(r.mean_height)
        );
    }
    out
}

/// `run` subcommand: execute a solver run and write snapshots, diagnostics
/// and the manifest. Returns the process exit code.
///
/// A manifest is written for every invocation that has a determinable
/// output directory, including failed ones.
pub fn cmd_run(config_path: &Path, out_override: Option<&Path>) -> i32 {
    let start = now_ms();
    let cfg = match load_config(config_path) {
        Ok(mut c) => {
            if let Some(dir) = out_override {
                c.output_dir = dir.to_path_buf();
            }
            c
        }
        Err(e) => {
            eprintln!("{e}");
            if let Some(dir) = out_override {
                if fs::create_dir_all(dir).is_ok() {
                    let _ = write_manifest(
                        dir,
                        None,
                        start,
                        &format!("error: {e}"),
                        e.exit_code(),
                        &[],
                    );
                }
            }
            return e.exit_code();
        }
    };
    if let Err(e) = fs::create_dir_all(&cfg.output_dir) {
        eprintln!("cannot create output dir: {e}");
        return 1;
    }

    let out = riemann::run(&cfg.solver);
    let mut files = Vec::new();
    for snap in &out.snapshots {
        let path = cfg.output_dir.join(format!("snap_{:06}.csv", snap.index));
        if write_atomic(&path, &snapshot_csv(snap)).is_ok() {
            files.push(path);
        }
    }
    let diag_path = cfg.output_dir.join("diagnostics.csv");
    if write_atomic(&diag_path, &diagnostics_csv(&out.records)).is_ok() {
        files.push(diag_path);
    }

    let (termination, code) = match &out.failure {
        None => ("completed".to_string(), 0),
        Some(e) => (format!("error: {e}"), e.exit_code()),
    };
    if let Some(e) = &out.failure {
        eprintln!("{e}");
    }
    let _ = write_manifest(
        &cfg.output_dir,
        Some(&cfg),
        start,
        &termination,
        code,
        &files,
    );
    println!(
        "run: {} snapshots, {} diagnostics rows, termination: {termination}",
        out.snapshots.len(),
        out.records.len()
    );
    code
}

struct CheckTable {
    rows: Vec<(String, f64, f64, bool)>,
}

impl CheckTable {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// Threshold check: pass iff `value <= limit`.
    fn le(&mut self, name: &str, value: f64, limit: f64) {
        self.rows
            .push((name.to_string(), value, limit, value <= limit));
    }

    /// Interval check on |value - target| <= slack, reported as deviation.
    fn near(&mut self, name: &str, value: f64, target: f64, slack: f64) {
        let dev = (value - target).abs();
        self.rows.push((
            format!("{name} (dev from {target})"),
            dev,
            slack,
            dev <= slack,
        ));
    }

    fn print_and_code(&self, title: &str) -> i32 {
        println!("== {title} ==");
        let mut ok = true;
        for (name, value, limit, pass) in &self.rows {
            println!(
                "{} {:<52} measured {:>12.5e}  limit {:>9.2e}",
                if *pass { "PASS" } else { "FAIL" },
                name,
                value,
                limit
            );
            ok &= *pass;
        }
        println!(
            "{}: {}",
            title,
            if ok {
                "all checks passed"
            } else {
                "FAILURES present"
            }
        );
        if ok {
            0
        } else {
            1
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("check,measured,limit,pass\n");
        for (name, value, limit, pass) in &self.rows {
            let _ = writeln!(
                out,
                "{name},{},{},{}",
                fmt_f64(*value),
                fmt_f64(*limit),
                pass
            );
        }
        out
    }
}

fn oscillating_family(grid: PeriodicGrid, t: f64, dt: f64) -> (Vec<CurveParam>, Vec<GridFunction>) {
    let mut cs = Vec::new();
    let mut fs = Vec::new();
    for m in -2i32..=2 {
        let tm = t + m as f64 * dt;
        let scale = 1.0 + 0.3 * tm.sin();
        let p = GridFunction::from_fn(grid, |a| {
            C64::new(0.0, 0.05 * scale) * (C64::new(0.0, -a)).exp()
        });
        let c = CurveParam::new(&p, CHORD_ARC_FLOOR).expect("test curve valid");
        let wob = 1.0 + 0.5 * (2.0 * tm).cos();
        let f = GridFunction::new(
            grid,
            c.z.iter()
                .enumerate()
                .map(|(j, &z)| {
                    let a = grid.step() * j as f64;
                    (C64::new(0.0, -1.0) * z).exp()
                        + C64::new(0.3 * wob, 0.0) * (C64::new(0.0, a)).exp()
                })
                .collect(),
        );
        cs.push(c);
        fs.push(f);
    }
    (cs, fs)
}

/// `identities` subcommand: operator-identity battery at resolution `n`
/// with reproducible random fields from `seed`.
pub fn cmd_identities(n: usize, seed: u64, out_dir: &Path) -> i32 {
    let start = now_ms();
    let grid = match PeriodicGrid::new(n) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let mut table = CheckTable::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = (n as i64 / 4 - 1).max(1);
    let bf = random_band_limited(grid, kmax, 1.0, &mut rng);
    let bg = random_band_limited(grid, kmax, 1.0, &mut rng);

    // curve for the static operator checks
    let p = GridFunction::from_fn(grid, |a| {
        C64::new(0.0, 0.05) * (C64::new(0.0, -a)).exp()
            + C64::new(0.02, 0.0) * (C64::new(0.0, -2.0 * a)).exp()
    });
    let c = CurveParam::new(&p, CHORD_ARC_FLOOR).expect("static test curve");

    let one = GridFunction::constant(grid, C64::new(1.0, 0.0));
    table.le(
        "curve transform annihilates constants (h1 = 0)",
        curve_hilbert(&c, &one).unwrap().norm_inf(),
        1e-8,
    );
    let hh = hilbert(&hilbert(&bf)).sub(&bf).norm_inf() / bf.norm_inf().max(1.0);
    table.le("flat transform is an involution (H^2 = I)", hh, 1e-13);
    let ez = GridFunction::new(
        grid,
        c.z.iter()
            .map(|&z| (C64::new(0.0, -1.0) * z).exp())
            .collect(),
    );
    table.le(
        "holomorphic trace fixed point ((I-h)e^{-iz})",
        ez.sub(&curve_hilbert(&c, &ez).unwrap()).norm_inf(),
        1e-8,
    );

    // battery at two step sizes for the Richardson slope
    let dt = 0.01;
    let (cs1, fs1) = oscillating_family(grid, 0.4, dt);
    let rep1 = identity_battery(&cs1, &fs1, dt, (&bf, &bg)).expect("battery");
    let (cs2, fs2) = oscillating_family(grid, 0.4, dt / 2.0);
    let rep2 = identity_battery(&cs2, &fs2, dt / 2.0, (&bf, &bg)).expect("battery");
    table.le(
        "holomorphic pair commutator ([f,h]g)",
        rep1.holomorphic_pair,
        1e-7,
    );
    table.le(
        "transform swap identity (band-limited)",
        rep1.swap_identity,
        1e-10,
    );
    let rate = rep1.time_identity / rep2.time_identity.max(1e-300);
    table.near("time-identity residual halving rate", rate, 4.0, 1.0);

    // C1 flat identity and exact multilinear scaling
    let spec = KernelSpec {
        curve_offset: None,
        f: std::sync::Arc::new(|_| C64::new(1.0, 0.0)),
        args: vec![KernelArg::Identity],
    };
    let got = c1_op(&spec, &bf).unwrap();
    let expect = hilbert(&bf).scale(C64::new(0.0, std::f64::consts::PI));
    table.le(
        "C1 flat identity (pi*i*H)",
        got.sub(&expect).norm_inf() / expect.norm_inf().max(1.0),
        1e-9,
    );
    let a1 = GridFunction::from_fn(grid, |a| C64::new(a.cos(), 0.0));
    let spec_a = KernelSpec {
        curve_offset: Some(p.clone()),
        f: std::sync::Arc::new(|q| C64::new(1.0, 0.0) / q),
        args: vec![KernelArg::Samples(a1.clone())],
    };
    let base = c1_op(&spec_a, &bf).unwrap();
    let spec_b = KernelSpec {
        curve_offset: Some(p),
        f: spec_a.f.clone(),
        args: vec![KernelArg::Samples(a1.scale(C64::new(2.0, 0.0)))],
    };
    let scaled = c1_op(&spec_b, &bf).unwrap();
    table.le(
        "C1 multilinear scaling (lambda = 2, exact)",
        scaled.sub(&base.scale(C64::new(2.0, 0.0))).norm_inf(),
        0.0,
    );

    // second-kind solve sanity on a mild curve
    let y = GridFunction::from_fn(grid, |a| C64::new(a.cos(), 0.0));
    let x = solve_i_plus_kstar(&c, &y, 1e-10).unwrap();
    let resid = {
        let kx = crate::curve::double_layer_adjoint(&c, &x).unwrap();
        x.add(&kx).sub(&y).norm_l2() / y.norm_l2()
    };
    table.le("(I+K*) solve residual", resid, 1e-10);

    let code = table.print_and_code("identities");
    let _ = fs::create_dir_all(out_dir);
    let report = out_dir.join("identities.csv");
    let _ = write_atomic(&report, &table.to_csv());
    let _ = write_manifest(
        out_dir,
        None,
        start,
        if code == 0 {
            "completed"
        } else {
            "error: checks failed"
        },
        code,
        &[report],
    );
    code
}

/// Least-squares oscillation frequency from zero crossings of a sampled
/// scalar signal.
pub fn fit_frequency(series: &[(f64, f64)]) -> Option<f64> {
    let mut crossings = Vec::new();
    for w in series.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        if v0 == 0.0 {
            crossings.push(t0);
        } else if v0.signum() != v1.signum() {
            // linear interpolation of the crossing time
            crossings.push(t0 + (t1 - t0) * v0.abs() / (v0 - v1).abs());
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    let first = *crossings.first().unwrap();
    let last = *crossings.last().unwrap();
    let half_periods = (crossings.len() - 1) as f64;
    Some(std::f64::consts::PI * half_periods / (last - first))
}

/// Measure the oscillation frequency of mode `-k` for small single-mode
/// initial data.
pub fn measure_mode_frequency(n: usize, k: i64, eps: f64, periods: f64) -> Result<f64> {
    let cfg = SolverConfig {
        n,
        init: InitKind::SingleMode { k, eps, phase: 0.0 },
        ..Default::default()
    };
    let omega0 = (k as f64).sqrt();
    let t_end = periods * std::f64::consts::TAU / omega0;
    let dt = 0.01;
    let mut s = riemann::init_from_config(&cfg)?;
    let mut series = vec![(0.0, dft(&s.u)?.coeff(-k).re)];
    let steps = (t_end / dt).ceil() as usize;
    for _ in 0..steps {
        s = riemann::step_rk4(&s, dt, cfg.dealias_fraction, true)?;
        series.push((s.t, dft(&s.u)?.coeff(-k).re));
    }
    fit_frequency(&series).ok_or_else(|| {
        WaveError::Interpolation("not enough zero crossings for a frequency fit".into())
    })
}

/// `convergence` subcommand: RK4 temporal order and spectral spatial
/// convergence of the curve transform.
pub fn cmd_convergence(out_dir: &Path) -> i32 {
    let start = now_ms();
    let mut table = CheckTable::new();

    // temporal order: smooth run against a dt/8 reference
    let cfg = SolverConfig {
        n: 64,
        init: InitKind::SingleMode {
            k: 1,
            eps: 0.01,
            phase: 0.0,
        },
        ..Default::default()
    };
    let s0 = riemann::init_from_config(&cfg).expect("init");
    let t_end = 0.5;
    let run_fixed = |dt: f64| -> GridFunction {
        let mut s = s0.clone();
        for _ in 0..(t_end / dt).round() as usize {
            s = riemann::step_rk4(&s, dt, cfg.dealias_fraction, true).expect("step");
        }
        s.u
    };
    let reference = run_fixed(0.05 / 16.0);
    let e1 = run_fixed(0.05).sub(&reference).norm_inf();
    let e2 = run_fixed(0.025).sub(&reference).norm_inf();
    let order = (e1 / e2).log2();
    table.near("RK4 temporal order", order, 4.0, 0.2);

    // spatial: (I-h)e^{-iz} on an analytic curve, n-doubling staircase
    let mut errs = Vec::new();
    for n in [32usize, 64, 128, 256] {
        let g = PeriodicGrid::new(n).unwrap();
        let p = GridFunction::from_fn(g, |a| {
            C64::new(0.0, 0.25) * (C64::new(0.0, -a)).exp()
                + C64::new(0.1, 0.0) * (C64::new(0.0, -2.0 * a)).exp()
        });
        let c = CurveParam::new(&p, CHORD_ARC_FLOOR).unwrap();
        let f = GridFunction::new(
            g,
            c.z.iter()
                .map(|&z| (C64::new(0.0, -1.0) * z).exp())
                .collect(),
        );
        errs.push(f.sub(&curve_hilbert(&c, &f).unwrap()).norm_inf());
    }
    for (i, w) in errs.windows(2).enumerate() {
        let label = format!("spatial error drop n={} -> n={}", 32 << i, 64 << i);
        if w[1] < 1e-11 {
            table.le(&format!("{label} (below floor)"), w[1], 1e-11);
        } else {
            table.le(
                &format!("{label} (ratio >= 10 means <= 0.1)"),
                w[1] / w[0],
                0.1,
            );
        }
    }

    let code = table.print_and_code("convergence");
    let _ = fs::create_dir_all(out_dir);
    let mut csv = table.to_csv();
    let _ = writeln!(csv, "# spatial errors: {:?}", errs);
    let report = out_dir.join("convergence.csv");
    let _ = write_atomic(&report, &csv);
    let _ = write_manifest(
        out_dir,
        None,
        start,
        if code == 0 {
            "completed"
        } else {
            "error: checks failed"
        },
        code,
        &[report],
    );
    code
}

/// `scaling` subcommand: quadratic/cubic amplitude structure.
pub fn cmd_scaling(n: usize, out_dir: &Path) -> i32 {
    let start = now_ms();
    let epsilons = [0.02, 0.01, 0.005];
    let report = match scaling_study(&epsilons, 1, 1.0, n, 1e-10, CHORD_ARC_FLOOR) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            let _ = fs::create_dir_all(out_dir);
            let _ = write_manifest(
                out_dir,
                None,
                start,
                &format!("error: {e}"),
                e.exit_code(),
                &[],
            );
            return e.exit_code();
        }
    };
    let mut table = CheckTable::new();
    table.near("slope of |b| vs eps", report.slopes[0], 2.0, 0.15);
    table.near("slope of |A-1| vs eps", report.slopes[1], 2.0, 0.15);
    table.near(
        "slope of cubic right side vs eps",
        report.slopes[2],
        3.0,
        0.2,
    );
    for (i, &eps) in epsilons.iter().enumerate() {
        table.le(
            &format!("cubic identity residual at eps = {eps}"),
            report.norms_residual[i],
            10.0 * eps * eps * eps,
        );
    }
    let code = table.print_and_code("scaling");

    let mut csv = String::from("eps,norm_b,norm_Aminus1,norm_rhs_cubic\n");
    for i in 0..report.epsilons.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f64(report.epsilons[i]),
            fmt_f64(report.norms_b[i]),
            fmt_f64(report.norms_a_minus_1[i]),
            fmt_f64(report.norms_rhs_cubic[i])
        );
    }
    let _ = writeln!(
        csv,
        "# slopes: b = {}, Aminus1 = {}, rhs_cubic = {}, residual = {}",
        fmt_f64(report.slopes[0]),
        fmt_f64(report.slopes[1]),
        fmt_f64(report.slopes[2]),
        fmt_f64(report.slopes[3])
    );
    let _ = fs::create_dir_all(out_dir);
    let path = out_dir.join("scaling.csv");
    let _ = write_atomic(&path, &csv);
    let _ = write_manifest(
        out_dir,
        None,
        start,
        if code == 0 {
            "completed"
        } else {
            "error: checks failed"
        },
        code,
        &[path],
    );
    code
}

/// `crossvalidate` subcommand: both formulations from matched data, base
/// resolution plus one refinement.
pub fn cmd_crossvalidate(out_dir: &Path) -> i32 {
    let start = now_ms();
    let base = SolverConfig {
        n: 128,
        t_end: 1.0,
        init: InitKind::SingleMode {
            k: 1,
            eps: 0.01,
            phase: 0.0,
        },
        ..Default::default()
    };
    let refined = SolverConfig {
        n: 256,
        ..base.clone()
    };

    let jobs: Vec<(SolverConfig, f64)> = vec![(base, 0.005), (refined, 0.0025)];
    let results = run_parallel(jobs, |(cfg, dt)| cross_validate(&cfg, dt, 5));

    let mut table = CheckTable::new();
    let mut files = Vec::new();
    let _ = fs::create_dir_all(out_dir);
    let mut distances = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(cv) => {
                let label = if i == 0 {
                    "base n=128"
                } else {
                    "refined n=256"
                };
                table.le(
                    &format!("interface Hausdorff distance ({label})"),
                    cv.hausdorff,
                    1e-6,
                );
                distances.push(cv.hausdorff);
                let snap = lagrangian_csv(&cv.lagrangian_state);
                let path = out_dir.join(format!("crossvalidate_lagrangian_{i}.csv"));
                if write_atomic(&path, &snap).is_ok() {
                    files.push(path);
                }
                println!(
                    "{label}: hausdorff {:.3e}, velocity sup {:.3e}",
                    cv.hausdorff, cv.velocity_sup
                );
            }
            Err(e) => {
                eprintln!("{e}");
                let _ = write_manifest(
                    out_dir,
                    None,
                    start,
                    &format!("error: {e}"),
                    e.exit_code(),
                    &files,
                );
                return e.exit_code();
            }
        }
    }
    if distances.len() == 2 {
        // refinement must not increase the distance
        table.le(
            "refined/base distance ratio (must decrease)",
            distances[1] / distances[0],
            1.0,
        );
    }
    let code = table.print_and_code("crossvalidate");
    let path = out_dir.join("crossvalidate.csv");
    if write_atomic(&path, &table.to_csv()).is_ok() {
        files.push(path);
    }
    let _ = write_manifest(
        out_dir,
        None,
        start,
        if code == 0 {
            "completed"
        } else {
            "error: checks failed"
        },
        code,
        &files,
    );
    code
}

/// Run independent jobs on up to `WAVECREST_THREADS` worker threads
/// (default: sequential); results come back in input order.
pub fn run_parallel<J, R, F>(jobs: Vec<J>, f: F) -> Vec<R>
where
    J: Send,
    R: Send,
    F: Fn(J) -> R + Sync,
{
    let cap = std::env::var("WAVECREST_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .max(1);
    if cap <= 1 || jobs.len() <= 1 {
        return jobs.into_iter().map(f).collect();
    }
    let mut results: Vec<Option<R>> = jobs.iter().map(|_| None).collect();
    let jobs: Vec<(usize, J)> = jobs.into_iter().enumerate().collect();
    let queue = std::sync::Mutex::new(jobs);
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..cap {
            scope.spawn(|| loop {
                let job = queue.lock().expect("job queue").pop();
                match job {
                    Some((i, j)) => {
                        let r = f(j);
                        slots.lock().expect("result slots")[i] = Some(r);
                    }
                    None => break,
                }
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("job completed"))
        .collect()
}

/// Dispersion helper shared by tests and the acceptance suite: relative
/// deviation of the measured frequency from `sqrt(k)`.
pub fn dispersion_deviation(n: usize, k: i64, eps: f64) -> Result<f64> {
    let omega = measure_mode_frequency(n, k, eps, 3.0)?;
    Ok((omega - (k as f64).sqrt()).abs() / (k as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_config_round_trip() {
        let text = "\
# sample config
n = 64
dt = 0.01
t_end = 0.5          # short run
dealias = 0.6666666666666666
projection_cadence = 1
init.kind = single_mode
init.k = 2
init.eps = 0.01
init.phase = 0.0
output_cadence = 5
seed = 7
solver_tol = 1e-10
chord_arc_floor = 1e-3
output_dir = /tmp/somewhere
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.solver.n, 64);
        assert_eq!(cfg.solver.dt, DtPolicy::Fixed(0.01));
        assert_eq!(
            cfg.solver.init,
            InitKind::SingleMode {
                k: 2,
                eps: 0.01,
                phase: 0.0
            }
        );
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/somewhere"));
    }

    #[test]
    fn parse_config_rejects_odd_n_naming_the_key() {
        let err = parse_config("n = 63\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains('n') && msg.contains("even"), "message: {msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn parse_config_rejects_unknown_key() {
        let err = parse_config("frobnicate = 1\n").unwrap_err();
        assert!(format!("{err}").contains("frobnicate"));
    }

    #[test]
    fn fit_frequency_recovers_cosine() {
        let omega = 1.37;
        let series: Vec<(f64, f64)> = (0..2000)
            .map(|i| {
                let t = i as f64 * 0.01;
                (t, (omega * t).cos())
            })
            .collect();
        let got = fit_frequency(&series).unwrap();
        assert!((got - omega).abs() / omega < 1e-4, "got {got}");
    }

    #[test]
    fn run_parallel_preserves_order() {
        std::env::set_var("WAVECREST_THREADS", "3");
        let jobs: Vec<u64> = (0..10).collect();
        let out = run_parallel(jobs, |j| j * j);
        assert_eq!(out, (0..10).map(|j| j * j).collect::<Vec<_>>());
        std::env::remove_var("WAVECREST_THREADS");
    }

    #[test]
    fn float_format_is_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert!(s.starts_with("3.1415926535897931"), "{s}");
        let v: f64 = s.parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }
}
