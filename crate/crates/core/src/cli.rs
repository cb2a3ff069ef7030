//! Command implementations behind the `fcomposite` binary.
//!
//! Every command reads an [`ExperimentConfig`], writes CSV (header row, RFC 4180
//! quoting, 12 significant digits) and echoes the effective configuration to
//! `<out>.config` next to each CSV file.

use std::path::{Path, PathBuf};

use crate::channel::{cdf_composite, normalized_pdf_composite, pdf_composite, ChannelParams};
use crate::config::{linspace, ExperimentConfig};
use crate::energy::{energy_efficiency, irs_capacity, relay_capacity, Node};
use crate::error::{Error, Result};
use crate::joint_alloc::{objective, solve, solve_fixed_bandwidth, JointAllocState};
use crate::numerics::{bisect, McConfig, QuadratureConfig};
use crate::power_alloc::{
    capacity_gap, ergodic_capacity_p1, policy_closed_form, policy_eval, policy_exact, rayleigh_baseline,
    rayleigh_baseline_capacity, PowerBudget, PowerPolicy,
};
use crate::validate::{run_all, SuiteResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pdf,
    PowerAlloc,
    JointAlloc,
    Energy,
    Validate,
}

/// What a successful command run reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Done,
    /// Joint allocation hit the iteration cap; the final row is flagged.
    NotConverged,
    Validation(Vec<SuiteResult>),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for an error: configuration and I/O problems map to 2,
/// everything raised by the numerics to 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::InvalidParam(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.11e}"),
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// CSV file plus its effective-config sidecar.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<Cell>], cfg: &ExperimentConfig) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    std::fs::write(sidecar_path(path), cfg.to_text())?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

/// Sibling path `<stem><suffix>.csv`.
pub fn companion_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.csv"))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Runs one command with an already loaded configuration.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    match cmd {
        Command::Pdf => cmd_pdf(cfg, out).map(|_| Outcome::Done),
        Command::PowerAlloc => cmd_power_alloc(cfg, out).map(|_| Outcome::Done),
        Command::JointAlloc => cmd_joint_alloc(cfg, out),
        Command::Energy => cmd_energy(cfg, out).map(|_| Outcome::Done),
        Command::Validate => cmd_validate(cfg, out).map(Outcome::Validation),
    }
}

/// Loads the configuration, applies the seed override, runs the command and
/// maps the result to an exit status. Diagnostics go to stderr.
pub fn run(cmd: Command, config: Option<&Path>, out: &Path, seed: Option<u64>) -> i32 {
    let loaded = match config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    };
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    match execute(cmd, &cfg, out) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::NotConverged) => {
            eprintln!("warning: joint allocation stopped at the iteration cap without converging");
            EXIT_OK
        }
        Ok(Outcome::Validation(results)) => {
            for r in &results {
                println!(
                    "{} {:<30} measured {:.3e} tolerance {:.3e}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.measured,
                    r.tolerance
                );
            }
            if results.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn sweep_or(cfg: &ExperimentConfig, name: &'static str, values: Vec<f64>) -> (String, Vec<f64>) {
    match cfg.sweep() {
        Some((n, v)) => (n.to_string(), v),
        None => (name.to_string(), values),
    }
}

/// Gain below which the normalized composite law keeps mass `p`.
pub fn composite_quantile(cp: &ChannelParams, p: f64) -> Result<f64> {
    let f = |u: f64| cdf_composite(u.exp(), cp).unwrap_or(f64::NAN) - p;
    let t = cp.typical_gain().ln();
    let (mut lo, mut hi) = (t - 1.0, t + 1.0);
    while f(lo) > 0.0 {
        lo -= 2.0;
    }
    while f(hi) < 0.0 {
        hi += 2.0;
    }
    bisect(f, lo, hi, 1e-10).map(f64::exp)
}

fn gain_grid(h_max: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|i| h_max * i as f64 / points as f64).collect()
}

/// Composite densities over a gain grid for each value of the swept parameter
/// (default: `k` from 1 to 4).
pub fn cmd_pdf(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (name, values) = sweep_or(cfg, "k", linspace(1.0, 4.0, 4));
    let channels: Vec<ChannelParams> =
        values.iter().map(|&v| cfg.with_param(&name, v)?.channel()).collect::<Result<_>>()?;
    let h_max = if cfg.pdf_h_max > 0.0 {
        cfg.pdf_h_max
    } else {
        channels.iter().map(|cp| composite_quantile(cp, 0.995)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max)
    };
    let grid = gain_grid(h_max, cfg.pdf_points);
    let mut rows = Vec::with_capacity(values.len() * grid.len());
    for (v, cp) in values.iter().zip(&channels) {
        for &h in &grid {
            rows.push(vec![Cell::Num(*v), h.into(), pdf_composite(h, cp)?.into(), normalized_pdf_composite(h, cp)?.into()]);
        }
    }
    write_csv(out, &header(&[&name, "h", "density", "normalized_density"]), &rows, cfg)
}

fn adapted_policy(cfg: &ExperimentConfig, cp: &ChannelParams, pb: &PowerBudget) -> Result<PowerPolicy> {
    if cfg.threshold == "exact" {
        policy_exact(cp, pb)
    } else {
        policy_closed_form(cp, pb)
    }
}

/// Power surfaces `P(h)` along `surface_axis`, and (in `<stem>_capacity.csv`)
/// adapted against Rayleigh-designed capacity over the sweep (default:
/// `avg_power` from 0.1 to 1 W).
pub fn cmd_power_alloc(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let axis = cfg.surface_axis.as_str();
    let mut surfaces = Vec::new();
    for &v in &cfg.surface_values {
        let c = cfg.with_param(axis, v)?;
        let cp = c.channel()?;
        let pb = c.budget()?;
        surfaces.push((v, cp.clone(), adapted_policy(cfg, &cp, &pb)?));
    }
    let h_max = if cfg.pdf_h_max > 0.0 {
        cfg.pdf_h_max
    } else {
        let mut m: f64 = 0.0;
        for (_, cp, pol) in &surfaces {
            m = m.max(composite_quantile(cp, 0.995)?).max(2.0 * pol.threshold);
        }
        m
    };
    // starts at zero so every surface shows its zero-power region
    let grid: Vec<f64> = (0..cfg.pdf_points).map(|i| h_max * i as f64 / (cfg.pdf_points - 1) as f64).collect();
    let mut rows = Vec::new();
    for (v, _, pol) in &surfaces {
        for &h in &grid {
            rows.push(vec![Cell::Num(*v), h.into(), policy_eval(pol, h).into(), pol.threshold.into()]);
        }
    }
    write_csv(out, &header(&[axis, "h", "power", "threshold"]), &rows, cfg)?;

    let (name, values) = sweep_or(cfg, "avg_power", linspace(0.1, 1.0, 10));
    let qcfg = QuadratureConfig::default();
    let mut rows = Vec::new();
    for &v in &values {
        let c = cfg.with_param(&name, v)?;
        let cp = c.channel()?;
        let pb = c.budget()?;
        let pol = adapted_policy(cfg, &cp, &pb)?;
        let adapted = ergodic_capacity_p1(&cp, &pb, &pol)?;
        let baseline = rayleigh_baseline_capacity(&cp, &pb)?;
        let base = rayleigh_baseline(&cp, &pb)?;
        let gap = capacity_gap(&cp, &pb, &pol, &base.policy, base.scale, &qcfg)?;
        rows.push(vec![Cell::Num(v), pol.threshold.into(), adapted.into(), baseline.into(), gap.value.into()]);
    }
    write_csv(
        &companion_path(out, "_capacity"),
        &header(&[&name, "threshold", "adapted_capacity", "baseline_capacity", "gap"]),
        &rows,
        cfg,
    )
}

fn alloc_row(kind: &str, i: usize, b: &[f64], p: &[f64], c: f64, flag: &str) -> Vec<Cell> {
    let mut row = vec![Cell::from(kind), Cell::from(i)];
    row.extend(b.iter().map(|&v| Cell::Num(v)));
    row.extend(p.iter().map(|&v| Cell::Num(v)));
    row.push(Cell::Num(c));
    row.push(Cell::from(flag));
    row
}

/// Iteration trace of the joint allocator for `joint_gains`, then the
/// completed allocation (`final`, with the convergence flag) and the
/// equal-bandwidth comparison (`fixed`).
pub fn cmd_joint_alloc(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let problem = cfg.joint_problem()?;
    let solver = cfg.solver();
    let sol = solve(&problem, &solver)?;
    let k = problem.k();
    let mut cols = vec!["kind".to_string(), "i".to_string()];
    cols.extend((1..=k).map(|j| format!("B_{j}")));
    cols.extend((1..=k).map(|j| format!("P_{j}")));
    cols.push("C2".into());
    cols.push("converged".into());
    let mut rows: Vec<Vec<Cell>> =
        sol.trace.iter().map(|r| alloc_row("iterate", r.iteration, &r.bandwidths, &r.powers, r.capacity, "")).collect();
    let s = &sol.state;
    rows.push(alloc_row("final", s.iteration, &s.bandwidths, &s.powers, sol.capacity, if sol.converged { "true" } else { "false" }));
    let fixed: JointAllocState = solve_fixed_bandwidth(&problem, &solver)?;
    rows.push(alloc_row("fixed", 0, &fixed.bandwidths, &fixed.powers, objective(&problem, &fixed), ""));
    write_csv(out, &cols, &rows, cfg)?;
    Ok(if sol.converged { Outcome::Done } else { Outcome::NotConverged })
}

/// Seed for grid point `index`, decorrelated from the base seed.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Energy efficiency of relay and IRS links for every `(k, n)` in the
/// configured lists over the sweep (default: `avg_power` from 0.01 to 1 W,
/// with the source transmitting at the swept average power).
pub fn cmd_energy(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (name, values) = sweep_or(cfg, "avg_power", linspace(0.01, 1.0, 10));
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &k in &cfg.energy_k_values {
        for &n in &cfg.energy_n_values {
            for &v in &values {
                let c = cfg.with_param("k", k as f64)?.with_param("n", n as f64)?.with_param(&name, v)?;
                let sc = c.scenario()?;
                let mc = McConfig { seed: point_seed(cfg.seed, index), ..c.mc() };
                index += 1;
                let rc = relay_capacity(&sc, &mc)?;
                let ic = irs_capacity(&sc, &mc)?;
                let re = energy_efficiency(&sc, Node::Relay, &mc)?;
                let ie = energy_efficiency(&sc, Node::Irs, &mc)?;
                rows.push(vec![
                    Cell::from(k),
                    Cell::from(n),
                    Cell::Num(v),
                    rc.mean.into(),
                    ic.mean.into(),
                    re.mean.into(),
                    re.std_error.into(),
                    ie.mean.into(),
                    ie.std_error.into(),
                ]);
            }
        }
    }
    write_csv(
        out,
        &header(&["k", "n", &name, "relay_capacity", "irs_capacity", "relay_ee", "relay_ee_se", "irs_ee", "irs_ee_se"]),
        &rows,
        cfg,
    )
}

/// Runs every validation suite and writes one row per suite.
pub fn cmd_validate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SuiteResult>> {
    let results = run_all(cfg)?;
    let rows: Vec<Vec<Cell>> = results
        .iter()
        .map(|r| vec![Cell::from(r.name), r.measured.into(), r.tolerance.into(), Cell::from(if r.passed { "true" } else { "false" })])
        .collect();
    write_csv(out, &header(&["suite", "measured", "tolerance", "passed"]), &rows, cfg)?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("fcomposite-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn number_format_has_twelve_digits() {
        assert_eq!(Cell::Num(1.0 / 3.0).render(), "3.33333333333e-1");
        assert_eq!(Cell::Num(-2e8).render(), "-2.00000000000e8");
        assert_eq!(Cell::from("a,b").render(), "a,b");
    }

    #[test]
    fn csv_quotes_and_sidecar() {
        let p = tmp("quote.csv");
        let cfg = ExperimentConfig::default();
        write_csv(&p, &header(&["x", "label"]), &[vec![Cell::Num(1.5), Cell::from("a,\"b\"")]], &cfg).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "x,label\r\n1.50000000000e0,\"a,\"\"b\"\"\"\r\n");
        let side = ExperimentConfig::parse(&std::fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(side, cfg);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Tolerance { estimate: 1.0, error: 1.0 }), EXIT_NUMERICAL);
        let p = tmp("missing.csv");
        assert_eq!(run(Command::Pdf, Some(Path::new("/nonexistent/cfg")), &p, None), EXIT_CONFIG);
    }

    #[test]
    fn pdf_single_point_sweep_matches_library() {
        let p = tmp("pdf1.csv");
        let cfg = ExperimentConfig {
            sweep_name: "k".into(),
            sweep_start: 2.0,
            sweep_points: 1,
            pdf_points: 5,
            pdf_h_max: 4.0,
            ..Default::default()
        };
        cmd_pdf(&cfg, &p).unwrap();
        let cp = cfg.with_param("k", 2.0).unwrap().channel().unwrap();
        let mut r = csv::Reader::from_path(&p).unwrap();
        let mut n = 0;
        for rec in r.records() {
            let rec = rec.unwrap();
            let h: f64 = rec[1].parse().unwrap();
            let d: f64 = rec[2].parse().unwrap();
            let want = pdf_composite(h, &cp).unwrap();
            assert!(((d - want) / want).abs() < 1e-11);
            n += 1;
        }
        assert_eq!(n, 5);
    }

    #[test]
    fn point_seeds_differ() {
        assert_ne!(point_seed(1, 0), point_seed(1, 1));
        assert_ne!(point_seed(1, 0), point_seed(2, 0));
    }
}
