use std::path::{Path, PathBuf};
use std::process::Command;

const QUICK: &str = "samples = 20000\nenergy_n_values = 8\n";

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fcomposite-it-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, sub: &str, config: &str, out: &str, extra: &[&str]) -> i32 {
    let cfg = dir.join(format!("{out}.in"));
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fcomposite"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let head = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (head, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn column(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn every_command_is_byte_reproducible() {
    let dir = workdir("repro");
    for sub in ["pdf", "power-alloc", "joint-alloc", "energy", "validate"] {
        let a = format!("{sub}-a.csv");
        let b = format!("{sub}-b.csv");
        assert_eq!(run(&dir, sub, QUICK, &a, &["--seed", "7"]), 0, "{sub}");
        assert_eq!(run(&dir, sub, QUICK, &b, &["--seed", "7"]), 0, "{sub}");
        assert_eq!(std::fs::read(dir.join(&a)).unwrap(), std::fs::read(dir.join(&b)).unwrap(), "{sub}");
        let side = std::fs::read_to_string(dir.join(format!("{a}.config"))).unwrap();
        assert!(side.lines().any(|l| l.replace(' ', "") == "seed=7"), "{sub}");
    }
}

#[test]
fn seed_changes_monte_carlo_output_only() {
    let dir = workdir("seed");
    assert_eq!(run(&dir, "energy", QUICK, "e1.csv", &["--seed", "1"]), 0);
    assert_eq!(run(&dir, "energy", QUICK, "e2.csv", &["--seed", "2"]), 0);
    assert_ne!(std::fs::read(dir.join("e1.csv")).unwrap(), std::fs::read(dir.join("e2.csv")).unwrap());
    assert_eq!(run(&dir, "pdf", QUICK, "p1.csv", &["--seed", "1"]), 0);
    assert_eq!(run(&dir, "pdf", QUICK, "p2.csv", &["--seed", "2"]), 0);
    assert_eq!(std::fs::read(dir.join("p1.csv")).unwrap(), std::fs::read(dir.join("p2.csv")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = workdir("exit");
    assert_eq!(run(&dir, "validate", QUICK, "ok.csv", &[]), 0);
    assert_eq!(run(&dir, "validate", &format!("{QUICK}tol_normalization = 1e-300\n"), "bad.csv", &[]), 1);
    let (head, rows) = table(&dir.join("bad.csv"));
    let passed = column(&head, "passed");
    assert!(rows.iter().any(|r| r[passed] == "false"));
    assert_eq!(run(&dir, "pdf", "k = zero\n", "cfg.csv", &[]), 2);
    assert_eq!(run(&dir, "pdf", "no_such_key = 1\n", "cfg2.csv", &[]), 2);
    let status = Command::new(env!("CARGO_BIN_EXE_fcomposite"))
        .args(["pdf", "--config", "/nonexistent/file", "--out"])
        .arg(dir.join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn pdf_modes_do_not_move_left() {
    let dir = workdir("pdf");
    for (cfg, name) in [
        (format!("{QUICK}pdf_points = 400\n"), "k.csv"),
        (format!("{QUICK}pdf_points = 400\nsweep_name = n\nsweep_start = 4\nsweep_stop = 16\nsweep_points = 3\n"), "n.csv"),
    ] {
        assert_eq!(run(&dir, "pdf", &cfg, name, &[]), 0);
        let (head, rows) = table(&dir.join(name));
        assert_eq!(&head[1..], ["h", "density", "normalized_density"]);
        let mut modes: Vec<(f64, f64, f64)> = Vec::new();
        for r in &rows {
            let (v, h, d) = (num(&r[0]), num(&r[1]), num(&r[3]));
            match modes.last_mut() {
                Some(m) if m.0 == v => {
                    if d > m.2 {
                        *m = (v, h, d);
                    }
                }
                _ => modes.push((v, h, d)),
            }
        }
        if name == "n.csv" {
            // the n sweep uses 4, 10, 16
            assert_eq!(modes.len(), 3);
        } else {
            assert_eq!(modes.len(), 4);
        }
        for w in modes.windows(2) {
            assert!(w[1].1 >= w[0].1, "{name}: {modes:?}");
        }
    }
}

#[test]
fn power_alloc_surfaces_and_capacity_ordering() {
    let dir = workdir("power");
    // outage regime (threshold near the typical gain) with the exact threshold
    let cfg = format!(
        "{QUICK}m = 5\nm_s = 1\nsurface_axis = m\nsurface_values = 1, 5, 10\nthreshold = exact\nnoise_psd = 1e-10\navg_power = 0.05\n"
    );
    assert_eq!(run(&dir, "power-alloc", &cfg, "pa.csv", &[]), 0);
    let (head, rows) = table(&dir.join("pa.csv"));
    assert_eq!(head, ["m", "h", "power", "threshold"]);
    let mut by_h: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    let mut zero_region = std::collections::BTreeSet::new();
    for r in &rows {
        let (h, p, h0) = (num(&r[1]), num(&r[2]), num(&r[3]));
        if h < h0 {
            assert_eq!(p, 0.0);
            zero_region.insert(r[0].clone());
        }
        by_h.entry(r[1].clone()).or_default().push(p);
    }
    assert_eq!(zero_region.len(), 3);
    for ps in by_h.values() {
        assert!(ps.windows(2).all(|w| w[1] >= w[0]), "{ps:?}");
    }

    let cfg = format!("{QUICK}m = 5\nm_s = 1\n");
    assert_eq!(run(&dir, "power-alloc", &cfg, "pb.csv", &[]), 0);
    let (head, rows) = table(&dir.join("pb_capacity.csv"));
    let (a, b, g) = (column(&head, "adapted_capacity"), column(&head, "baseline_capacity"), column(&head, "gap"));
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(num(&r[g]) > 0.0);
        assert!(num(&r[a]) >= num(&r[b]));
    }
}

#[test]
fn joint_alloc_trace_layout() {
    let dir = workdir("joint");
    assert_eq!(run(&dir, "joint-alloc", &format!("{QUICK}joint_gains = 4, 5, 6\n"), "j.csv", &[]), 0);
    let (head, rows) = table(&dir.join("j.csv"));
    assert_eq!(head, ["kind", "i", "B_1", "B_2", "B_3", "P_1", "P_2", "P_3", "C2", "converged"]);
    let fin = rows.iter().find(|r| r[0] == "final").unwrap();
    let fixed = rows.iter().find(|r| r[0] == "fixed").unwrap();
    assert_eq!(fin[9], "true");
    assert!(num(&fin[2]) < 1e6 && num(&fin[5]) < 0.5e-3);
    assert!(num(&fin[8]) >= num(&fixed[8]));
    assert_eq!(rows.iter().filter(|r| r[0] == "iterate").count(), num(&fin[1]) as usize + 1);
}

#[test]
fn energy_irs_ahead_and_degenerate_rows() {
    let dir = workdir("energy");
    assert_eq!(run(&dir, "energy", QUICK, "e.csv", &[]), 0);
    let (head, rows) = table(&dir.join("e.csv"));
    let (r, i) = (column(&head, "relay_ee"), column(&head, "irs_ee"));
    assert_eq!(rows.len(), 10);
    for row in &rows {
        assert!(num(&row[i]) > num(&row[r]));
    }

    // the closed-form water level stays positive at zero budget, so the peak has to vanish too
    let zero = format!("{QUICK}avg_power = 0\npeak_power = 1e-300\nsweep_name = avg_power\nsweep_start = 0\nsweep_stop = 0\nsweep_points = 1\n");
    assert_eq!(run(&dir, "energy", &zero, "z.csv", &[]), 0);
    let (head, rows) = table(&dir.join("z.csv"));
    assert_eq!(rows.len(), 1);
    for col in ["relay_capacity", "relay_ee"] {
        assert_eq!(num(&rows[0][column(&head, col)]), 0.0, "{col}");
    }
    for col in ["irs_capacity", "irs_ee"] {
        assert!(num(&rows[0][column(&head, col)]) < 1e-200, "{col}");
    }
}
