use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use patchflow::io::read_diagnostics_file;
use patchflow_cli::commands::{parse_kernel_expr, Manifest};
use patchflow_cli::config::{parse_config, parse_config_str, PresetName, VariantName};
use patchflow_cli::OUTPUT_ENV;

const DISC: &str = r#"
[shape]
preset = "circle"
radius = 1.0

[kernel]
variant = "biot_savart"

[evolution]
dt = 1e-2
t_final = 1.0
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_patchflow"));
    c.env_remove(OUTPUT_ENV);
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_disc_config_gets_defaults() {
    let c = parse_config_str(DISC).unwrap();
    assert_eq!(c.shape.preset, PresetName::Circle);
    assert_eq!(c.shape.n, 128);
    assert_eq!(c.diagnostics.gamma, 0.5);
    assert_eq!(c.kernel.variant, VariantName::BiotSavart);
    assert_eq!(c.kernel.strength, 1.0);
    let e = c.evolution.as_ref().unwrap();
    assert_eq!((e.dt, e.t_final, e.record_every), (1e-2, 1.0, 1));
    assert_eq!(c.curve().unwrap().n_markers(), 128);
}

#[test]
fn gamma_out_of_range_names_the_key() {
    let text = format!("{DISC}\n[diagnostics]\ngamma = 1.5\n");
    let err = format!("{:#}", parse_config_str(&text).unwrap_err());
    assert!(err.contains("diagnostics.gamma"), "{err}");
    assert!(err.contains("out of range"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let text = DISC.replace(
        "variant = \"biot_savart\"",
        "variant = \"biot_savart\"\nstrenght = 2.0",
    );
    let err = format!("{:#}", parse_config_str(&text).unwrap_err());
    assert!(err.contains("strenght"), "{err}");
    assert!(err.contains("unknown field"), "{err}");
    let text = format!("{DISC}\n[outptu]\ndirectory = \"x\"\n");
    assert!(parse_config_str(&text).is_err());
}

#[test]
fn shape_parameters_must_match_the_preset() {
    let text = DISC.replace("radius = 1.0", "radius = 1.0\nepsilon = 0.1");
    assert!(format!("{:#}", parse_config_str(&text).unwrap_err()).contains("shape.epsilon"));
    let text = DISC.replace(
        "preset = \"circle\"\nradius = 1.0",
        "preset = \"ellipse\"\na = 2.0",
    );
    assert!(format!("{:#}", parse_config_str(&text).unwrap_err()).contains("shape.b"));
}

#[test]
fn kernel_blocks_of_every_variant() {
    let fourier = DISC.replace(
        "variant = \"biot_savart\"",
        "variant = \"angular_fourier\"\n[kernel.fourier]\nc1sin = [-0.15915494309189535]\nc2cos = [0.15915494309189535]",
    );
    let c = parse_config_str(&fourier).unwrap();
    let k = c.kernel().unwrap();
    let p = patchflow::Point::new(0.3, -0.7);
    assert!((k.value(p) - patchflow::kernel::KernelSpec::biot_savart().value(p)).norm() < 1e-15);

    let combo = DISC.replace(
        "variant = \"biot_savart\"",
        "variant = \"linear_combination\"\n[[kernel.members]]\nvariant = \"biot_savart\"\nweight = 0.5\n[[kernel.members]]\nvariant = \"grad_n\"\nweight = 0.5",
    );
    let c = parse_config_str(&combo).unwrap();
    assert_eq!(c.kernel.members.len(), 2);
    assert_eq!(
        c.kernel,
        parse_kernel_expr("0.5*biot_savart+0.5*grad_n").unwrap()
    );

    let third = fourier.replace("c2cos = [0.15915494309189535]", "c2cos = [0.1]\nc2sin = []");
    assert!(parse_config_str(&third).is_ok());
    let grad = DISC.replace("biot_savart", "grad_n");
    assert!(parse_config_str(&grad).is_ok());
    let stray = DISC.replace(
        "variant = \"biot_savart\"",
        "variant = \"biot_savart\"\nweight = 2.0",
    );
    assert!(parse_config_str(&stray).is_err());
}

#[test]
fn simulate_disc_keeps_the_area() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "disc.toml", DISC);
    let out = tmp.path().join("run");
    let o = bin()
        .arg("simulate")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_diagnostics_file(&out.join("diagnostics.csv")).unwrap();
    assert_eq!(records.len(), 101);
    for r in &records {
        assert!((r.area - PI).abs() < 1e-7, "area {} at t={}", r.area, r.t);
    }
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.guard_events.is_empty());
    assert_eq!(manifest.steps, 100);
    assert_eq!(manifest.config, parse_config(&cfg).unwrap());
    assert!(manifest.fitted.gronwall_constant.is_some());
}

fn run_to(dir: &Path, cfg: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = bin()
        .arg("simulate")
        .arg(cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[shape]
preset = "perturbed_circle"
epsilon = 0.1
m = 3
n = 64

[kernel]
variant = "biot_savart"

[evolution]
dt = 1e-2
t_final = 0.2
record_every = 5
snapshot_every = 5
"#;
    let cfg = write(tmp.path(), "p.toml", text);
    let a = run_to(tmp.path(), &cfg, "a");
    let b = run_to(tmp.path(), &cfg, "b");
    assert_eq!(
        fs::read(a.join("diagnostics.csv")).unwrap(),
        fs::read(b.join("diagnostics.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
    let (sa, sb) = (files(&a.join("snapshots")), files(&b.join("snapshots")));
    assert_eq!(sa.len(), 5);
    for (x, y) in sa.iter().zip(&sb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn diagnose_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[shape]
preset = "ellipse"
a = 1.5
b = 1.0
n = 64

[kernel]
variant = "linear_combination"
[[kernel.members]]
variant = "biot_savart"
weight = 0.5
[[kernel.members]]
variant = "grad_n"
weight = 0.5

[evolution]
dt = 1e-2
t_final = 0.3
record_every = 3
snapshot_every = 3
resample_every = 15
"#;
    let cfg = write(tmp.path(), "e.toml", text);
    let run = run_to(tmp.path(), &cfg, "run");
    let o = bin().arg("diagnose").arg(&run).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let stored = read_diagnostics_file(&run.join("diagnostics.csv")).unwrap();
    let again = read_diagnostics_file(&run.join("diagnostics_recomputed.csv")).unwrap();
    assert_eq!(stored.len(), again.len());
    for (s, r) in stored.iter().zip(&again) {
        assert_eq!(s.t, r.t);
        for (x, y) in [
            (s.area, r.area),
            (s.b, r.b),
            (s.holder, r.holder),
            (s.q, r.q),
            (s.sup_grad_v, r.sup_grad_v),
            (s.max_speed, r.max_speed),
            (s.gronwall_rhs, r.gronwall_rhs),
            (s.area_flux, r.area_flux),
        ] {
            assert!(
                (x - y).abs() <= 1e-12 * x.abs().max(1.0),
                "{x} vs {y} at t={}",
                s.t
            );
        }
    }
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.resample_events.len(), 1);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let text =
        DISC.replace("t_final = 1.0", "t_final = 0.05") + "\n[output]\ndirectory = \"ignored\"\n";
    let cfg = write(tmp.path(), "disc.toml", &text);
    let target = tmp.path().join("from_env");
    let o = bin()
        .current_dir(tmp.path())
        .env(OUTPUT_ENV, &target)
        .arg("simulate")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("diagnostics.csv").exists());
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(
        tmp.path(),
        "bad.toml",
        &DISC.replace("dt = 1e-2", "dt = -1.0"),
    );
    let o = bin().arg("simulate").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config_error"));

    // a step far beyond the marker-travel limit halts the run at once
    let halting = DISC.replace("dt = 1e-2", "dt = 0.5");
    let cfg = write(tmp.path(), "halt.toml", &halting);
    let out = tmp.path().join("halt");
    let o = bin()
        .arg("simulate")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("guard_halt"));
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.guard_events.len(), 1);
    let json = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(json.contains("\"code\": \"cfl\""));
    assert_eq!(
        read_diagnostics_file(&out.join("diagnostics.csv"))
            .unwrap()
            .len(),
        1
    );

    let o = bin()
        .args([
            "tstar",
            "--shape",
            "circle",
            "--point",
            "1,0",
            "--kernel-entry",
            "bs33",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tstar_on_the_circle() {
    let o = bin()
        .args([
            "tstar",
            "--shape",
            "circle",
            "--point",
            "1,0",
            "--kernel-entry",
            "bs11",
        ])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,value,running_sup"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 40);
    for w in rows.windows(2) {
        assert!(w[1][0] < w[0][0]);
        assert!(w[1][2] >= w[0][2]);
    }
    assert!(rows.iter().all(|r| r[2].is_finite() && r[2] < 1e-6));

    // off-diagonal entry at an interior point of the disc: the truncated
    // integral of a zero-mean kernel over a disc centred away from x
    let o = bin()
        .args([
            "tstar",
            "--shape",
            "circle",
            "--point",
            "0.5,0",
            "--kernel-entry",
            "bs12",
            "--n-eps",
            "8",
        ])
        .output()
        .unwrap();
    assert!(o.status.success());
    let last: Vec<f64> = stdout(&o)
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(last[2].is_finite() && last[2] > 0.0);
}

#[test]
fn verify_lemma1_on_the_circle() {
    let o = bin()
        .args(["verify-lemma1", "--shape", "circle", "--gamma", "0.5"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["ratio"].as_f64().unwrap() - 0.5).abs() < 1e-3);
    assert!((v["bound"].as_f64().unwrap() - 2f64.powf(3.25)).abs() < 1e-12);
    assert_eq!(v["status"], "PASS");

    let o = bin()
        .args(["verify-lemma1", "--shape", "circle", "--gamma", "1.5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extend_writes_the_probe_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ext.csv");
    let o = bin()
        .args([
            "extend", "--shape", "ellipse", "--a", "2", "--b", "1", "--n", "64", "--grid", "12",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,phi,gphi1,gphi2,g1,g2,divg_fd"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 144);
    for r in &rows {
        // g is the rotated gradient of phi
        assert_eq!((r[5], r[6]), (r[4], -r[3]));
        assert!(r[7].abs() < 1e-3, "div {}", r[7]);
    }
}

#[test]
fn commutator_check_reports_per_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c.json");
    let o = bin()
        .args([
            "commutator-check",
            "--shape",
            "ellipse",
            "--a",
            "2",
            "--b",
            "1",
            "--n",
            "64",
            "--stride",
            "16",
            "--angular-nodes",
            "256",
            "--gauss-order",
            "6",
            "--kernel",
            "biot_savart",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 4);
    assert!(v["max_discrepancy"].as_f64().unwrap() < 5e-2);
    assert_eq!(v["passed"], true);
}

#[test]
fn emit_plots_references_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DISC.replace("t_final = 1.0", "t_final = 0.05\nsnapshot_every = 5");
    let cfg = write(tmp.path(), "disc.toml", &text);
    let run = run_to(tmp.path(), &cfg, "run");
    let o = bin().arg("emit-plots").arg(&run).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let script = fs::read_to_string(run.join("plots.gp")).unwrap();
    assert!(script.contains("set datafile separator ','"));
    assert!(script.contains("'diagnostics.csv' using 1:2"));
    assert!(script.contains("snapshots/snapshot_000005_t"));
}
