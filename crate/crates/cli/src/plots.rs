//! Gnuplot script for the artifacts of a run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::commands::Manifest;

pub const PLOT_SCRIPT: &str = "plots.gp";

/// Writes `plots.gp` into `run_dir`; run it from that directory with
/// `gnuplot plots.gp` to get PNG figures.
pub fn write_plot_script(run_dir: &Path, manifest: &Manifest) -> anyhow::Result<PathBuf> {
    let diag = manifest.diagnostics.display();
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s);

    let series = [
        ("area", 2, "area"),
        ("bilipschitz", 3, "b(t)"),
        ("sup_grad_v", 6, "sup |grad v|"),
        ("max_speed", 7, "max marker speed"),
        ("area_flux", 9, "boundary flux"),
    ];
    for (name, col, label) in series {
        let _ = writeln!(s, "set output '{name}.png'");
        let _ = writeln!(s, "set ylabel '{label}'");
        let _ = writeln!(s, "plot '{diag}' using 1:{col} with linespoints");
        let _ = writeln!(s);
    }

    let _ = writeln!(s, "set output 'gronwall.png'");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set ylabel 'q(t)'");
    let _ = writeln!(
        s,
        "plot '{diag}' using 1:5 with linespoints title 'q', \\\n     '{diag}' using 1:8 with lines title 'Gronwall bound'"
    );
    let _ = writeln!(s, "unset logscale y");
    let _ = writeln!(s);

    if !manifest.snapshots.is_empty() {
        let _ = writeln!(s, "set output 'snapshots.png'");
        let _ = writeln!(s, "set size ratio -1");
        let _ = writeln!(s, "set xlabel 'x'");
        let _ = writeln!(s, "set ylabel 'y'");
        let plots: Vec<String> = manifest
            .snapshots
            .iter()
            .map(|e| {
                format!(
                    "'{}' using 2:3 with lines title 't = {}'",
                    e.file.display(),
                    e.t
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }

    let path = run_dir.join(PLOT_SCRIPT);
    fs::write(&path, s)?;
    Ok(path)
}
