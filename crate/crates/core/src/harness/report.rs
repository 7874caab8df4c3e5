use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::run::BerCurve;
use crate::error::Result;

pub const CURVES_HEADER: &str = "scenario,format,sideband,fiber_km,dcm,osnr_db,errors,bits,ber,valid";
pub const COMPARISON_HEADER: &str = "scenario,rosnr_db,status";

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// One row per measured point.
pub fn curves_csv(curves: &[BerCurve]) -> String {
    let mut s = String::from(CURVES_HEADER);
    s.push('\n');
    for c in curves {
        let sc = &c.scenario;
        for p in &c.points {
            let ber = p.ber.map(|b| format!("{b:e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                sc.id,
                sc.format.name(),
                sc.sideband.name(),
                num(sc.fiber_km),
                sc.dcm,
                num(p.osnr_db),
                p.errors,
                p.bits,
                ber,
                p.valid
            );
        }
    }
    s
}

/// One row per scenario with its ROSNR at the BER target.
pub fn comparison_csv(curves: &[BerCurve]) -> String {
    let mut s = String::from(COMPARISON_HEADER);
    s.push('\n');
    for c in curves {
        let r = c.rosnr_db.map(|r| format!("{r:.3}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", c.scenario.id, r, c.status.name());
    }
    s
}

/// Gnuplot script plotting log10 BER against OSNR for every scenario.
pub fn gnuplot_script(curves: &[BerCurve], csv_name: &str, target_ber: f64) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale y\nset format y '10^{%L}'\n");
    s.push_str("set xlabel 'OSNR (dB / 0.1 nm)'\nset ylabel 'BER'\nset key outside right\nset grid\n");
    s.push_str("set terminal pngcairo size 1000,640\nset output 'ber_curves.png'\n");
    let _ = writeln!(s, "set arrow from graph 0, first {target_ber:e} to graph 1, first {target_ber:e} nohead dt 2");
    s.push_str("plot \\\n");
    let n = curves.len();
    for (i, c) in curves.iter().enumerate() {
        let id = &c.scenario.id;
        let _ = write!(
            s,
            "  '{csv_name}' using (strcol(1) eq '{id}' && strcol(10) eq 'true' && $9 > 0 ? $6 : 1/0):9 with linespoints title '{id}'"
        );
        s.push_str(if i + 1 < n { ", \\\n" } else { "\n" });
    }
    s
}

/// Writes `ber_curves.csv`, `rosnr.csv` and `ber_curves.gp` into `dir`.
pub fn write_outputs(dir: &Path, curves: &[BerCurve], target_ber: f64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files = [
        ("ber_curves.csv", curves_csv(curves)),
        ("rosnr.csv", comparison_csv(curves)),
        ("ber_curves.gp", gnuplot_script(curves, "ber_curves.csv", target_ber)),
    ];
    let mut out = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        out.push(p);
    }
    Ok(out)
}
