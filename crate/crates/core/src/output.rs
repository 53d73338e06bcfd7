//! CSV snapshots, diagnostics, the SVG panel figure and the JSON run record.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{free_energy, normal_stress, PhysParams};
use crate::scenario::{RunConfig, RunOutput};
use crate::timeloop::{Grid, SimState, StepDiagnostics};

pub const SNAPSHOT_HEADER: &str = "x,h,u,sigma_xx,sigma_zz,N,stretch,free_energy";
pub const DIAGNOSTICS_HEADER: &str =
    "n,t,dt,mass,momentum,free_energy,max_dissipation_residual,worst_subcharacteristic_ratio";

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_{t:.6}.csv")
}

/// One row per cell. Floats use the shortest representation that round-trips
/// (`Debug` formatting, which switches to exponent notation for tiny values).
pub fn snapshot_csv(grid: &Grid, state: &SimState, params: &PhysParams) -> Result<String> {
    let mut out = String::with_capacity(96 * (grid.len() + 1));
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for (i, q) in state.q.iter().enumerate() {
        let p = q.to_primitive();
        let n = normal_stress(&p, params)?;
        let f = free_energy(&p, params)?;
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            grid.center(i),
            p.h,
            p.u,
            p.sxx,
            p.szz,
            n,
            p.stretch(),
            f
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn diagnostics_csv(rows: &[StepDiagnostics]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in rows {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            d.step,
            d.t,
            d.dt,
            d.mass,
            d.momentum,
            d.free_energy,
            d.max_residual,
            d.worst_subcharacteristic
        )
        .expect("writing to a String");
    }
    out
}

struct Panel<'a> {
    title: &'a str,
    initial: Vec<f64>,
    current: Vec<f64>,
}

fn polyline(xs: &[f64], ys: &[f64], map: impl Fn(f64, f64) -> (f64, f64)) -> String {
    let mut pts = String::new();
    for (&x, &y) in xs.iter().zip(ys) {
        let (px, py) = map(x, y);
        if px.is_finite() && py.is_finite() {
            write!(pts, "{px:.3},{py:.3} ").expect("writing to a String");
        }
    }
    pts.trim_end().to_string()
}

/// Four panels (`h`, `u` on top, `sigma_xx`, `sigma_zz` below) with the
/// initial condition dashed.
pub fn final_svg(grid: &Grid, initial: &SimState, last: &SimState) -> String {
    const W: f64 = 900.0;
    const H: f64 = 640.0;
    const PAD: f64 = 40.0;
    let xs = grid.centers();
    let field = |s: &SimState, f: fn(&crate::model::Primitive) -> f64| -> Vec<f64> {
        s.q.iter().map(|q| f(&q.to_primitive())).collect()
    };
    let panels = [
        Panel {
            title: "h",
            initial: field(initial, |p| p.h),
            current: field(last, |p| p.h),
        },
        Panel {
            title: "u",
            initial: field(initial, |p| p.u),
            current: field(last, |p| p.u),
        },
        Panel {
            title: "sigma_xx",
            initial: field(initial, |p| p.sxx),
            current: field(last, |p| p.sxx),
        },
        Panel {
            title: "sigma_zz",
            initial: field(initial, |p| p.szz),
            current: field(last, |p| p.szz),
        },
    ];
    let (x0, x1) = (
        grid.edges()[0],
        *grid.edges().last().expect("non-empty grid"),
    );
    let pw = W / 2.0 - 1.5 * PAD;
    let ph = H / 2.0 - 1.5 * PAD;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .expect("writing to a String");
    writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).expect("writing to a String");
    writeln!(
        svg,
        r#"<text x="{}" y="16" font-size="13" text-anchor="middle" font-family="sans-serif">t = {:.6}</text>"#,
        W / 2.0,
        last.t
    )
    .expect("writing to a String");

    for (k, panel) in panels.iter().enumerate() {
        let ox = PAD + (k % 2) as f64 * (pw + PAD);
        let oy = PAD + (k / 2) as f64 * (ph + PAD);
        let finite = panel
            .initial
            .iter()
            .chain(&panel.current)
            .copied()
            .filter(|v| v.is_finite());
        let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        if !lo.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 * (1.0 + hi.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        let margin = 0.05 * (hi - lo);
        let (lo, hi) = (lo - margin, hi + margin);
        let map = |x: f64, y: f64| {
            (
                ox + (x - x0) / (x1 - x0) * pw,
                oy + ph - (y - lo) / (hi - lo) * ph,
            )
        };
        writeln!(
            svg,
            r##"<rect x="{ox:.3}" y="{oy:.3}" width="{pw:.3}" height="{ph:.3}" fill="none" stroke="#888"/>"##
        )
        .expect("writing to a String");
        writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" font-size="12" font-family="sans-serif">{} [{:.4}, {:.4}]</text>"#,
            ox + 4.0,
            oy - 4.0,
            panel.title,
            lo,
            hi
        )
        .expect("writing to a String");
        writeln!(
            svg,
            r##"<polyline fill="none" stroke="#999" stroke-width="1" stroke-dasharray="5,4" points="{}"/>"##,
            polyline(&xs, &panel.initial, map)
        )
        .expect("writing to a String");
        writeln!(
            svg,
            r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{}"/>"##,
            polyline(&xs, &panel.current, map)
        )
        .expect("writing to a String");
    }
    svg.push_str("</svg>\n");
    svg
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes all artifacts of a successful run into `dir`.
pub fn write_run_files(dir: &Path, config: &RunConfig, out: &RunOutput) -> Result<()> {
    for snap in &out.snapshots {
        write(
            dir,
            &snapshot_file_name(snap.t),
            &snapshot_csv(&out.grid, snap, &config.params)?,
        )?;
    }
    write(dir, "diagnostics.csv", &diagnostics_csv(&out.diagnostics))?;
    write(
        dir,
        "final.svg",
        &final_svg(&out.grid, &out.initial, &out.final_state),
    )?;
    let record = json!({
        "status": "ok",
        "config": config,
        "summary": out.summary,
    });
    write(dir, "run.json", &to_pretty(&record)?)
}

/// Writes a `run.json` describing a failed run.
pub fn write_error_record(dir: &Path, config: &RunConfig, err: &Error) -> Result<()> {
    let record = json!({
        "status": "error",
        "config": config,
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        },
    });
    write(dir, "run.json", &to_pretty(&record)?)
}

fn to_pretty(v: &serde_json::Value) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}
