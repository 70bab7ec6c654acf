//! CSV rows and the SVG line plot.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;
use pressure_lab_core::combinatorics::TecSizeReport;
use pressure_lab_core::pressure::PressureCurve;
use serde::Serialize;

#[derive(Debug, Serialize)]
struct CurveRow {
    t: f64,
    p_tilde: f64,
    atomic: f64,
    p: f64,
    tree_est_raw: f64,
    engine_gap: f64,
}

pub const CURVE_COLUMNS: [&str; 6] = ["t", "p_tilde", "atomic", "p", "tree_est_raw", "engine_gap"];
pub const TEC_COLUMNS: [&str; 3] = ["size", "instances", "violations"];

pub fn write_curve_csv<W: Write>(curve: &PressureCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &curve.points {
        w.serialize(CurveRow {
            t: p.t,
            p_tilde: p.p_tilde,
            atomic: p.atomic,
            p: p.p,
            tree_est_raw: p.tree_est_raw,
            engine_gap: p.engine_gap,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tec_csv<W: Write>(rows: &[TecSizeReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Hidden branch and atomic line against `t`, with a dashed marker at the first kink.
pub fn curve_svg(curve: &PressureCurve) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 48.0;
    let ts: Vec<f64> = curve.points.iter().map(|p| p.t).collect();
    let ys: Vec<f64> = curve.points.iter().flat_map(|p| [p.p_tilde, p.atomic]).collect();
    let (t0, t1) = (ts.iter().cloned().fold(f64::INFINITY, f64::min), ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = (ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let sx = |t: f64| PAD + (t - t0) / span(t0, t1) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / span(y0, y1) * (H - 2.0 * PAD);
    let path = |f: &dyn Fn(usize) -> f64| -> String {
        curve
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, sx(p.t), sy(f(i))))
            .collect()
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} L{PAD},{} L{},{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">t [{t0}, {t1}]</text>"#, W / 2.0 - 40.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="8" y="{}" font-size="12">P [{y0:.4}, {y1:.4}]</text>"#, PAD - 16.0);
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        path(&|i| curve.points[i].p_tilde)
    );
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="firebrick" stroke-width="2"/>"#,
        path(&|i| curve.points[i].atomic)
    );
    if let Some(tc) = curve.transition.as_ref().and_then(|v| v.t_c) {
        let x = sx(tc);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
            H - PAD
        );
    }
    s.push_str("</svg>\n");
    s
}
