//! Static SVG charts: observables against time and fidelity heatmaps.

use std::fmt::Write;

use holonome::experiments::{ObservableSeries, SweepGrid};

use crate::error::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const SERIES_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#111111"];

/// Viridis anchors, dark for low values.
const VIRIDIS: [(f64, [u8; 3]); 5] =
    [(0.0, [68, 1, 84]), (0.25, [59, 82, 139]), (0.5, [33, 145, 140]), (0.75, [94, 201, 98]), (1.0, [253, 231, 37])];

fn color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let k = VIRIDIS.windows(2).position(|w| u <= w[1].0).unwrap_or(VIRIDIS.len() - 2);
    let ((a, ca), (b, cb)) = (VIRIDIS[k], VIRIDIS[k + 1]);
    let f = (u - a) / (b - a);
    let mix = |i: usize| (ca[i] as f64 + f * (cb[i] as f64 - ca[i] as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{title}</text>"#,
        LEFT + plot_w() / 2.0
    );
}

fn plot_w() -> f64 {
    WIDTH - LEFT - RIGHT
}

fn plot_h() -> f64 {
    HEIGHT - TOP - BOTTOM
}

fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Line chart of P1, P2, P3 and F against time, one path each.
pub fn series_svg(series: &ObservableSeries, title: &str) -> Result<String> {
    if series.is_empty() {
        return Err(CliError::Config("cannot plot an empty series".into()));
    }
    let curves: [(&str, &[f64]); 4] =
        [("P1", &series.p1), ("P2", &series.p2), ("P3", &series.p3), ("F", &series.fidelity)];
    let t_max = series.times.iter().copied().fold(0.0, f64::max);
    let t_span = if t_max > 0.0 { t_max } else { 1.0 };
    let (mut y_lo, mut y_hi) = (0.0f64, 1.0f64);
    for (_, ys) in &curves {
        for &y in ys.iter() {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    let x = |t: f64| LEFT + t / t_span * plot_w();
    let y = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * plot_h();

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out);
    for k in 0..=4 {
        let t = t_span * k as f64 / 4.0;
        let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x(t),
            TOP + plot_h() + 18.0,
            short(t)
        );
        let _ =
            writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y(v) + 4.0, short(v));
    }
    axis_labels(&mut out, "t (μs)", "population / fidelity");

    for (i, (label, ys)) in curves.iter().enumerate() {
        let stroke = SERIES_COLORS[i];
        if ys.len() == 1 {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{stroke}"><title>{label}</title></circle>"#,
                x(series.times[0]),
                y(ys[0])
            );
        } else {
            let mut d = String::new();
            for (k, (&t, &v)) in series.times.iter().zip(ys.iter()).enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, x(t), y(v));
            }
            let dash = if *label == "F" { r#" stroke-dasharray="6 3""# } else { "" };
            let _ = writeln!(
                out,
                r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="2"{dash}><title>{label}</title></path>"#
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w() + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{stroke}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, lx + 30.0, ly + 4.0);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn axes(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        plot_w(),
        plot_h()
    );
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w() / 2.0,
        HEIGHT - 15.0
    );
    let cy = TOP + plot_h() / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{y_label}</text>"#
    );
}

/// Cell grid of F over (γ_m, κ) with a color legend; dark cells are low fidelity.
pub fn grid_svg(grid: &SweepGrid, title: &str) -> Result<String> {
    let (nk, ng) = (grid.kappa_values.len(), grid.gamma_values.len());
    if nk == 0 || ng == 0 || grid.fidelities.len() != nk || grid.fidelities.iter().any(|r| r.len() != ng) {
        return Err(CliError::Config("cannot plot an empty or ragged grid".into()));
    }
    let values = grid.fidelities.iter().flatten().copied();
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (cw, ch) = (plot_w() / ng as f64, plot_h() / nk as f64);

    let mut out = String::new();
    header(&mut out, title);
    for (i, row) in grid.fidelities.iter().enumerate() {
        // κ grows upward
        let y0 = TOP + plot_h() - (i + 1) as f64 * ch;
        for (j, &f) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>κ={} γ_m={} F={}</title></rect>"#,
                LEFT + j as f64 * cw,
                cw + 0.05,
                ch + 0.05,
                color((f - lo) / span),
                grid.kappa_values[i],
                grid.gamma_values[j],
                f
            );
        }
    }
    axes(&mut out);
    let ticks = |n: usize| -> Vec<usize> {
        let mut t = vec![0, n / 2, n - 1];
        t.dedup();
        t
    };
    for j in ticks(ng) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (j as f64 + 0.5) * cw,
            TOP + plot_h() + 18.0,
            short(grid.gamma_values[j])
        );
    }
    for i in ticks(nk) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            TOP + plot_h() - (i as f64 + 0.5) * ch + 4.0,
            short(grid.kappa_values[i])
        );
    }
    let unit = grid.convention.as_str();
    axis_labels(&mut out, &format!("γ_m ({unit})"), &format!("κ ({unit})"));

    let (bx, bw) = (LEFT + plot_w() + 25.0, 18.0);
    let _ = writeln!(out, r#"<defs><linearGradient id="legend" x1="0" y1="1" x2="0" y2="0">"#);
    for (stop, _) in VIRIDIS {
        let _ = writeln!(out, r#"<stop offset="{stop}" stop-color="{}"/>"#, color(stop));
    }
    let _ = writeln!(out, "</linearGradient></defs>");
    let _ = writeln!(
        out,
        r#"<rect x="{bx:.2}" y="{TOP}" width="{bw}" height="{:.2}" fill="url(#legend)" stroke="black"/>"#,
        plot_h()
    );
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, bx + bw + 5.0, TOP + 10.0, short(hi));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, bx + bw + 5.0, TOP + plot_h(), short(lo));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">F</text>"#, bx + bw / 2.0, TOP - 6.0);
    out.push_str("</svg>\n");
    Ok(out)
}
