//! Static SVG chart of mean return against particle count, one curve per
//! solver, with ±1 SEM error bars.

use std::fmt::Write;

use crate::config::Solver;
use crate::experiment::SummaryRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_Y: f64 = 50.0;

fn color(solver: Solver) -> &'static str {
    match solver {
        Solver::Airoas => "#1f77b4",
        Solver::NoAir => "#d62728",
    }
}

fn label(solver: Solver) -> &'static str {
    match solver {
        Solver::Airoas => "with annealing",
        Solver::NoAir => "without annealing",
    }
}

/// Renders the ablation curves in `rows`. The x axis is logarithmic in the
/// particle count.
pub fn ablation_svg(rows: &[SummaryRow], title: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    if rows.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let xs: Vec<f64> = rows.iter().map(|r| (r.particles.max(1) as f64).log10()).collect();
    let (mut x_lo, mut x_hi) = extent(xs.iter().copied());
    if x_hi - x_lo < 1e-9 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let (mut y_lo, mut y_hi) = extent(rows.iter().flat_map(|r| [r.mean_return - r.sem, r.mean_return + r.sem]));
    let pad = ((y_hi - y_lo) * 0.1).max(0.5);
    y_lo -= pad;
    y_hi += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_Y + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let mut counts: Vec<usize> = rows.iter().map(|r| r.particles).collect();
    counts.sort_unstable();
    counts.dedup();
    for m in counts {
        let x = px((m.max(1) as f64).log10());
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{t:.2}" stroke="black"/><text x="{x:.2}" y="{l:.2}" text-anchor="middle">{m}</text>"#,
            b = MARGIN_Y + plot_h,
            t = MARGIN_Y + plot_h + 5.0,
            l = MARGIN_Y + plot_h + 18.0
        );
    }
    for i in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{a:.2}" y1="{v:.2}" x2="{MARGIN_LEFT}" y2="{v:.2}" stroke="black"/><text x="{t:.2}" y="{w:.2}" text-anchor="end">{y:.2}</text>"#,
            a = MARGIN_LEFT - 5.0,
            v = py(y),
            t = MARGIN_LEFT - 8.0,
            w = py(y) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">particles</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{c}" text-anchor="middle" transform="rotate(-90 18 {c})">mean discounted return</text>"#,
        c = MARGIN_Y + plot_h / 2.0
    );

    let mut legend_y = MARGIN_Y + 10.0;
    for solver in [Solver::Airoas, Solver::NoAir] {
        let mut pts: Vec<&SummaryRow> = rows.iter().filter(|r| r.solver == solver).collect();
        if pts.is_empty() {
            continue;
        }
        pts.sort_by_key(|r| r.particles);
        let c = color(solver);
        let path: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.2},{:.2}", px((r.particles.max(1) as f64).log10()), py(r.mean_return)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, path.join(" "));
        for r in &pts {
            let x = px((r.particles.max(1) as f64).log10());
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{c}"/><circle cx="{x:.2}" cy="{:.2}" r="3.5" fill="{c}"/>"#,
                py(r.mean_return - r.sem),
                py(r.mean_return + r.sem),
                py(r.mean_return)
            );
        }
        let lx = MARGIN_LEFT + plot_w + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            legend_y + 4.0,
            label(solver)
        );
        legend_y += 20.0;
    }
    svg.push_str("</svg>\n");
    svg
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
