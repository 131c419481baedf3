//! Hand-written SVG line charts. Each chart stacks one panel per station, draws one
//! polyline per series and is a pure function of a [`ScoreTable`].

use std::fmt::Write as _;

use crate::verification::ScoreTable;

const WIDTH: f64 = 960.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

struct Series {
    label: String,
    points: Vec<(u32, f64)>,
}

struct Panel {
    title: String,
    y_label: &'static str,
    series: Vec<Series>,
}

/// MAE against lead for every scored mode, with dashed markers at `markers_h`.
pub fn mae_chart(table: &ScoreTable, max_lead_h: u32, markers_h: &[u32]) -> String {
    let modes = table.modes();
    let panels = table
        .stations()
        .into_iter()
        .map(|st| Panel {
            title: format!("{st}: MAE"),
            y_label: "MAE (°C)",
            series: modes
                .iter()
                .map(|m| Series {
                    label: m.clone(),
                    points: table.curve(&st, m),
                })
                .filter(|s| !s.points.is_empty())
                .collect(),
        })
        .collect();
    render(panels, max_lead_h, markers_h, false)
}

/// Skill of the persistence mode over each reference against lead, or `None` when the
/// table holds no skill rows.
pub fn skill_chart(table: &ScoreTable, max_lead_h: u32, markers_h: &[u32]) -> Option<String> {
    if table.skill.is_empty() {
        return None;
    }
    let refs = table.references();
    let panels = table
        .stations()
        .into_iter()
        .map(|st| Panel {
            title: format!("{st}: skill of persistence mode"),
            y_label: "skill (%)",
            series: refs
                .iter()
                .map(|r| Series {
                    label: format!("vs {r}"),
                    points: table.skill_curve(&st, r),
                })
                .filter(|s| !s.points.is_empty())
                .collect(),
        })
        .filter(|p| !p.series.is_empty())
        .collect();
    Some(render(panels, max_lead_h, markers_h, true))
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn y_range(panel: &Panel, with_zero: bool) -> (f64, f64, f64) {
    let vals = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1));
    let (mut lo, mut hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if with_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    } else {
        lo = (lo - 0.1 * (hi - lo)).max(lo.min(0.0));
    }
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn render(panels: Vec<Panel>, max_lead_h: u32, markers_h: &[u32], zero_line: bool) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {height}" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let x_max = f64::from(max_lead_h.max(1));
    for (k, panel) in panels.iter().enumerate() {
        let top = k as f64 * PANEL_H + MARGIN_T;
        let (y_lo, y_hi, step) = y_range(panel, zero_line);
        let px = |lead: f64| MARGIN_L + plot_w * lead / x_max;
        let py = |v: f64| top + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo));
        let _ = writeln!(
            svg,
            r#"<text x="{MARGIN_L}" y="{:.1}" font-size="14" font-weight="bold">{}</text>"#,
            top - 10.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_L}" y="{top:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#333"/>"##
        );
        // Horizontal grid and y tick labels.
        let n_ticks = ((y_hi - y_lo) / step).round() as i64;
        for i in 0..=n_ticks {
            let v = y_lo + i as f64 * step;
            let y = py(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                MARGIN_L + plot_w,
                MARGIN_L - 6.0,
                y + 4.0,
                format_tick(v, step)
            );
        }
        if zero_line && y_lo < 0.0 && y_hi > 0.0 {
            let y = py(0.0);
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#333"/>"##,
                MARGIN_L + plot_w
            );
        }
        // x ticks every 12 h.
        for lead in (0..=max_lead_h).step_by(12) {
            let x = px(f64::from(lead));
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{lead}</text>"##,
                top + plot_h,
                top + plot_h + 5.0,
                top + plot_h + 18.0
            );
        }
        for &m in markers_h {
            let x = px(f64::from(m));
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.1}" y1="{top:.1}" x2="{x:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="4 3"/>"##,
                top + plot_h
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">lead time (h)</text>"#,
            MARGIN_L + plot_w / 2.0,
            top + plot_h + 36.0
        );
        let (lx, ly) = (18.0, top + plot_h / 2.0);
        let _ = writeln!(
            svg,
            r#"<text x="{lx}" y="{ly:.1}" text-anchor="middle" transform="rotate(-90 {lx} {ly:.1})">{}</text>"#,
            escape(panel.y_label)
        );
        for (i, s) in panel.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|(l, v)| format!("{:.1},{:.1}", px(f64::from(*l)), py(*v)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
            let ly = top + 12.0 + 18.0 * i as f64;
            let lx = MARGIN_L + plot_w + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = (0..4)
        .find(|d| {
            let scaled = step * 10f64.powi(*d);
            (scaled - scaled.round()).abs() < 1e-9
        })
        .unwrap_or(4) as usize;
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::ScoreRow;

    fn table() -> ScoreTable {
        let mut t = ScoreTable::default();
        for (mode, base) in [("persistence", 1.0), ("reference", 1.5)] {
            for lead in [1u32, 2, 3] {
                t.rows.push(ScoreRow {
                    station: "valley".into(),
                    mode: mode.into(),
                    lead_h: lead,
                    n_cases: 10,
                    mae: base + 0.1 * f64::from(lead),
                });
            }
        }
        t
    }

    #[test]
    fn one_polyline_per_mode_and_markers() {
        let svg = mae_chart(&table(), 132, &[36, 84]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("lead time (h)"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn skill_chart_needs_skill_rows() {
        let mut t = table();
        assert!(skill_chart(&t, 132, &[]).is_none());
        t.add_skill("reference").unwrap();
        let svg = skill_chart(&t, 132, &[36]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(nice_step(1.0), 0.2);
        assert_eq!(nice_step(47.0), 10.0);
        assert_eq!(format_tick(0.4, 0.2), "0.4");
        assert_eq!(format_tick(10.0, 2.5), "10.0");
        assert_eq!(format_tick(20.0, 10.0), "20");
    }
}
