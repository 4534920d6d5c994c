use std::fmt::Write as _;

use super::curve::CurvePoint;
use super::scenario::{categorize_scenario, ScenarioCategory, ScenarioResult};
use crate::text::{Domain, DomainSet};

/// Published full-scale numbers (BERT-base sized models, percent). Column
/// order matches the rendered table: per test domain (laptops, restaurants)
/// the in-domain, cross-domain and joint training columns, each (Acc, MF1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub name: &'static str,
    pub cells: [Option<(f64, f64)>; 6],
}

const fn c(acc: f64, mf1: f64) -> Option<(f64, f64)> {
    Some((acc, mf1))
}

pub const REFERENCE_ROWS: &[ReferenceRow] = &[
    ReferenceRow { name: "SDGCN-BERT", cells: [c(81.35, 78.34), None, None, c(83.57, 76.47), None, None] },
    ReferenceRow { name: "AEN-BERT", cells: [c(79.93, 76.31), None, None, c(83.12, 73.76), None, None] },
    ReferenceRow { name: "BERT-SPC", cells: [c(78.99, 75.03), None, None, c(84.46, 76.98), None, None] },
    ReferenceRow { name: "BERT-PT", cells: [c(78.07, 75.08), None, None, c(84.95, 76.96), None, None] },
    ReferenceRow {
        name: "XLNet-base",
        cells: [c(79.89, 77.78), c(77.78, 72.24), c(80.88, 76.92), c(85.84, 78.35), c(82.41, 72.98), c(86.15, 78.93)],
    },
    ReferenceRow {
        name: "BERT-base",
        cells: [c(77.69, 72.60), c(75.86, 70.78), c(78.81, 74.47), c(84.92, 76.93), c(80.07, 69.93), c(85.03, 77.35)],
    },
    ReferenceRow {
        name: "BERT-ADA Lapt",
        cells: [c(79.19, 74.18), c(77.92, 72.99), c(80.23, 75.77), c(85.51, 78.09), c(80.68, 72.93), c(86.22, 79.79)],
    },
    ReferenceRow {
        name: "BERT-ADA Rest",
        cells: [c(78.60, 74.09), c(76.16, 70.46), c(79.14, 74.93), c(87.14, 80.05), c(83.68, 72.91), c(87.89, 81.05)],
    },
    ReferenceRow {
        name: "BERT-ADA Joint",
        cells: [c(78.96, 74.18), c(75.91, 69.84), c(79.94, 78.74), c(86.35, 78.89), c(82.23, 73.03), c(87.69, 81.20)],
    },
];

/// The six (test, train) column slots in display order.
fn columns() -> Vec<(Domain, DomainSet, &'static str)> {
    let mut out = Vec::new();
    for d_test in Domain::ALL {
        out.push((d_test, DomainSet::from(d_test), "In"));
        out.push((d_test, DomainSet::from(d_test.other()), "Cross"));
        out.push((d_test, DomainSet::Joint, "Joint"));
    }
    out
}

const CELL: usize = 27;

fn metric(mean: f64, std: Option<f64>) -> String {
    match std {
        Some(s) => format!("{:.2}±{:.2}", 100.0 * mean, 100.0 * s),
        None => format!("{:.2}", 100.0 * mean),
    }
}

fn pad(s: &str, w: usize) -> String {
    let n = s.chars().count();
    if n >= w {
        s.to_string()
    } else {
        format!("{s}{}", " ".repeat(w - n))
    }
}

/// Text table: one row per LM domain, per test domain the In / Cross / Joint
/// training columns with Acc and MF1 in percent (mean±std). Cross-domain
/// adaptation cells are marked with `*`.
pub fn render_table(results: &[ScenarioResult], with_reference: bool) -> String {
    let cols = columns();
    let mut s = String::new();
    let _ = write!(s, "{}", pad("test domain", 16));
    for (d_test, _, _) in cols.iter().step_by(3) {
        let _ = write!(s, "| {}", pad(d_test.name(), 3 * CELL));
    }
    s.push('\n');
    let _ = write!(s, "{}", pad("train (type)", 16));
    for (i, (_, d_train, kind)) in cols.iter().enumerate() {
        let sep = if i % 3 == 0 { "| " } else { "" };
        let _ = write!(s, "{sep}{}", pad(&format!("{d_train} ({kind})"), CELL));
    }
    s.push('\n');
    let _ = write!(s, "{}", pad("LM domain", 16));
    for i in 0..cols.len() {
        let sep = if i % 3 == 0 { "| " } else { "" };
        let _ = write!(s, "{sep}{}", pad("Acc / MF1", CELL));
    }
    s.push('\n');
    s.push_str(&"-".repeat(16 + 2 * 2 + 6 * CELL));
    s.push('\n');
    for d_lm in DomainSet::ALL {
        let _ = write!(s, "{}", pad(d_lm.name(), 16));
        for (i, (d_test, d_train, _)) in cols.iter().enumerate() {
            let sep = if i % 3 == 0 { "| " } else { "" };
            let cell = results
                .iter()
                .find(|r| r.spec.d_lm == d_lm && r.spec.d_train == *d_train && r.spec.d_test == *d_test)
                .map(|r| {
                    format!("{} / {}", metric(r.accuracy_mean, r.accuracy_std), metric(r.macro_f1_mean, r.macro_f1_std))
                })
                .unwrap_or_else(|| "-".into());
            let mark = if categorize_scenario(d_lm, *d_train, *d_test) == ScenarioCategory::CrossDomainAdaptation {
                "*"
            } else {
                ""
            };
            let _ = write!(s, "{sep}{}", pad(&format!("{cell}{mark}"), CELL));
        }
        s.push('\n');
    }
    s.push_str("* cross-domain adaptation: LM finetuned on the test domain, classifier trained on the other domain\n");
    if with_reference {
        s.push_str("\npublished reference results (full-scale models, constants, not computed here)\n");
        for row in REFERENCE_ROWS {
            let _ = write!(s, "{}", pad(row.name, 16));
            for (i, cell) in row.cells.iter().enumerate() {
                let sep = if i % 3 == 0 { "| " } else { "" };
                let text = cell.map_or_else(|| "-".to_string(), |(a, m)| format!("{a:.2} / {m:.2}"));
                let _ = write!(s, "{sep}{}", pad(&text, CELL));
            }
            s.push('\n');
        }
    }
    s
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line chart of mean accuracy gain (points) against sentences seen, one
/// series per name with a shaded ±1 std band.
pub fn render_curve_svg(series: &[(String, Vec<CurvePoint>)]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 400.0, 60.0, 20.0, 20.0, 50.0);
    let pts = series.iter().flat_map(|s| s.1.iter());
    let x_max = pts.clone().map(|p| p.sentences_seen as f64).fold(1.0, f64::max);
    let lo = |p: &CurvePoint| 100.0 * (p.delta_mean - p.delta_std.unwrap_or(0.0));
    let hi = |p: &CurvePoint| 100.0 * (p.delta_mean + p.delta_std.unwrap_or(0.0));
    let mut y_min = pts.clone().map(lo).fold(0.0, f64::min);
    let mut y_max = pts.map(hi).fold(0.0, f64::max);
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let px = |x: f64| ml + (w - ml - mr) * x / x_max;
    let py = |y: f64| mt + (h - mt - mb) * (y_max - y) / (y_max - y_min);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{ml}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{:.2}" stroke="black"/>"#, h - mb);
    let _ = writeln!(
        s,
        r#"<line x1="{ml}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        py(0.0),
        w - mr,
        py(0.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">sentences seen (max {})</text>"#,
        (ml + w - mr) / 2.0,
        h - 15.0,
        x_max as u64
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {:.2})">accuracy gain (points, μ±σ)</text>"#,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    );
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{y_max:.2}</text>"#, ml - 4.0, mt + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{y_min:.2}</text>"#, ml - 4.0, h - mb);
    for (k, (name, points)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<g class="series" data-name="{}">"#, escape(name));
        let upper: Vec<String> = points.iter().map(|p| format!("{:.2},{:.2}", px(p.sentences_seen as f64), py(hi(p)))).collect();
        let lower: Vec<String> = points.iter().rev().map(|p| format!("{:.2},{:.2}", px(p.sentences_seen as f64), py(lo(p)))).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> =
            points.iter().map(|p| format!("{:.2},{:.2}", px(p.sentences_seen as f64), py(100.0 * p.delta_mean))).collect();
        let _ = writeln!(s, r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{}</text>"#,
            ml + 10.0,
            mt + 14.0 * (k + 1) as f64,
            escape(name)
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{grid, SeedMetrics};

    #[test]
    fn table_cells_and_flags() {
        let results: Vec<ScenarioResult> = grid()
            .into_iter()
            .enumerate()
            .map(|(i, spec)| {
                ScenarioResult::from_runs(spec, vec![SeedMetrics { seed: 0, accuracy: 0.5 + i as f64 / 100.0, macro_f1: 0.25 }])
            })
            .collect();
        let t = render_table(&results, true);
        for (i, _) in grid().iter().enumerate() {
            assert!(t.contains(&format!("{:.2} / 25.00", 50.0 + i as f64)));
        }
        assert_eq!(t.matches("*").count(), 3, "two flagged cells plus the legend");
        assert!(t.contains("87.14 / 80.05"));
    }

    #[test]
    fn svg_has_one_group_per_series() {
        let p = |x, d| CurvePoint { sentences_seen: x, accuracy_mean: 0.5, delta_mean: d, delta_std: Some(0.01) };
        let svg = render_curve_svg(&[
            ("laptops".into(), vec![p(0, 0.0), p(10, 0.02)]),
            ("restaurants".into(), vec![p(0, 0.0), p(10, 0.03)]),
        ]);
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert_eq!(svg.matches(r#"class="band""#).count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
