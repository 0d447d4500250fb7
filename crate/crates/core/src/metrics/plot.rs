//! Plot-data emission for ROC curves: delimited text and a static SVG.

use std::fmt::Write;

use super::roc::{auc, RocCurve};

pub struct RocSeries<'a> {
    pub label: String,
    pub curve: &'a RocCurve,
}

/// `fpr,tpr,threshold` rows; the threshold column is empty for
/// interpolated curves.
pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("fpr,tpr,threshold\n");
    for (i, (x, y)) in curve.points.iter().enumerate() {
        let t = curve
            .thresholds
            .as_ref()
            .map(|t| format!("{:?}", t[i]))
            .unwrap_or_default();
        let _ = writeln!(out, "{x:?},{y:?},{t}");
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// SVG plot of one or more ROC curves with the chance diagonal.
pub fn roc_svg(title: &str, series: &[RocSeries<'_>]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 480.0;
    const M: f64 = 56.0;
    let span = W - 2.0 * M;
    let px = |x: f64| M + x * span;
    let py = |y: f64| H - M - y * span;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#,
            px(v),
            H - M + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            M - 6.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">False Positive Rate</text>"#,
        W / 2.0,
        H - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">True Positive Rate</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        s,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let n = series.len();
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .curve
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}" text-anchor="end">{} (AUC = {:.3})</text>"#,
            W - M - 8.0,
            H - M - 8.0 - 16.0 * (n - 1 - i) as f64,
            escape(&series.label),
            auc(series.curve)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let c = RocCurve {
            points: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)],
            thresholds: Some(vec![f64::INFINITY, 0.7, 0.2]),
            positive_class: 1,
        };
        assert_eq!(
            roc_csv(&c),
            "fpr,tpr,threshold\n0.0,0.0,inf\n0.5,1.0,0.7\n1.0,1.0,0.2\n"
        );
    }

    #[test]
    fn svg_has_diagonal_and_legend() {
        let c = RocCurve {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
            thresholds: None,
            positive_class: 1,
        };
        let svg = roc_svg(
            "fold <1>",
            &[RocSeries {
                label: "fold1".into(),
                curve: &c,
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("AUC = 0.500"));
        assert!(svg.contains("fold &lt;1&gt;"));
    }
}
