//! Tiny hand-rolled SVG output; the CSV files are the authoritative artifacts
//! and this is a convenience view, so no plotting dependency.

use abcd_core::eval::PrCurve;

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 40.0;

fn x_px(recall: f64) -> f64 {
    MARGIN + recall * (W - 2.0 * MARGIN)
}

fn y_px(precision: f64) -> f64 {
    H - MARGIN - precision * (H - 2.0 * MARGIN)
}

/// Render a recall/precision polyline with unit axes.
pub fn pr_curve(curve: &PrCurve, title: &str) -> String {
    let mut points = String::new();
    points.push_str(&format!("{:.2},{:.2}", x_px(0.0), y_px(1.0)));
    for s in &curve.samples {
        points.push_str(&format!(" {:.2},{:.2}", x_px(s.recall), y_px(s.precision)));
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        x_px(0.0),
        y_px(0.0),
        x_px(1.0),
        y_px(0.0)
    ));
    svg.push_str(&format!(
        "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        x_px(0.0),
        y_px(0.0),
        x_px(0.0),
        y_px(1.0)
    ));
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{tick}</text>\n",
            x_px(tick),
            y_px(0.0) + 14.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{tick}</text>\n",
            x_px(0.0) - 6.0,
            y_px(tick) + 3.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        MARGIN / 2.0,
        title
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">recall</text>\n",
        W / 2.0,
        H - 8.0
    ));
    svg.push_str(&format!(
        "  <polyline points=\"{points}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str("</svg>\n");
    svg
}
