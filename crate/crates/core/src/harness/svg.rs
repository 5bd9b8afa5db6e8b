//! Minimal SVG line charts (log-scale y), so convergence plots are
//! inspectable without external tooling.

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

/// Render series as a log-y chart. Non-positive y values are clamped to the
/// smallest positive value present.
pub fn log_line_chart(title: &str, series: &[Series<'_>]) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 480.0, 70.0, 20.0, 40.0, 50.0);
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            if y > 0.0 {
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 1e-1;
        y_max = 1.0;
    }
    if y_min == y_max {
        y_max = y_min * 10.0;
    }
    let (ly0, ly1) = (y_min.log10().floor(), y_max.log10().ceil());
    let px = |x: f64| ml + (x - x_min) / (x_max - x_min).max(1e-300) * (w - ml - mr);
    let py = |y: f64| {
        let ly = y.max(y_min).log10();
        h - mb - (ly - ly0) / (ly1 - ly0).max(1e-9) * (h - mt - mb)
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    ));
    // y grid lines per decade
    let mut d = ly0;
    while d <= ly1 + 1e-9 {
        let y = py(10f64.powf(d));
        out.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e{}</text>\n",
            w - mr,
            ml - 6.0,
            y + 4.0,
            d as i64
        ));
        d += 1.0;
    }
    // axes
    out.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        h - mb,
        h - mb,
        w - mr,
        h - mb
    ));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(_, y)| y.is_finite())
            .enumerate()
            .map(|(j, &(x, y))| {
                format!("{}{:.1},{:.1}", if j == 0 { "M" } else { "L" }, px(x), py(y))
            })
            .collect();
        out.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            path.join(" "),
            w - mr - 150.0,
            mt + 16.0 * (i as f64 + 1.0),
            xml_escape(s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
