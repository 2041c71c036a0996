//! Minimal SVG line-fit plots (axes, points, fitted line). No external
//! services; figures are a convenience for eyeballing regression fits.

use crate::io::fmt_f64;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Scatter plot of `(x, y)` points with the line `y = slope * x + intercept`.
pub fn scatter_with_fit(
    points: &[(f64, f64)],
    slope: f64,
    intercept: f64,
    x_label: &str,
    y_label: &str,
    title: &str,
) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).abs().max(1e-9);
        *lo -= 0.05 * span;
        *hi += 0.05 * span;
    };
    pad(&mut x_min, &mut x_max);
    pad(&mut y_min, &mut y_max);

    let sx = (WIDTH - 2.0 * MARGIN) / (x_max - x_min);
    let sy = (HEIGHT - 2.0 * MARGIN) / (y_max - y_min);
    let px = |x: f64| MARGIN + (x - x_min) * sx;
    let py = |y: f64| HEIGHT - MARGIN - (y - y_min) * sy;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        xml_escape(y_label)
    ));
    // tick labels at the corners of the data range
    for (x, y, label) in [
        (x_min, y_min, format!("({:.3}, {:.3})", x_min, y_min)),
        (x_max, y_max, format!("({:.3}, {:.3})", x_max, y_max)),
    ] {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" \
             fill=\"gray\">{}</text>\n",
            px(x) + 4.0,
            py(y) - 4.0,
            xml_escape(&label)
        ));
    }
    // fitted line clipped to the x-range
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#c23\" \
         stroke-width=\"1.5\"/>\n",
        px(x_min),
        py(slope * x_min + intercept),
        px(x_max),
        py(slope * x_max + intercept)
    ));
    for &(x, y) in points {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#236\" fill-opacity=\"0.7\"/>\n",
            px(x),
            py(y)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"44\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" fill=\"#c23\">slope = {}</text>\n",
        WIDTH / 2.0,
        fmt_f64(slope)
    ));
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn produces_well_formed_svg() {
        let pts = vec![(1.0, 2.0), (2.0, 4.1), (3.0, 5.9)];
        let svg = scatter_with_fit(&pts, 2.0, 0.0, "x", "y", "fit <demo>");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("&lt;demo&gt;"));
    }
}
