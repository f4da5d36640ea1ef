//! SVG heat maps of field slices.

use std::fmt::Write as _;

use crate::solver::FieldSlice;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Color by `log10 |E|` over the top `decades` decades instead of linearly.
    pub log_decades: Option<f64>,
    /// Pixels per sample.
    pub pixel: f64,
    pub title: Option<String>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            log_decades: Some(3.0),
            pixel: 3.0,
            title: None,
        }
    }
}

fn hex(c: colorous::Color) -> String {
    format!("#{:02x}{:02x}{:02x}", c.r, c.g, c.b)
}

/// Map a value to `[0, 1]` on the chosen scale.
fn unit(value: f64, max: f64, log_decades: Option<f64>) -> f64 {
    if !(max > 0.0) {
        return 0.0;
    }
    match log_decades {
        Some(d) if d > 0.0 => {
            if value <= 0.0 {
                return 0.0;
            }
            ((value / max).log10() / d + 1.0).clamp(0.0, 1.0)
        }
        _ => (value / max).clamp(0.0, 1.0),
    }
}

/// Heat map of `|E|` with viridis colors, a color bar and min/max labels.
/// Rows are drawn with `v` increasing upward.
pub fn render_svg(slice: &FieldSlice, options: &RenderOptions) -> String {
    let nu = slice.u.len();
    let nv = slice.v.len();
    let px = options.pixel;
    let (w, h) = (nu as f64 * px, nv as f64 * px);
    let (margin, bar) = (60.0, 20.0);
    let total_w = w + 2.0 * margin + bar + 60.0;
    let total_h = h + 2.0 * margin;
    let max = slice.max();
    let min = slice.min();
    let ramp = colorous::VIRIDIS;
    let color = |v: f64| hex(ramp.eval_continuous(unit(v, max, options.log_decades)));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = options.title.clone().unwrap_or_else(|| {
        format!("|E| on {}={} um", slice.axis, slice.position)
    });
    let _ = writeln!(s, r#"<text x="{margin}" y="{}">{}</text>"#, margin - 20.0, escape(&title));
    let _ = writeln!(s, r#"<g transform="translate({margin},{margin})" shape-rendering="crispEdges">"#);
    for (iv, row) in slice.values.iter().enumerate() {
        let y = (nv - 1 - iv) as f64 * px;
        // Merge runs of identical color to keep the file small.
        let mut iu = 0;
        while iu < nu {
            let c = color(row[iu]);
            let mut end = iu + 1;
            while end < nu && color(row[end]) == c {
                end += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{y}" width="{}" height="{px}" fill="{c}"/>"#,
                iu as f64 * px,
                (end - iu) as f64 * px
            );
            iu = end;
        }
    }
    let _ = writeln!(s, "</g>");

    // Axis labels and extents.
    let (u0, u1) = (slice.u[0], slice.u[nu - 1]);
    let (v0, v1) = (slice.v[0], slice.v[nv - 1]);
    let _ = writeln!(s, r#"<text x="{margin}" y="{}">{} = {u0:.1} um</text>"#, margin + h + 18.0, slice.u_axis);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{u1:.1} um</text>"#,
        margin + w,
        margin + h + 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{} = {v0:.1}</text>"#,
        margin - 4.0,
        margin + h,
        slice.v_axis
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v1:.1}</text>"#, margin - 4.0, margin + 10.0);

    // Color bar.
    let bx = margin + w + 20.0;
    let steps = 64;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let y = margin + h * (1.0 - (k + 1) as f64 / steps as f64);
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{y:.2}" width="{bar}" height="{:.2}" fill="{}"/>"#,
            h / steps as f64 + 0.5,
            hex(ramp.eval_continuous(t))
        );
    }
    let low_label = match options.log_decades {
        Some(d) if d > 0.0 => max * 10f64.powf(-d),
        _ => 0.0,
    };
    let _ = writeln!(s, r#"<text x="{}" y="{}">max {max:.3e} V/m</text>"#, bx + bar + 4.0, margin + 10.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">{low_label:.1e}</text>"#, bx + bar + 4.0, margin + h);
    let _ = writeln!(
        s,
        r#"<text x="{margin}" y="{}">min {min:.3e} V/m, max {max:.3e} V/m{}</text>"#,
        margin + h + 36.0,
        match options.log_decades {
            Some(d) if d > 0.0 => format!(", log scale over {d} decades"),
            _ => ", linear scale".into(),
        }
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Axis;

    fn slice() -> FieldSlice {
        FieldSlice {
            axis: Axis::Y,
            position: 0.0,
            u_axis: Axis::X,
            v_axis: Axis::Z,
            u: vec![0.0, 1.0, 2.0],
            v: vec![0.0, 1.0],
            values: vec![vec![0.0, 0.0, 5.0], vec![1.0, 2.0, 10.0]],
        }
    }

    #[test]
    fn renders_with_annotations() {
        let svg = render_svg(&slice(), &RenderOptions::default());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("max 1.000e1 V/m"));
        assert!(svg.contains("min 0.000e0 V/m"));
        // Zero field is the bottom of the ramp.
        assert!(svg.contains(&hex(colorous::VIRIDIS.eval_continuous(0.0))));
    }

    #[test]
    fn scale_mapping() {
        assert_eq!(unit(10.0, 10.0, None), 1.0);
        assert_eq!(unit(5.0, 10.0, None), 0.5);
        assert_eq!(unit(0.0, 10.0, Some(3.0)), 0.0);
        assert!((unit(0.1, 10.0, Some(3.0)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(unit(1.0, 0.0, None), 0.0);
    }
}
