//! CSV and SVG writers with fixed formatting so that identical runs produce
//! byte-identical files.

/// One m-function sample row.
pub struct MSample {
    pub re_z: f64,
    pub im_z: f64,
    pub sheet: i32,
    pub re_m: f64,
    pub im_m: f64,
}

pub fn msamples_csv(rows: &[MSample]) -> String {
    let mut out = String::from("re_z,im_z,sheet,re_m,im_m\n");
    for r in rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{},{:.17e},{:.17e}\n",
            r.re_z, r.im_z, r.sheet, r.re_m, r.im_m
        ));
    }
    out
}

pub fn bands_csv(bands: &[(f64, f64)]) -> String {
    let mut out = String::from("band_lo,band_hi\n");
    for &(lo, hi) in bands {
        out.push_str(&format!("{lo:.17e},{hi:.17e}\n"));
    }
    out
}

/// Polylines-only SVG with a viewBox fitted to the data plus a 5% margin.
/// The vertical axis is flipped so the document matches plane coordinates.
pub fn polylines_svg(polylines: &[Vec<(f64, f64)>]) -> String {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for line in polylines {
        for &(x, y) in line {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(-y);
            ymax = ymax.max(-y);
        }
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    let mx = 0.05 * (xmax - xmin).max(1e-9);
    let my = 0.05 * (ymax - ymin).max(1e-9);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n",
        xmin - mx,
        ymin - my,
        (xmax - xmin) + 2.0 * mx,
        (ymax - ymin) + 2.0 * my
    );
    let stroke_width = 0.004 * ((xmax - xmin).max(ymax - ymin)).max(1e-9);
    for line in polylines {
        out.push_str("  <polyline fill=\"none\" stroke=\"black\" stroke-width=\"");
        out.push_str(&format!("{stroke_width:.6}"));
        out.push_str("\" points=\"");
        for (i, &(x, y)) in line.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{:.6},{:.6}", x, -y));
        }
        out.push_str("\"/>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Band diagram: one horizontal segment per band on the axis, with short
/// vertical ticks at the critical points.
pub fn band_diagram_svg(bands: &[(f64, f64)], gamma: &[f64]) -> String {
    let mut lines: Vec<Vec<(f64, f64)>> = Vec::new();
    for &(lo, hi) in bands {
        lines.push(vec![(lo, 0.0), (hi, 0.0)]);
    }
    let span = bands.last().map(|b| b.1).unwrap_or(1.0) - bands.first().map(|b| b.0).unwrap_or(0.0);
    let tick = 0.03 * span.max(1.0);
    for &g in gamma {
        lines.push(vec![(g, -tick), (g, tick)]);
    }
    polylines_svg(&lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_viewbox_has_margin() {
        let svg = polylines_svg(&[vec![(0.0, 0.0), (10.0, 0.0), (10.0, 4.0)]]);
        assert!(svg.contains("viewBox=\"-0.500000"));
        assert!(svg.contains("<polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn csv_deterministic() {
        let rows = vec![MSample {
            re_z: 1.0 / 3.0,
            im_z: 0.5,
            sheet: 1,
            re_m: -0.25,
            im_m: 2e-17,
        }];
        assert_eq!(msamples_csv(&rows), msamples_csv(&rows));
        assert!(msamples_csv(&rows).starts_with("re_z,im_z,sheet,re_m,im_m\n"));
    }
}
