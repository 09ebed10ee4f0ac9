//! Static SVG line charts of logged columns against time.

use std::fmt::Write as _;

use super::log::TrajectoryLog;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
/// Polyline vertex budget per series.
const MAX_POINTS: usize = 2000;

/// One line per named column, x axis from the first column.
pub fn line_chart(log: &TrajectoryLog, cols: &[&str]) -> Result<String, String> {
    if log.columns().is_empty() {
        return Err("log has no columns".into());
    }
    let x = log.column(&log.columns()[0]).unwrap_or_default();
    let series: Vec<(String, Vec<f64>)> = cols
        .iter()
        .map(|c| log.column(c).map(|v| (c.to_string(), v)).ok_or_else(|| format!("unknown column `{c}`")))
        .collect::<Result<_, _>>()?;
    if series.is_empty() {
        return Err("no columns requested".into());
    }
    let finite = |v: &[f64]| v.iter().copied().filter(|y| y.is_finite()).collect::<Vec<_>>();
    let bounds = |v: Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = bounds(finite(&x));
    let (y0, y1) = bounds(series.iter().flat_map(|(_, v)| finite(v)).collect());
    let sx = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, sx(xv), b + 15.0, tick(xv));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 4.0, sy(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 10.0, escape(&log.columns()[0]));
    let stride = x.len().div_ceil(MAX_POINTS).max(1);
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (xv, yv) in x.iter().zip(ys).step_by(stride) {
            if !(xv.is_finite() && yv.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, sx(*xv), sy(*yv));
            pen_down = true;
        }
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.2"/>"#, d.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            l + 10.0,
            t - 30.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log() -> TrajectoryLog {
        let mut log = TrajectoryLog::new(vec!["t[s]".into(), "a[m]".into(), "b[m]".into()]);
        for k in 0..10 {
            let t = k as f64 * 0.1;
            log.push_row(&[t, t * t, if k == 4 { f64::NAN } else { -t }]);
        }
        log
    }

    #[test]
    fn one_path_per_series() {
        let svg = line_chart(&log(), &["a", "b[m]"]).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("stroke-width=\"1.2\"").count(), 2);
        // The NaN sample lifts the pen once.
        let b_path = svg.lines().filter(|l| l.contains("#d62728") && l.starts_with("<path")).next().unwrap();
        assert_eq!(b_path.matches('M').count(), 2);
    }

    #[test]
    fn unknown_column_is_rejected() {
        assert!(line_chart(&log(), &["nope"]).unwrap_err().contains("nope"));
        assert!(line_chart(&log(), &[]).is_err());
    }
}
