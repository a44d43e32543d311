//! SVG rendering of an e-value path on a log scale.

use crate::fail::Failure;

pub const TRAJECTORY_HEADER: &str = "n,statistic,log10_e,e,rejected";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub n: u64,
    pub log10_e: f64,
    pub rejected: bool,
}

/// Parses a trajectory file written by `run`.
pub fn parse_trajectory(text: &str) -> Result<Vec<PlotPoint>, Failure> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Failure::data(format!("trajectory header: {e}")))?;
    if headers.iter().collect::<Vec<_>>().join(",") != TRAJECTORY_HEADER {
        return Err(Failure::data(format!("trajectory header must be '{TRAJECTORY_HEADER}'")));
    }
    let mut points: Vec<PlotPoint> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Failure::data(format!("row {row}: {e}")))?;
        let bad = |what: &str| Failure::data(format!("row {row}: malformed {what}"));
        let n: u64 = rec[0].parse().map_err(|_| bad("n"))?;
        let log10_e: f64 = rec[2].parse().map_err(|_| bad("log10_e"))?;
        let rejected = match &rec[4] {
            "true" => true,
            "false" => false,
            _ => return Err(bad("rejected")),
        };
        if points.last().is_some_and(|p| p.n >= n) {
            return Err(Failure::data(format!("row {row}: n is not increasing")));
        }
        points.push(PlotPoint { n, log10_e, rejected });
    }
    if points.is_empty() {
        return Err(Failure::data("empty trajectory"));
    }
    Ok(points)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 48.0;

fn nice_step(span: f64, max_ticks: f64) -> f64 {
    let raw = (span / max_ticks).max(1e-12);
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= max_ticks).unwrap_or(10.0 * mag)
}

/// Standalone SVG; identical input gives identical output.
pub fn render(points: &[PlotPoint], alpha: f64) -> String {
    let threshold = (1.0 / alpha).log10();
    let finite = points.iter().map(|p| p.log10_e).filter(|v| v.is_finite());
    let lo = finite.clone().fold(0.0f64, f64::min).min(threshold);
    let hi = finite.fold(0.0f64, f64::max).max(threshold);
    let (y_min, y_max) = ((lo - 0.25).floor(), (hi + 0.25).ceil());
    let n_max = points.iter().map(|p| p.n).max().unwrap_or(1).max(1) as f64;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |n: f64| LEFT + plot_w * n / n_max;
    let sy = |v: f64| TOP + plot_h * (y_max - v.clamp(y_min, y_max)) / (y_max - y_min);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!("<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">e-value (log scale)</text>\n",
        LEFT + plot_w / 2.0
    ));

    // axes and ticks
    svg.push_str(&format!(
        "<path d=\"M{LEFT:.2},{TOP:.2} V{:.2} H{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
        TOP + plot_h,
        LEFT + plot_w
    ));
    let y_step = nice_step(y_max - y_min, 8.0).max(1.0);
    let mut k = (y_min / y_step).ceil() * y_step;
    while k <= y_max + 1e-9 {
        let y = sy(k);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{}</text>\n",
            LEFT,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            k as i64
        ));
        k += y_step;
    }
    let x_step = nice_step(n_max, 10.0).max(1.0);
    let mut t = 0.0;
    while t <= n_max + 1e-9 {
        let x = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            t as u64
        ));
        t += x_step;
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">n</text>\n",
        LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    ));

    // threshold 1/α
    let yt = sy(threshold);
    svg.push_str(&format!(
        "<line x1=\"{LEFT:.2}\" y1=\"{yt:.2}\" x2=\"{:.2}\" y2=\"{yt:.2}\" stroke=\"#c0392b\" stroke-dasharray=\"6,4\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#c0392b\">1/alpha = {}</text>\n",
        LEFT + plot_w,
        LEFT + plot_w - 4.0,
        yt - 5.0,
        crate::format::g17(1.0 / alpha)
    ));

    // path, starting from e = 1 at n = 0
    let mut coords = vec![format!("{:.2},{:.2}", sx(0.0), sy(0.0))];
    coords.extend(points.iter().filter(|p| !p.log10_e.is_nan()).map(|p| format!("{:.2},{:.2}", sx(p.n as f64), sy(p.log10_e))));
    svg.push_str(&format!("<polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\"/>\n", coords.join(" ")));

    if let Some(p) = points.iter().find(|p| p.rejected) {
        let (x, y) = (sx(p.n as f64), sy(p.log10_e));
        svg.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"#c0392b\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#c0392b\">first crossing n = {}</text>\n",
            x + 6.0,
            y - 6.0,
            p.n
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
