//! Static SVG figures: Pareto-front projections colored by second and the
//! per-second metric series.

use std::fmt::Write as _;

use crate::temporal::SecondResult;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Linear or log10 mapping of a data range onto a pixel span.
#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64> + Clone) -> Scale {
        let finite = values.filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Scale { lo: 0.0, hi: 1.0, log: false };
        }
        let log = lo > 0.0 && hi / lo > 1e3;
        let (lo, hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        let (lo, hi) = if hi > lo {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            (lo - pad, hi + pad)
        };
        Scale { lo, hi, log }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in [0, 1] with labels, on multiples of a 1-2-5 step
    /// (whole decades on a log axis).
    fn ticks(&self) -> Vec<(f64, String)> {
        let span = self.hi - self.lo;
        let step = if self.log { nice_step(span / 5.0).max(1.0) } else { nice_step(span / 5.0) };
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last)
            .map(|k| {
                let t = k as f64 * step;
                let label = if self.log { format!("1e{}", t.round()) } else { tick_label(t) };
                ((t - self.lo) / span, label)
            })
            .collect()
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Color for position `t` in [0, 1] along a blue-to-yellow ramp.
fn ramp(t: f64) -> String {
    let stops = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let x = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (x.floor() as usize).min(stops.len() - 2);
    let f = x - i as f64;
    let mix = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    let (a, b) = (stops[i], stops[i + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Panel {
    x0: f64,
    y0: f64,
    sx: Scale,
    sy: Scale,
}

impl Panel {
    fn px(&self, v: f64) -> f64 {
        self.x0 + MARGIN_L + self.sx.unit(v) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, v: f64) -> f64 {
        self.y0 + PANEL_H - MARGIN_B - self.sy.unit(v) * (PANEL_H - MARGIN_T - MARGIN_B)
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (self.x0 + MARGIN_L, self.x0 + PANEL_W - MARGIN_R);
        let (t, b) = (self.y0 + MARGIN_T, self.y0 + PANEL_H - MARGIN_B);
        let _ = writeln!(
            out,
            r##"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
            r - l,
            b - t
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
            (l + r) / 2.0,
            self.y0 + 18.0,
            escape(title)
        );
        for (u, label) in self.sx.ticks() {
            let x = l + u * (r - l);
            let _ = writeln!(out, r##"<line x1="{x:.1}" y1="{b:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/>"##, b + 4.0);
            let _ = writeln!(
                out,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="9">{label}</text>"#,
                b + 15.0
            );
        }
        for (u, label) in self.sy.ticks() {
            let y = b - u * (b - t);
            let _ = writeln!(out, r##"<line x1="{:.1}" y1="{y:.1}" x2="{l:.1}" y2="{y:.1}" stroke="#444"/>"##, l - 4.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9">{label}</text>"#,
                l - 6.0,
                y + 3.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
            (l + r) / 2.0,
            b + 32.0,
            escape(xlabel)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            self.x0 + 14.0,
            (t + b) / 2.0,
            self.x0 + 14.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

const OBJECTIVE_LABELS: [&str; 3] = ["f1 average delay (s)", "f2 load variance", "f3 mean 1/SINR"];

/// Rank-0 sets of every second projected onto the (f1,f2), (f1,f3) and
/// (f2,f3) planes, colored from the first second (dark) to the last (light).
pub fn front_svg(results: &[SecondResult], title: &str) -> String {
    let points: Vec<(u32, [f64; 4])> = results
        .iter()
        .flat_map(|r| r.pareto_front.iter().map(move |m| (r.second_index, m.objectives.values())))
        .collect();
    let first = results.first().map_or(0, |r| r.second_index);
    let last = results.last().map_or(1, |r| r.second_index).max(first + 1);
    let scales: Vec<Scale> = (0..3).map(|m| Scale::fit(points.iter().map(move |p| p.1[m]))).collect();
    let mut body = String::new();
    let _ = writeln!(body, r#"<text x="12" y="18" font-size="14">{}</text>"#, escape(title));
    for (k, (a, b)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
        let panel = Panel {
            x0: k as f64 * PANEL_W,
            y0: 20.0,
            sx: scales[a],
            sy: scales[b],
        };
        panel.frame(&mut body, &format!("{} vs {}", &OBJECTIVE_LABELS[b][..2], &OBJECTIVE_LABELS[a][..2]), OBJECTIVE_LABELS[a], OBJECTIVE_LABELS[b]);
        for (second, v) in &points {
            let t = f64::from(second - first) / f64::from(last - first);
            let _ = writeln!(
                body,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2.6" fill="{}" fill-opacity="0.8"/>"#,
                panel.px(v[a]),
                panel.py(v[b]),
                ramp(t)
            );
        }
    }
    // color bar
    let (bx, by, bw) = (3.0 * PANEL_W - 250.0, PANEL_H + 32.0, 200.0);
    for i in 0..50 {
        let _ = writeln!(
            body,
            r#"<rect x="{:.1}" y="{by:.1}" width="{:.1}" height="10" fill="{}"/>"#,
            bx + bw * f64::from(i) / 50.0,
            bw / 50.0 + 0.5,
            ramp(f64::from(i) / 49.0)
        );
    }
    let _ = writeln!(body, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">second {first}</text>"#, bx - 4.0, by + 9.0);
    let _ = writeln!(body, r#"<text x="{:.1}" y="{:.1}" font-size="10">{last}</text>"#, bx + bw + 4.0, by + 9.0);
    document(3.0 * PANEL_W, PANEL_H + 55.0, &body)
}

const METRIC_TITLES: [&str; 4] = [
    "Average delay (s)",
    "Load variance",
    "Average SINR (linear)",
    "Path stability (f4)",
];

fn metric(r: &SecondResult, k: usize) -> f64 {
    let m = &r.metrics;
    [m.avg_delay_s, m.load_variance, m.avg_sinr, m.path_stability][k]
}

/// The four representative metrics against time, one line per labeled run.
pub fn metrics_svg(runs: &[(String, &[SecondResult])]) -> String {
    let mut body = String::new();
    let seconds = || runs.iter().flat_map(|(_, rs)| rs.iter().map(|r| f64::from(r.second_index)));
    let sx = Scale::fit(seconds());
    for k in 0..4 {
        let sy = Scale::fit(runs.iter().flat_map(|(_, rs)| rs.iter().map(move |r| metric(r, k))));
        let panel = Panel {
            x0: (k % 2) as f64 * PANEL_W,
            y0: (k / 2) as f64 * PANEL_H,
            sx,
            sy,
        };
        panel.frame(&mut body, METRIC_TITLES[k], "second", "");
        for (i, (_, rs)) in runs.iter().enumerate() {
            let pts: Vec<String> = rs
                .iter()
                .map(|r| format!("{:.1},{:.1}", panel.px(f64::from(r.second_index)), panel.py(metric(r, k))))
                .collect();
            let _ = writeln!(
                body,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                PALETTE[i % PALETTE.len()]
            );
        }
    }
    for (i, (label, _)) in runs.iter().enumerate() {
        let y = 2.0 * PANEL_H + 16.0 + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(body, r#"<line x1="80" y1="{:.1}" x2="110" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#, y - 4.0, y - 4.0);
        let _ = writeln!(body, r#"<text x="116" y="{y:.1}" font-size="11">{}</text>"#, escape(label));
    }
    document(2.0 * PANEL_W, 2.0 * PANEL_H + 20.0 + 16.0 * runs.len() as f64, &body)
}
