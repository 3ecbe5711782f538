//! Accuracy curves as a standalone SVG: main task dotted, backdoor solid,
//! cumulative backdoor mean in green.

use std::fmt::Write as _;

/// Legend label, stroke colour, dash pattern and the column to plot.
type Series = (&'static str, &'static str, &'static str, fn(&RoundReport) -> f64);

use super::report::RoundReport;

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_curves(title: &str, reports: &[RoundReport]) -> String {
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let max_round = reports.last().map(|r| r.round.max(1)).unwrap_or(1) as f64;
    let x = |round: usize| LEFT + plot_w * round as f64 / max_round;
    let y = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );

    // axes and gridlines
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#ddd"/><text x="{2:.1}" y="{3:.1}" text-anchor="end">{v:.1}</text>"##,
            y(v),
            W - RIGHT,
            LEFT - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{0:.1}" stroke="black"/><line x1="{LEFT}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    let ticks = 5usize;
    for i in 0..=ticks {
        let round = (max_round * i as f64 / ticks as f64).round() as usize;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{round}</text>"#,
            x(round),
            H - BOTTOM + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">round</text>"#,
        LEFT + plot_w / 2.0,
        H - 10.0
    );

    let series: [Series; 3] = [
        ("main task", "#1f4e9c", "2,3", |r| r.main_accuracy),
        ("backdoor", "#c0392b", "", |r| r.backdoor_accuracy),
        ("backdoor cumulative mean", "#2e8b3a", "", |r| r.cumulative_mean_backdoor),
    ];
    for (i, (label, color, dash, f)) in series.iter().enumerate() {
        if !reports.is_empty() {
            let points: Vec<String> = reports
                .iter()
                .map(|r| format!("{:.2},{:.2}", x(r.round), y(f(r))))
                .collect();
            let dash_attr = if dash.is_empty() {
                String::new()
            } else {
                format!(r#" stroke-dasharray="{dash}""#)
            };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{}"/>"#,
                points.join(" ")
            );
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = W - RIGHT - 200.0;
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash_attr}/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_three_series() {
        let reports: Vec<RoundReport> = (0..4)
            .map(|t| RoundReport {
                round: t,
                main_accuracy: 0.2 * t as f64,
                backdoor_accuracy: 0.5,
                cumulative_mean_backdoor: 0.5,
                adversary_count: 0,
                benign_norm_p50: None,
                benign_norm_p90: None,
                attacker_norm: None,
            })
            .collect();
        let svg = render_curves("a <b>", &reports);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("a &lt;b&gt;"));
        assert!(render_curves("empty", &[]).ends_with("</svg>\n"));
    }
}
