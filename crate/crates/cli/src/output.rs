//! CSV and SVG emission.
//!
//! CSV floats are written with 17 significant digits so that every value
//! round-trips; rows end in LF.

use std::fmt::Write as _;

/// 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Comma-separated table with a header row.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Csv {
            writer,
            width: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.width, "row width");
        self.writer
            .write_record(values.iter().map(|&v| fmt_f64(v)))
            .expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("ascii output")
    }
}

/// Parse a numeric CSV with a header row into (header, rows).
pub fn parse_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().ok()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.ok()?;
        rows.push(rec.iter().map(|c| c.parse().ok()).collect::<Option<Vec<f64>>>()?);
    }
    Some((header, rows))
}

/// One polyline of a chart.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal line chart on a fixed 640x420 viewport. Series sharing a label
/// prefix up to the first space get the same colour.
pub fn line_chart(title: &str, x_range: (f64, f64), y_range: (f64, f64), series: &[Series]) -> String {
    let (x0, x1) = x_range;
    let (y0, y1) = y_range;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="{anchor}">{}</text>"#,
            px(v),
            HEIGHT - MARGIN + 15.0,
            short(v)
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            py(v) + 4.0,
            short(v)
        );
    }
    let mut groups: Vec<&str> = Vec::new();
    for (k, ser) in series.iter().enumerate() {
        let group = ser.label.split(' ').next().unwrap_or("");
        let ci = match groups.iter().position(|g| *g == group) {
            Some(i) => i,
            None => {
                groups.push(group);
                groups.len() - 1
            }
        };
        let colour = COLOURS[ci % COLOURS.len()];
        let points: Vec<String> = ser
            .xs
            .iter()
            .zip(&ser.ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y.clamp(y0, y1))))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="11" fill="{colour}">{}</text>"#,
            MARGIN + 8.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn short(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{s}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[1.0, 2.0]);
        c.row(&[0.1, -3.0]);
        let text = c.finish();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let (h, rows) = parse_csv(&text).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![0.1, -3.0]]);
    }

    #[test]
    fn chart_is_well_formed() {
        let svg = line_chart(
            "a < b",
            (0.0, 1.0),
            (0.0, 1.0),
            &[Series {
                label: "x".into(),
                xs: vec![0.0, 1.0],
                ys: vec![0.0, 2.0],
                dashed: true,
            }],
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("590.00,50.00"));
    }
}
