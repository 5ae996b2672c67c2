//! SVG rendering of ROC CSV files.

use std::fmt::Write as _;
use std::io::Read;

use crate::error::{Error, Result};
use crate::montecarlo::ROC_CSV_HEADER;

/// One row of the ROC CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocRow {
    pub snr_db: f64,
    pub genie: bool,
    pub gamma: f64,
    pub p_fa: f64,
    pub p_d: f64,
}

/// Parses a ROC CSV. Errors name the offending line (the header is line 1).
pub fn read_roc_csv<R: Read>(input: R) -> Result<Vec<RocRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| Error::Parse(format!("line 1: {e}")))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse(format!("line 1: missing column '{name}'")))
    };
    let idx: Vec<usize> = ["snr_db", "genie", "gamma", "p_fa", "p_d"]
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    debug_assert!(ROC_CSV_HEADER.starts_with(&["snr_db", "genie", "gamma", "p_fa", "p_d"]));

    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        let field = |j: usize| {
            rec.get(idx[j])
                .map(str::trim)
                .ok_or_else(|| Error::Parse(format!("line {line}: missing field '{}'", ROC_CSV_HEADER[j])))
        };
        let num = |j: usize| -> Result<f64> {
            let s = field(j)?;
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: '{s}' is not a number")))
        };
        let genie = match field(1)? {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(Error::Parse(format!("line {line}: '{other}' is not a boolean"))),
        };
        let row = RocRow {
            snr_db: num(0)?,
            genie,
            gamma: num(2)?,
            p_fa: num(3)?,
            p_d: num(4)?,
        };
        for (name, p) in [("p_fa", row.p_fa), ("p_d", row.p_d)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parse(format!("line {line}: {name} = {p} outside [0, 1]")));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("ROC CSV has no data rows".into()));
    }
    Ok(rows)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 30.0;
const SIDE: f64 = 460.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn px(p_fa: f64) -> f64 {
    LEFT + p_fa * SIDE
}

fn py(p_d: f64) -> f64 {
    TOP + (1.0 - p_d) * SIDE
}

/// Rows grouped by `(snr_db, genie)` in order of first appearance.
pub fn group_curves(rows: &[RocRow]) -> Vec<((f64, bool), Vec<RocRow>)> {
    let mut groups: Vec<((f64, bool), Vec<RocRow>)> = Vec::new();
    for row in rows {
        let key = (row.snr_db, row.genie);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(*row),
            None => groups.push((key, vec![*row])),
        }
    }
    groups
}

/// P_D against P_FA on the unit square, one polyline per curve group,
/// with the chance diagonal dashed.
pub fn render_roc_svg(rows: &[RocRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#e0e0e0"/><line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#e0e0e0"/>"##,
            x = px(t),
            y = py(t),
            x0 = px(0.0),
            x1 = px(1.0),
            y0 = py(0.0),
            y1 = py(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{t:.1}</text><text x="{}" y="{}" text-anchor="end">{t:.1}</text>"#,
            px(t),
            py(0.0) + 16.0,
            px(0.0) - 6.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect class="axes" x="{LEFT}" y="{TOP}" width="{SIDE}" height="{SIDE}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r##"<line class="chance" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#808080" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">P_FA</text>"#,
        px(0.5),
        py(0.0) + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">P_D</text>"#,
        py(0.5),
        py(0.5)
    );

    for (i, ((snr, genie), pts)) in group_curves(rows).iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let dash = if *genie { "" } else { r#" stroke-dasharray="6 3""# };
        let coords: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.p_fa), py(p.p_d)))
            .collect();
        let label = format!("{snr} dB, {} CFO", if *genie { "genie" } else { "estimated" });
        let _ = writeln!(
            s,
            r#"<polyline class="roc" data-label="{label}" points="{}" fill="none" stroke="{colour}" stroke-width="2"{dash}/>"#,
            coords.join(" ")
        );
        let ly = py(1.0) + 20.0 + 18.0 * i as f64;
        let lx = px(0.55);
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"{dash}/><text x="{}" y="{}">{label}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
