//! Standalone SVG emission for training curves and sweep heat grids.
//!
//! Output is deterministic byte-for-byte: fixed viewBox, fixed coordinate
//! formatting, no timestamps. Curves show proxy/deploy accuracy over epochs
//! with solid train lines and dashed test lines; the heat grid colors the
//! median final deploy accuracy per (row label, axis value) cell.

use crate::error::{Error, Result};
use crate::metrics::{MetricsRow, SweepRow};
use std::fmt::Write as _;

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 56.0;

const PROXY_COLOR: &str = "#1f77b4";
const DEPLOY_COLOR: &str = "#d62728";
const DASH: &str = "7 4";

/// One plotted line: (label, color, dash pattern, row accessor).
type Series = (
    &'static str,
    &'static str,
    Option<&'static str>,
    fn(&MetricsRow) -> f64,
);

fn svg_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Accuracy trajectories for one run: four labeled series (proxy/deploy x
/// train/test). Errors on an empty row set so callers never write a file.
pub fn render_curves(rows: &[MetricsRow], title: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Format(
            "metrics CSV has no data rows to plot".into(),
        ));
    }
    let max_epoch = rows.last().map(|r| r.epoch).unwrap_or(0).max(1) as f64;
    let pw = W - MARGIN_L - MARGIN_R;
    let ph = H - MARGIN_T - MARGIN_B;
    let x = |epoch: usize| MARGIN_L + pw * epoch as f64 / max_epoch;
    let y = |acc: f64| MARGIN_T + ph * (1.0 - acc.clamp(0.0, 1.0));

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">",
        W as u32, H as u32
    );
    let _ = writeln!(out, "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>", W as u32, H as u32);
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        svg_escape(title)
    );

    // horizontal gridlines and y tick labels every 0.25
    for i in 0..=4 {
        let acc = i as f64 * 0.25;
        let yy = y(acc);
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_L,
            yy,
            W - MARGIN_R,
            yy
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{:.2}</text>",
            MARGIN_L - 8.0,
            yy + 4.0,
            acc
        );
    }
    // x ticks: at most 10, integer epochs
    let tick_step = ((max_epoch / 10.0).ceil() as usize).max(1);
    let mut e = 0usize;
    while e as f64 <= max_epoch {
        let xx = x(e);
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#bbbbbb\"/>",
            xx,
            H - MARGIN_B,
            xx,
            H - MARGIN_B + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            xx,
            H - MARGIN_B + 20.0,
            e
        );
        e += tick_step;
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">epoch</text>",
        MARGIN_L + pw / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">accuracy</text>",
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0
    );
    // axis frame
    let _ = writeln!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333333\"/>",
        MARGIN_L, MARGIN_T, pw, ph
    );

    let series: [Series; 4] = [
        ("proxy train", PROXY_COLOR, None, |r| r.proxy_train),
        ("proxy test", PROXY_COLOR, Some(DASH), |r| r.proxy_test),
        ("deploy train", DEPLOY_COLOR, None, |r| r.deploy_train),
        ("deploy test", DEPLOY_COLOR, Some(DASH), |r| r.deploy_test),
    ];
    for (label, color, dash, pick) in series {
        let mut points = String::new();
        for r in rows {
            let _ = write!(points, "{:.2},{:.2} ", x(r.epoch), y(pick(r)));
        }
        let dash_attr = dash
            .map(|d| format!(" stroke-dasharray=\"{}\"", d))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"{}><title>{}</title></polyline>",
            points.trim_end(),
            color,
            dash_attr,
            label
        );
    }

    // legend, top-left inside the frame
    for (i, (label, color, dash, _)) in series.iter().enumerate() {
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        let dash_attr = dash
            .map(|d| format!(" stroke-dasharray=\"{}\"", d))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"2\"{}/>",
            MARGIN_L + 10.0,
            ly,
            MARGIN_L + 40.0,
            ly,
            color,
            dash_attr
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>",
            MARGIN_L + 46.0,
            ly + 4.0,
            label
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Heat grid over sweep summaries: one row per (label, rows) input, one
/// column per axis value, cell = median deploy test accuracy across seeds.
/// Every input must cover the same axis values in the same order.
pub fn render_heat(grids: &[(String, Vec<SweepRow>)]) -> Result<String> {
    if grids.is_empty() || grids.iter().any(|(_, rows)| rows.is_empty()) {
        return Err(Error::Format("sweep CSV has no data rows to plot".into()));
    }
    // column order = first appearance in the first grid
    let mut cols: Vec<String> = Vec::new();
    for r in &grids[0].1 {
        if !cols.contains(&r.value) {
            cols.push(r.value.clone());
        }
    }
    let mut cells: Vec<Vec<f64>> = Vec::with_capacity(grids.len());
    for (label, rows) in grids {
        let mut row_vals = Vec::with_capacity(cols.len());
        for c in &cols {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| &r.value == c)
                .map(|r| r.deploy_test)
                .collect();
            if vals.is_empty() {
                return Err(Error::Format(format!(
                    "sweep '{}' has no rows for axis value '{}'",
                    label, c
                )));
            }
            row_vals.push(median(vals));
        }
        cells.push(row_vals);
    }

    let lo = cells.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let hi = cells.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ramp = |v: f64| -> (u8, u8, u8, f64) {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        // pale yellow (low) to deep blue (high)
        let lerp = |a: f64, b: f64| a + (b - a) * t;
        (
            lerp(253.0, 33.0) as u8,
            lerp(231.0, 74.0) as u8,
            lerp(160.0, 150.0) as u8,
            t,
        )
    };

    let cell_w = 96.0;
    let cell_h = 46.0;
    let left = 130.0;
    let top = 56.0;
    let width = left + cell_w * cols.len() as f64 + 20.0;
    let height = top + cell_h * grids.len() as f64 + 44.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {:.0} {:.0}\" font-family=\"sans-serif\">",
        width, height
    );
    let _ = writeln!(
        out,
        "<rect width=\"{:.0}\" height=\"{:.0}\" fill=\"white\"/>",
        width, height
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"26\" font-size=\"15\" text-anchor=\"middle\">median deploy test accuracy</text>",
        width / 2.0
    );
    for (j, c) in cols.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            left + cell_w * (j as f64 + 0.5),
            top - 8.0,
            svg_escape(c)
        );
    }
    for (i, (label, _)) in grids.iter().enumerate() {
        let cy = top + cell_h * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            left - 10.0,
            cy + 4.0,
            svg_escape(label)
        );
        for (j, &v) in cells[i].iter().enumerate() {
            let (r, g, b, t) = ramp(v);
            let text_fill = if t > 0.55 { "white" } else { "black" };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({},{},{})\" stroke=\"#666666\"/>",
                left + cell_w * j as f64,
                top + cell_h * i as f64,
                cell_w,
                cell_h,
                r,
                g,
                b
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" fill=\"{}\">{:.3}</text>",
                left + cell_w * (j as f64 + 0.5),
                cy + 4.0,
                text_fill,
                v
            );
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">axis value</text>",
        left + cell_w * cols.len() as f64 / 2.0,
        height - 14.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize) -> Vec<MetricsRow> {
        (0..n)
            .map(|e| MetricsRow {
                epoch: e,
                transition_unit: -1,
                mean_p: 0.0,
                train_loss: 2.0 - 0.1 * e as f64,
                proxy_train: 0.1 + 0.05 * e as f64,
                proxy_test: 0.1 + 0.04 * e as f64,
                deploy_train: 0.1 + 0.03 * e as f64,
                deploy_test: 0.1 + 0.02 * e as f64,
                mean_frozen: 0.0,
            })
            .collect()
    }

    #[test]
    fn curves_svg_is_byte_stable_with_four_labeled_series() {
        let r = rows(12);
        let a = render_curves(&r, "demo run").unwrap();
        let b = render_curves(&r, "demo run").unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("viewBox=\"0 0 800 500\""));
        for label in ["proxy train", "proxy test", "deploy train", "deploy test"] {
            assert!(a.contains(&format!(">{}</", label)), "missing {}", label);
        }
        assert_eq!(a.matches("<polyline").count(), 4);
        assert_eq!(a.matches("stroke-dasharray").count(), 4); // 2 lines + 2 legend keys
    }

    #[test]
    fn empty_rows_are_rejected() {
        assert!(render_curves(&[], "t").is_err());
        assert!(render_heat(&[]).is_err());
        assert!(render_heat(&[("a".into(), vec![])]).is_err());
    }

    #[test]
    fn heat_grid_takes_medians_over_seeds() {
        let mk = |value: &str, seed: u64, acc: f64| SweepRow {
            axis: "refresh".into(),
            value: value.into(),
            seed,
            proxy_test: acc,
            deploy_test: acc,
        };
        let grid = vec![(
            "cubic".to_string(),
            vec![
                mk("10", 1, 0.50),
                mk("10", 2, 0.70),
                mk("10", 3, 0.60),
                mk("100", 1, 0.80),
                mk("100", 2, 0.90),
                mk("100", 3, 0.85),
            ],
        )];
        let svg = render_heat(&grid).unwrap();
        assert!(svg.contains("0.600"), "median of first column");
        assert!(svg.contains("0.850"), "median of second column");
        assert!(svg.contains(">cubic</text>"));
        assert_eq!(render_heat(&grid).unwrap(), svg);
    }

    #[test]
    fn heat_grid_requires_every_cell() {
        let mk = |value: &str| SweepRow {
            axis: "refresh".into(),
            value: value.into(),
            seed: 1,
            proxy_test: 0.5,
            deploy_test: 0.5,
        };
        let grids = vec![
            ("a".to_string(), vec![mk("10"), mk("100")]),
            ("b".to_string(), vec![mk("10")]),
        ];
        let err = render_heat(&grids).unwrap_err();
        assert!(err.to_string().contains("'100'"), "{}", err);
    }
}
