//! Per-epoch training metrics: CSV emission/parsing and the drop-recovery
//! detector for transition-boundary dynamics.
//!
//! The CSV is deterministic: fixed header, fixed column order, `.` decimal
//! separator, six fractional digits, `\n` line endings, no timestamps. Wall
//! times go to a separate timings file so the metrics file stays
//! byte-identical across reruns.

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str =
    "epoch,transition_unit,mean_p,train_loss,proxy_train,proxy_test,deploy_train,deploy_test,mean_frozen";

pub const TIMINGS_HEADER: &str = "epoch,seconds";

/// One epoch of training telemetry. Accuracies are fractions in [0, 1];
/// `transition_unit` is -1 when no unit is mid-transition.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub transition_unit: i64,
    pub mean_p: f64,
    pub train_loss: f64,
    pub proxy_train: f64,
    pub proxy_test: f64,
    pub deploy_train: f64,
    pub deploy_test: f64,
    pub mean_frozen: f64,
}

pub fn write_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.epoch,
            r.transition_unit,
            r.mean_p,
            r.train_loss,
            r.proxy_train,
            r.proxy_test,
            r.deploy_train,
            r.deploy_test,
            r.mean_frozen
        ));
    }
    out
}

pub fn write_timings_csv(timings: &[(usize, f64)]) -> String {
    let mut out = String::from(TIMINGS_HEADER);
    out.push('\n');
    for (epoch, secs) in timings {
        out.push_str(&format!("{},{:.3}\n", epoch, secs));
    }
    out
}

pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Format(format!(
                "metrics CSV line 1: unexpected header '{}'",
                h
            )))
        }
        None => return Err(Error::Format("metrics CSV is empty".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Format(format!(
                "metrics CSV line {}: {} fields, expected 9",
                lineno,
                fields.len()
            )));
        }
        let int = |j: usize| -> Result<i64> {
            fields[j].parse().map_err(|_| {
                Error::Format(format!(
                    "metrics CSV line {}: '{}' is not an integer",
                    lineno, fields[j]
                ))
            })
        };
        let num = |j: usize| -> Result<f64> {
            fields[j].parse().map_err(|_| {
                Error::Format(format!(
                    "metrics CSV line {}: '{}' is not a number",
                    lineno, fields[j]
                ))
            })
        };
        rows.push(MetricsRow {
            epoch: int(0)? as usize,
            transition_unit: int(1)?,
            mean_p: num(2)?,
            train_loss: num(3)?,
            proxy_train: num(4)?,
            proxy_test: num(5)?,
            deploy_train: num(6)?,
            deploy_test: num(7)?,
            mean_frozen: num(8)?,
        });
    }
    Ok(rows)
}

pub const SWEEP_SUMMARY_HEADER: &str = "axis,value,seed,proxy_test,deploy_test";

/// One sweep run's endpoint: the swept axis, its value for this run, the
/// derived seed, and final proxy/deploy test accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub seed: u64,
    pub proxy_test: f64,
    pub deploy_test: f64,
}

pub fn write_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6}\n",
            r.axis, r.value, r.seed, r.proxy_test, r.deploy_test
        ));
    }
    out
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SWEEP_SUMMARY_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Format(format!(
                "sweep CSV line 1: unexpected header '{}'",
                h
            )))
        }
        None => return Err(Error::Format("sweep CSV is empty".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!(
                "sweep CSV line {}: {} fields, expected 5",
                lineno,
                fields.len()
            )));
        }
        let seed = fields[2].parse().map_err(|_| {
            Error::Format(format!(
                "sweep CSV line {}: '{}' is not a seed",
                lineno, fields[2]
            ))
        })?;
        let num = |j: usize| -> Result<f64> {
            fields[j].parse().map_err(|_| {
                Error::Format(format!(
                    "sweep CSV line {}: '{}' is not a number",
                    lineno, fields[j]
                ))
            })
        };
        rows.push(SweepRow {
            axis: fields[0].to_string(),
            value: fields[1].to_string(),
            seed,
            proxy_test: num(3)?,
            deploy_test: num(4)?,
        });
    }
    Ok(rows)
}

/// Detects the drop-then-recover signature at each transition boundary.
///
/// For boundary epoch `b`, the detector fires when proxy test accuracy falls
/// by at least `drop` between consecutive epochs somewhere in [b-1, b+1],
/// and then recovers by at least `recover` from the post-drop value within
/// `window` epochs. Accuracies and thresholds are fractions (2 points =
/// 0.02). Returns one flag per boundary.
pub fn detect_boundary_dips(
    rows: &[MetricsRow],
    boundaries: &[usize],
    drop: f64,
    recover: f64,
    window: usize,
) -> Vec<bool> {
    let acc: Vec<f64> = rows.iter().map(|r| r.proxy_test).collect();
    let epoch_of = |idx: usize| rows[idx].epoch;
    boundaries
        .iter()
        .map(|&b| {
            for e in 1..acc.len() {
                let near = epoch_of(e) + 1 >= b && epoch_of(e) <= b + 1;
                if !near {
                    continue;
                }
                if acc[e] <= acc[e - 1] - drop {
                    let floor = acc[e];
                    let horizon = epoch_of(e) + window;
                    for (e2, &a2) in acc.iter().enumerate().skip(e + 1) {
                        if epoch_of(e2) > horizon {
                            break;
                        }
                        if a2 >= floor + recover {
                            return true;
                        }
                    }
                }
            }
            false
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(epoch: usize, proxy_test: f64) -> MetricsRow {
        MetricsRow {
            epoch,
            transition_unit: -1,
            mean_p: 0.0,
            train_loss: 1.0,
            proxy_train: proxy_test,
            proxy_test,
            deploy_train: proxy_test,
            deploy_test: proxy_test,
            mean_frozen: 0.0,
        }
    }

    #[test]
    fn csv_roundtrips_at_six_digit_precision() {
        let rows = vec![
            MetricsRow {
                epoch: 0,
                transition_unit: 3,
                mean_p: 0.123456789,
                train_loss: std::f64::consts::LN_10,
                proxy_train: 0.5,
                proxy_test: 0.25,
                deploy_train: 0.75,
                deploy_test: 0.1,
                mean_frozen: 0.999999,
            },
            row(1, 0.5),
        ];
        let text = write_metrics_csv(&rows);
        assert!(text.starts_with(METRICS_HEADER));
        let back = read_metrics_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].epoch, 0);
        assert_eq!(back[0].transition_unit, 3);
        assert!((back[0].mean_p - 0.123457).abs() < 1e-9);
        assert_eq!(back[1], row(1, 0.5));
        // writing what was read is a fixed point
        assert_eq!(write_metrics_csv(&back), text);
    }

    #[test]
    fn malformed_csv_errors_name_the_line() {
        let err = read_metrics_csv("nope\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{}", err);

        let text = format!("{}\n0,-1,0,0,0,0,0,0,0\n1,x,0,0,0,0,0,0,0\n", METRICS_HEADER);
        let err = read_metrics_csv(&text).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{}", err);

        let text = format!("{}\n0,-1,0\n", METRICS_HEADER);
        let err = read_metrics_csv(&text).unwrap_err();
        assert!(err.to_string().contains("expected 9"), "{}", err);
    }

    #[test]
    fn detector_fires_on_drop_then_recovery_only() {
        // boundary at epoch 5: accuracy dips 0.60 -> 0.55 at epoch 5 and
        // recovers to 0.58 by epoch 7
        let accs = [0.40, 0.50, 0.55, 0.58, 0.60, 0.55, 0.56, 0.59, 0.60, 0.61];
        let rows: Vec<MetricsRow> = accs
            .iter()
            .enumerate()
            .map(|(e, &a)| row(e, a))
            .collect();
        let fired = detect_boundary_dips(&rows, &[5], 0.02, 0.01, 4);
        assert_eq!(fired, vec![true]);

        // no recovery within the window
        let accs = [0.60, 0.60, 0.60, 0.60, 0.60, 0.50, 0.50, 0.50, 0.50, 0.50];
        let rows: Vec<MetricsRow> = accs
            .iter()
            .enumerate()
            .map(|(e, &a)| row(e, a))
            .collect();
        assert_eq!(detect_boundary_dips(&rows, &[5], 0.02, 0.01, 4), vec![false]);

        // smooth rise: no drop at all
        let rows: Vec<MetricsRow> = (0..10).map(|e| row(e, 0.3 + 0.03 * e as f64)).collect();
        assert_eq!(detect_boundary_dips(&rows, &[5], 0.02, 0.01, 4), vec![false]);
    }

    #[test]
    fn detector_respects_the_boundary_neighborhood() {
        // dip at epoch 2, boundary at epoch 8: too far away to count
        let accs = [0.60, 0.60, 0.50, 0.60, 0.60, 0.60, 0.60, 0.60, 0.60, 0.60];
        let rows: Vec<MetricsRow> = accs
            .iter()
            .enumerate()
            .map(|(e, &a)| row(e, a))
            .collect();
        assert_eq!(detect_boundary_dips(&rows, &[8], 0.02, 0.01, 4), vec![false]);
        assert_eq!(detect_boundary_dips(&rows, &[2], 0.02, 0.01, 4), vec![true]);
        // off-by-one neighborhood: dip at 2 counts for boundaries 1 and 3
        assert_eq!(detect_boundary_dips(&rows, &[1, 3], 0.02, 0.01, 4), vec![true, true]);
    }

    #[test]
    fn timings_csv_has_its_own_header() {
        let text = write_timings_csv(&[(0, 1.25), (1, 1.5)]);
        assert_eq!(text, "epoch,seconds\n0,1.250\n1,1.500\n");
    }
}
