use crate::data::format_value;
use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "epoch,loss_d,loss_g,gp,wasserstein,l_cls,l_cyc,l_reg,fake_seen_top1,wall_seconds";

/// One row of a metrics file. `None` renders as an empty field.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss_d: Option<f64>,
    pub loss_g: Option<f64>,
    pub gp: Option<f64>,
    pub wasserstein: Option<f64>,
    pub l_cls: Option<f64>,
    pub l_cyc: Option<f64>,
    pub l_reg: Option<f64>,
    pub fake_seen_top1: Option<f64>,
    pub wall_seconds: Option<f64>,
}

impl EpochMetrics {
    fn values(&self) -> [Option<f64>; 9] {
        [
            self.loss_d,
            self.loss_g,
            self.gp,
            self.wasserstein,
            self.l_cls,
            self.l_cyc,
            self.l_reg,
            self.fake_seen_top1,
            self.wall_seconds,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.values().iter().flatten().all(|v| v.is_finite())
    }

    pub fn csv_line(&self) -> String {
        let mut line = self.epoch.to_string();
        for v in self.values() {
            line.push(',');
            if let Some(v) = v {
                line.push_str(&format_value(v));
            }
        }
        line
    }
}

/// Parses a file written by [`metrics_csv`].
pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpochMetrics>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::Validation("metrics file does not start with the expected header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Validation(format!("metrics row needs 10 fields: {line:?}")));
            }
            let bad = |s: &str| Error::Validation(format!("bad metrics field {s:?}"));
            let v = |i: usize| -> Result<Option<f64>> {
                if f[i].is_empty() {
                    Ok(None)
                } else {
                    f[i].parse().map(Some).map_err(|_| bad(f[i]))
                }
            };
            Ok(EpochMetrics {
                epoch: f[0].parse().map_err(|_| bad(f[0]))?,
                loss_d: v(1)?,
                loss_g: v(2)?,
                gp: v(3)?,
                wasserstein: v(4)?,
                l_cls: v(5)?,
                l_cyc: v(6)?,
                l_reg: v(7)?,
                fake_seen_top1: v(8)?,
                wall_seconds: v(9)?,
            })
        })
        .collect()
}

pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Running means of the per-step quantities within one epoch.
#[derive(Clone, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    n: usize,
}

impl Accumulator {
    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_fields_for_inactive_losses() {
        let row = EpochMetrics { epoch: 3, l_reg: Some(0.5), ..Default::default() };
        assert_eq!(row.csv_line(), "3,,,,,,,5.0000000000000000e-1,,");
        assert_eq!(metrics_csv(&[row.clone()]).lines().next().unwrap(), METRICS_HEADER);
        let full = EpochMetrics { epoch: 4, loss_d: Some(-0.1), wasserstein: Some(1.0 / 3.0), ..row };
        let text = metrics_csv(&[row, full]);
        assert_eq!(metrics_csv(&parse_metrics_csv(&text).unwrap()), text);
    }
}
