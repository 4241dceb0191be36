//! Result rows in the fixed CSV schema.

use std::io::Write;

use fairhorizon::transition::HybridResult;

use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 13] = [
    "instance", "mt", "f", "igap", "fgap", "cols", "cpcalls", "solved", "time_s", "g", "h", "range", "cov",
];

/// Everything measured for one solved cell. Averaged rows hold means, so
/// counts and the solved flag may be fractional there.
#[derive(Debug, Clone, PartialEq)]
pub struct Measures {
    pub igap: f64,
    pub fgap: f64,
    pub cols: f64,
    pub cpcalls: f64,
    pub solved: f64,
    pub time_s: Option<f64>,
    /// Largest and smallest average coverage over zones, `c_i / T`.
    pub g: f64,
    pub h: f64,
    pub range: f64,
    /// Average coverage in percent.
    pub cov: f64,
}

impl Measures {
    pub fn from_result(res: &HybridResult, with_time: bool) -> Self {
        let plan = res.plan();
        let horizon = plan.horizon() as f64;
        let counts = plan.counts();
        let g = counts.iter().max().copied().unwrap_or(0) as f64 / horizon;
        let h = counts.iter().min().copied().unwrap_or(0) as f64 / horizon;
        let s = &res.stats;
        Measures {
            igap: s.initial_gap,
            fgap: if s.solved { 0.0 } else { s.final_gap },
            cols: s.columns as f64,
            cpcalls: s.cp_calls as f64,
            solved: if s.solved { 1.0 } else { 0.0 },
            time_s: with_time.then(|| s.total_time.as_secs_f64()),
            g,
            h,
            range: g - h,
            cov: plan.average_coverage_percent(),
        }
    }
}

/// One CSV line; `measures` is `None` for a cell that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub instance: String,
    pub mt: f64,
    pub f: f64,
    pub measures: Option<Measures>,
}

fn count(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn parse(field: &str, text: &str) -> CliResult<f64> {
    text.parse()
        .map_err(|_| CliError::Usage(format!("column {field}: cannot parse {text:?}")))
}

impl MetricsRow {
    pub fn record(&self) -> Vec<String> {
        let mut out = vec![self.instance.clone(), format!("{:.1}", self.mt), format!("{:.2}", self.f)];
        match &self.measures {
            Some(m) => out.extend([
                format!("{:.4}", m.igap),
                format!("{:.4}", m.fgap),
                count(m.cols),
                count(m.cpcalls),
                count(m.solved),
                m.time_s.map_or(String::new(), |t| format!("{t:.3}")),
                format!("{:.4}", m.g),
                format!("{:.4}", m.h),
                format!("{:.4}", m.range),
                format!("{:.2}", m.cov),
            ]),
            None => out.extend(std::iter::repeat_n(String::new(), HEADER.len() - 3)),
        }
        out
    }

    pub fn from_record(record: &csv::StringRecord) -> CliResult<Self> {
        if record.len() != HEADER.len() {
            return Err(CliError::Usage(format!(
                "expected {} columns, got {}",
                HEADER.len(),
                record.len()
            )));
        }
        let get = |k: usize| parse(HEADER[k], &record[k]);
        let measures = if record[3].is_empty() {
            None
        } else {
            Some(Measures {
                igap: get(3)?,
                fgap: get(4)?,
                cols: get(5)?,
                cpcalls: get(6)?,
                solved: get(7)?,
                time_s: if record[8].is_empty() { None } else { Some(get(8)?) },
                g: get(9)?,
                h: get(10)?,
                range: get(11)?,
                cov: get(12)?,
            })
        };
        Ok(MetricsRow {
            instance: record[0].to_string(),
            mt: get(1)?,
            f: get(2)?,
            measures,
        })
    }
}

/// Mean of the successful rows, labelled `label`.
pub fn average(rows: &[&MetricsRow], label: &str) -> Option<MetricsRow> {
    let first = rows.first()?;
    let ok: Vec<&Measures> = rows.iter().filter_map(|r| r.measures.as_ref()).collect();
    let measures = (!ok.is_empty()).then(|| {
        let mean = |f: &dyn Fn(&Measures) -> f64| ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64;
        let times: Option<Vec<f64>> = ok.iter().map(|m| m.time_s).collect();
        Measures {
            igap: mean(&|m| m.igap),
            fgap: mean(&|m| m.fgap),
            cols: mean(&|m| m.cols),
            cpcalls: mean(&|m| m.cpcalls),
            solved: mean(&|m| m.solved),
            time_s: times.map(|t| t.iter().sum::<f64>() / t.len() as f64),
            g: mean(&|m| m.g),
            h: mean(&|m| m.h),
            range: mean(&|m| m.range),
            cov: mean(&|m| m.cov),
        }
    });
    Some(MetricsRow {
        instance: label.to_string(),
        mt: first.mt,
        f: first.f,
        measures,
    })
}

pub fn write_rows<W: Write>(out: W, rows: &[MetricsRow], header: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(HEADER)?;
    }
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(|e| CliError::Csv(e.into()))?;
    Ok(())
}

pub fn read_rows(text: &str) -> CliResult<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(CliError::Usage("unexpected CSV header".into()));
    }
    r.records().map(|rec| MetricsRow::from_record(&rec?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(instance: &str, fgap: f64, solved: f64) -> MetricsRow {
        MetricsRow {
            instance: instance.into(),
            mt: 0.5,
            f: 0.95,
            measures: Some(Measures {
                igap: 0.5,
                fgap,
                cols: 4.0,
                cpcalls: 2.0,
                solved,
                time_s: None,
                g: 0.9,
                h: 0.6,
                range: 0.3,
                cov: 75.0,
            }),
        }
    }

    #[test]
    fn rows_round_trip() {
        let rows = vec![
            row("a", 0.0, 1.0),
            row("b", 0.25, 0.0),
            MetricsRow {
                instance: "c".into(),
                mt: 0.1,
                f: 0.85,
                measures: None,
            },
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("instance,mt,f,igap,fgap,cols,cpcalls,solved,time_s,g,h,range,cov\n"));
        assert_eq!(read_rows(&text).unwrap(), rows);
    }

    #[test]
    fn average_skips_failures() {
        let a = row("a", 0.0, 1.0);
        let b = row("b", 0.5, 0.0);
        let failed = MetricsRow {
            measures: None,
            ..row("c", 0.0, 1.0)
        };
        let avg = average(&[&a, &b, &failed], "avg").unwrap();
        let m = avg.measures.unwrap();
        assert_eq!(m.fgap, 0.25);
        assert_eq!(m.solved, 0.5);
    }
}
