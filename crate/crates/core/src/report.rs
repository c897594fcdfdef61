//! Pass/fail reports written as `metric,value,threshold,pass` lines.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, metric: impl Into<String>, value: f64, threshold: f64, pass: bool) {
        self.rows.push(ReportRow {
            metric: metric.into(),
            value,
            threshold,
            pass,
        });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.warnings.extend(other.warnings);
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "metric,value,threshold,pass")?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{}",
                r.metric, r.value, r.threshold, r.pass as u8
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "# warning: {w}")?;
        }
        Ok(())
    }
}
