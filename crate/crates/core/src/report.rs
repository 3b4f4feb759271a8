//! CSV tables shared by the experiment commands.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::detection::csv_field;

/// One `metric,group,value,lower,upper` row. Bounds are blank when no
/// interval applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: String,
    pub group: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl ReportRow {
    pub fn new(metric: impl Into<String>, group: impl Into<String>, value: f64) -> Self {
        Self {
            metric: metric.into(),
            group: group.into(),
            value,
            lower: None,
            upper: None,
        }
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub const REPORT_HEADER: &str = "metric,group,value,lower,upper";

pub fn write_rows<W: Write>(mut w: W, rows: &[ReportRow]) -> io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            csv_field(&r.metric),
            csv_field(&r.group),
            r.value,
            num(r.lower),
            num(r.upper)
        )?;
    }
    Ok(())
}

/// A row of the success / friction share / turns comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub condition: String,
    /// Percent of episodes judged successful.
    pub success: f64,
    /// Percent of counted turns carrying friction.
    pub friction_pct: f64,
    pub avg_turns: f64,
}

pub const OUTCOME_HEADER: &str = "condition,Success,Fric.%,Avg. Turns";

pub fn write_outcome_table<W: Write>(mut w: W, rows: &[OutcomeRow]) -> io::Result<()> {
    writeln!(w, "{OUTCOME_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.2},{:.2},{:.2}",
            csv_field(&r.condition),
            r.success,
            r.friction_pct,
            r.avg_turns
        )?;
    }
    Ok(())
}
