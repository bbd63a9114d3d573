//! Experiment reports and their CSV / gnuplot renderings.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::grid::format_value;

pub const CSV_HEADER: &str = "# quantity,alpha,param,value,limit,abs_error";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub quantity: String,
    /// NaN when the row does not depend on α.
    pub alpha: f64,
    /// Experiment-specific second coordinate (time, step size, n, ...).
    pub param: f64,
    pub value: f64,
    pub limit: Option<f64>,
    pub abs_error: Option<f64>,
    /// Wall time spent on the row; kept out of the CSV so output is reproducible.
    pub runtime_ms: f64,
}

impl Row {
    pub fn new(quantity: impl Into<String>, alpha: f64, param: f64, value: f64) -> Self {
        Row {
            quantity: quantity.into(),
            alpha,
            param,
            value,
            limit: None,
            abs_error: None,
            runtime_ms: 0.0,
        }
    }

    pub fn with_limit(mut self, limit: f64) -> Self {
        self.limit = Some(limit);
        self.abs_error = Some((self.value - limit).abs());
        self
    }

    pub fn with_error(mut self, err: f64) -> Self {
        self.abs_error = Some(err);
        self
    }

    pub fn timed(mut self, ms: f64) -> Self {
        self.runtime_ms = ms;
        self
    }
}

/// Outcome of one pass/fail check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub experiment: String,
    pub n: usize,
    pub h: f64,
    pub version: String,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
}

impl SweepReport {
    pub fn new(experiment: &str, n: usize, h: f64) -> Self {
        SweepReport {
            experiment: experiment.to_string(),
            n,
            h,
            version: format!("riesz-flow {}", env!("CARGO_PKG_VERSION")),
            rows: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Stable sort by α; rows without α keep their place at the end.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| match (a.alpha.is_nan(), b.alpha.is_nan()) {
            (false, false) => a.alpha.total_cmp(&b.alpha),
            (x, y) => x.cmp(&y),
        });
    }

    pub fn rows_named<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# experiment={} n={} h={} version={}",
            self.experiment,
            self.n,
            format_value(self.h),
            self.version
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "# check {}={} {}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            );
        }
        s.push_str(CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<f64>| v.map(format_value).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.quantity,
                format_value(r.alpha),
                format_value(r.param),
                format_value(r.value),
                opt(r.limit),
                opt(r.abs_error)
            );
        }
        s
    }

    /// A gnuplot script plotting `abs_error` (or `value`) against α for each
    /// quantity of the report.
    pub fn plot_script(&self, csv_name: &str) -> String {
        let mut quantities: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !quantities.contains(&r.quantity.as_str()) {
                quantities.push(&r.quantity);
            }
        }
        let mut s = String::new();
        let _ = writeln!(s, "# gnuplot script for {}", self.experiment);
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set datafile commentschars '#'");
        let _ = writeln!(s, "set xlabel 'alpha'");
        let _ = writeln!(s, "set key outside");
        let plots: Vec<String> = quantities
            .iter()
            .map(|q| {
                let col = if self.rows_named(q).any(|r| r.abs_error.is_some()) {
                    6
                } else {
                    4
                };
                format!("'{csv_name}' using (strcol(1) eq '{q}' ? $2 : 1/0):{col} with linespoints title '{q}'")
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
        s
    }

    /// Writes the CSV and, if requested, a `.gp` script beside it.
    pub fn write(&self, path: &Path, plot: bool) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        if plot {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            std::fs::write(path.with_extension("gp"), self.plot_script(&name))?;
        }
        Ok(())
    }
}
