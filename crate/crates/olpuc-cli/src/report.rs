use std::io::Write;
use std::path::Path;

use serde::Serialize;

/// 15 significant digits; every float that lands in a CSV cell goes through
/// here so tables are reproducible bit for bit.
pub fn sig15(x: f64) -> String {
    format!("{x:.14e}")
}

/// One verification row: a named check, the parameters it ran with, and the
/// worst residual it saw.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub check: String,
    pub params: serde_json::Value,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Row {
    pub fn new(
        check: impl Into<String>,
        params: serde_json::Value,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        Row {
            check: check.into(),
            params,
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub measure: String,
    pub ordering: [usize; 2],
    pub size: usize,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub pass: bool,
}

impl Report {
    pub fn new(
        command: &str,
        measure: &Path,
        ordering: (usize, usize),
        size: usize,
        seed: u64,
    ) -> Self {
        Report {
            command: command.to_string(),
            measure: measure.display().to_string(),
            ordering: [ordering.0, ordering.1],
            size,
            seed,
            rows: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, row: Row) {
        self.pass &= row.pass;
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: Vec<Row>) {
        for r in rows {
            self.push(r);
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,residual,tolerance,pass,params\n");
        for r in &self.rows {
            let params = serde_json::to_string(&r.params).expect("params are serializable");
            out.push_str(&format!(
                "{},{},{},{},\"{}\"\n",
                r.check,
                sig15(r.residual),
                sig15(r.tolerance),
                r.pass,
                params.replace('"', "\"\"")
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fmt {
    Csv,
    Json,
}

/// Explicit flag wins, then the output file extension, then the command's
/// own default.
pub fn pick_format(flag: Option<Fmt>, output: Option<&Path>, default: Fmt) -> Fmt {
    if let Some(f) = flag {
        return f;
    }
    if let Some(p) = output {
        match p.extension().and_then(|e| e.to_str()) {
            Some("csv") => return Fmt::Csv,
            Some("json") => return Fmt::Json,
            _ => {}
        }
    }
    default
}

pub fn emit(output: Option<&Path>, text: &str) -> std::io::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}
