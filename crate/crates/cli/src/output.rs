use std::fs;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use alpha_lab::report::CheckReport;
use alpha_lab::suite::CriterionResult;
use anyhow::Context;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;

/// Rows for `--csv`.
#[derive(Clone, Debug)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Appends `check, trials, failures, worst_margin, pass`.
    pub fn push_report(&mut self, r: &CheckReport) {
        self.push(vec![
            r.check.clone(),
            r.trials.to_string(),
            r.failures.to_string(),
            r.worst_margin.to_string(),
            r.pass.to_string(),
        ]);
    }

    fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }
}

/// A finished subcommand: its verdict, JSON body and CSV rows.
pub struct Outcome {
    pub command: &'static str,
    pub pass: bool,
    pub body: Value,
    pub table: Table,
    /// Replaces the JSON on standard output when set.
    pub text: Option<String>,
}

impl Outcome {
    pub fn new(command: &'static str, pass: bool, body: Value, table: Table) -> Self {
        Self {
            command,
            pass,
            body,
            table,
            text: None,
        }
    }

    pub fn from_criteria(command: &'static str, results: Vec<CriterionResult>) -> Self {
        let mut table = Table::new(&["id", "name", "claim", "pass", "summary"]);
        for r in &results {
            table.push(vec![r.id.to_string(), r.name.into(), r.claim.into(), r.pass.to_string(), r.summary.clone()]);
        }
        let pass = results.iter().all(|r| r.pass);
        Self::new(command, pass, json!({ "criteria": results }), table)
    }

    fn envelope(&self, cfg: &RunConfig) -> Value {
        let mut map = Map::new();
        map.insert("command".into(), json!(self.command));
        map.insert("seed".into(), json!(cfg.seed));
        map.insert("pass".into(), json!(self.pass));
        map.insert("tolerances".into(), json!(cfg.tolerances));
        if !cfg.no_timestamp {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            map.insert("generated_unix".into(), json!(now));
        }
        map.insert("result".into(), self.body.clone());
        Value::Object(map)
    }

    /// Writes the report to `--output` or standard output.
    pub fn emit(&self, cfg: &RunConfig) -> anyhow::Result<()> {
        let bytes = if cfg.csv {
            self.table.to_csv()?
        } else {
            let mut b = serde_json::to_vec_pretty(&self.envelope(cfg))?;
            b.push(b'\n');
            b
        };
        match &cfg.output {
            Some(path) => {
                fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?;
                if let Some(text) = &self.text {
                    print!("{text}");
                }
            }
            None => {
                let mut out = std::io::stdout().lock();
                match &self.text {
                    Some(text) => out.write_all(text.as_bytes())?,
                    None => out.write_all(&bytes)?,
                }
            }
        }
        Ok(())
    }
}
