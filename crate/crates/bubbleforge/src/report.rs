//! Report records shared by every command. Serialization is deterministic:
//! maps are ordered and no timing or host information is recorded.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Where a number or a tolerance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// A closed form or constant stated with the construction.
    Paper,
    /// An independent computation used as the reference.
    DerivedOracle,
    /// Fitted from the data; no absolute reference exists.
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub tolerance: Option<f64>,
    pub provenance: Provenance,
}

/// One pass/fail check. `measured` is a deviation and passes when it is at
/// most `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
    pub converged: bool,
}

impl Check {
    pub fn new(
        suite: &str,
        name: impl Into<String>,
        measured: f64,
        tolerance: f64,
        provenance: Provenance,
    ) -> Self {
        Check {
            suite: suite.to_string(),
            name: name.into(),
            passed: measured.is_finite() && measured <= tolerance,
            measured,
            tolerance,
            provenance,
            converged: true,
        }
    }

    pub fn converged(mut self, ok: bool) -> Self {
        self.converged = ok;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub t: f64,
    pub f_numeric: f64,
    pub f_predicted: f64,
    pub theta: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub quantities: BTreeMap<String, Quantity>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<ScanRow>,
    pub passed: bool,
    pub converged: bool,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            parameters: BTreeMap::new(),
            quantities: BTreeMap::new(),
            checks: Vec::new(),
            rows: Vec::new(),
            passed: true,
            converged: true,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn quantity(
        &mut self,
        key: impl Into<String>,
        value: f64,
        tolerance: Option<f64>,
        provenance: Provenance,
    ) {
        self.quantities.insert(
            key.into(),
            Quantity {
                value,
                tolerance,
                provenance,
            },
        );
    }

    pub fn push_check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.converged &= check.converged;
        self.checks.push(check);
    }

    pub fn push_row(&mut self, row: ScanRow) {
        self.converged &= row.converged;
        self.rows.push(row);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// 0 pass, 1 failed check, 3 unconverged quadrature.
    pub fn exit_code(&self) -> u8 {
        if !self.converged {
            3
        } else if !self.passed {
            1
        } else {
            0
        }
    }

    pub fn write_json(&self, mut out: impl Write) -> anyhow::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// Scan rows if present, otherwise checks if present, otherwise the
    /// quantities as `name,value,tolerance,provenance`.
    pub fn write_csv(&self, out: impl Write) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if !self.rows.is_empty() {
            for row in &self.rows {
                w.serialize(row)?;
            }
        } else if !self.checks.is_empty() {
            for c in &self.checks {
                w.serialize(c)?;
            }
        } else {
            w.write_record(["name", "value", "tolerance", "provenance"])?;
            for (name, q) in &self.quantities {
                w.serialize((name, q.value, q.tolerance, q.provenance))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
