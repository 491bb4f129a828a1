//! Channel description files.

use capcert_core::{Channel, ConstraintSet};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Tolerance on row sums when loading a file.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// A channel as written by a user: labels, the row-stochastic matrix and
/// optional halfspace constraints `<p, a> >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Input labels; defaults to `0..|X|`.
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
    /// Output labels; defaults to `0..|Y|`.
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
    #[serde(rename = "W")]
    pub matrix: Vec<Vec<f64>>,
    #[serde(rename = "A", default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<Vec<f64>>,
}

impl ChannelSpecFile {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let spec: ChannelSpecFile =
            serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files always serialize")
    }

    /// Spec for an existing channel, with default labels kept implicit.
    pub fn from_channel(name: &str, channel: &Channel, constraints: &ConstraintSet) -> Self {
        ChannelSpecFile {
            name: Some(name.to_string()),
            description: None,
            inputs: None,
            outputs: None,
            matrix: channel.rows().to_vec(),
            constraints: constraints.vectors().to_vec(),
        }
    }

    fn validate(&self) -> CliResult<()> {
        let parse = |msg: String| Err(CliError::Parse(msg));
        let Some(first) = self.matrix.first() else {
            return parse("W has no rows".into());
        };
        let m = first.len();
        if m == 0 {
            return parse("W has no columns".into());
        }
        for (x, row) in self.matrix.iter().enumerate() {
            if row.len() != m {
                return parse(format!(
                    "row {x} of W has {} entries, expected {m}",
                    row.len()
                ));
            }
            if let Some(y) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return parse(format!(
                    "row {x} of W has a negative or non-finite entry at column {y}"
                ));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return parse(format!(
                    "row {x} of W sums to {total}, expected 1 within {ROW_SUM_TOL:e}"
                ));
            }
        }
        if let Some(labels) = &self.inputs {
            if labels.len() != self.matrix.len() {
                return parse(format!(
                    "X has {} labels but W has {} rows",
                    labels.len(),
                    self.matrix.len()
                ));
            }
        }
        if let Some(labels) = &self.outputs {
            if labels.len() != m {
                return parse(format!(
                    "Y has {} labels but W has {m} columns",
                    labels.len()
                ));
            }
        }
        for (k, a) in self.constraints.iter().enumerate() {
            if a.len() != self.matrix.len() {
                return parse(format!(
                    "constraint {k} has {} entries, expected {}",
                    a.len(),
                    self.matrix.len()
                ));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return parse(format!("constraint {k} has a non-finite entry"));
            }
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.matrix.len()
    }

    /// Builds the channel, renormalizing each row to sum to exactly one.
    pub fn channel(&self) -> CliResult<Channel> {
        let rows: Vec<Vec<f64>> = self
            .matrix
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.iter().map(|v| v / total).collect()
            })
            .collect();
        let n = rows.len();
        let m = rows[0].len();
        let inputs = self
            .inputs
            .clone()
            .unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        let outputs = self
            .outputs
            .clone()
            .unwrap_or_else(|| (0..m).map(|j| j.to_string()).collect());
        Channel::with_labels(rows, inputs, outputs).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn constraint_set(&self) -> CliResult<ConstraintSet> {
        ConstraintSet::new(self.n_inputs(), self.constraints.clone()).map_err(CliError::Solver)
    }
}
