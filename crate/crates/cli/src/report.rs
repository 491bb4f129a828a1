//! Machine-readable run reports.

use serde::ser::{Serialize, Serializer};
use serde::Serialize as DeriveSerialize;
use serde_json::value::RawValue;

/// A float written in scientific notation with 17 significant digits, which
/// is enough to recover the exact binary value. Non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sci(pub f64);

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw =
            RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn sci(v: &[f64]) -> Vec<Sci> {
    v.iter().copied().map(Sci).collect()
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct ChannelBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Output symbols no input can produce; they are removed before solving.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dropped_outputs: Vec<String>,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct SettingsBlock {
    pub units: &'static str,
    pub tol: Sci,
    pub support_tol: Sci,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<Sci>,
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct CapacityBlock {
    #[serde(rename = "C")]
    pub capacity: Sci,
    pub q_star: Vec<Sci>,
    pub p_witness: Vec<Sci>,
    pub residual: Sci,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct PiBlock {
    pub x_max: Vec<String>,
    pub dim_v: usize,
    pub representative: Vec<Sci>,
    pub constrained: bool,
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct CertificateBlock {
    pub alpha_hat: Sci,
    pub mu: Sci,
    pub min_direction: Vec<Sci>,
    pub base_point: Vec<Sci>,
    pub directions_sampled: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct ViolationEntry {
    pub index: usize,
    pub p: Vec<Sci>,
    #[serde(rename = "I")]
    pub value: Sci,
    pub bound: Sci,
    pub gap: Sci,
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct VerificationBlock {
    pub checked: usize,
    pub missed: usize,
    pub violations: usize,
    pub max_gap: Sci,
    pub status: &'static str,
    /// The first few violating points, in sample order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<ViolationEntry>,
}

#[derive(Debug, Clone, PartialEq, DeriveSerialize)]
pub struct RunReport {
    pub channel: ChannelBlock,
    pub settings: SettingsBlock,
    pub capacity: CapacityBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<PiBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationBlock>,
    /// `pass`, `fail` or `degenerate`; absent for capacity-only runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<&'static str>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_full_precision() {
        let values = [
            0.1,
            1.0 / 3.0,
            std::f64::consts::LN_2,
            5e-324,
            -1.7976931348623157e308,
            0.0,
        ];
        let text = serde_json::to_string(&sci(&values)).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits(), "{text}");
        }
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(
            serde_json::to_string(&Sci(f64::NEG_INFINITY)).unwrap(),
            "null"
        );
    }
}
