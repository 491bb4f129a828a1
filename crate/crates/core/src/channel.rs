//! Finite-alphabet distributions, discrete memoryless channels, and the
//! information measures built on them. All logarithms are natural (nats).

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};

/// Tolerance on `sum(mass) == 1` for a [`Distribution`].
pub const SUM_TOL: f64 = 1e-12;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some((i, v)) = mass
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {v}, expected a nonnegative number"
            )));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Distribution(mass))
    }

    /// Builds a distribution from a vector that is one up to rounding noise:
    /// negatives above `-1e-9` are clipped and the result is renormalized.
    pub fn from_approx(mut mass: Vec<f64>) -> Result<Self> {
        for v in mass.iter_mut() {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        let total: f64 = mass.iter().sum();
        if total > 0.0 && (total - 1.0).abs() < 1e-6 {
            for v in mass.iter_mut() {
                *v /= total;
            }
        }
        Distribution::new(mass)
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, index: usize) -> Self {
        let mut mass = vec![0.0; n];
        mass[index] = 1.0;
        Distribution(mass)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A direction in the input simplex: entries sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(Vec<f64>);

impl TangentVector {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        let total: f64 = delta.iter().sum();
        let scale = delta.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if !total.is_finite() || total.abs() > SUM_TOL * scale {
            return Err(Error::NotTangent(total));
        }
        Ok(TangentVector(delta))
    }

    /// `(to - from)`, which is always a tangent vector for two distributions.
    pub fn between(from: &Distribution, to: &Distribution) -> Result<Self> {
        if from.len() != to.len() {
            return Err(Error::DimensionMismatch {
                expected: from.len(),
                found: to.len(),
            });
        }
        Ok(TangentVector(linalg::sub(to.as_slice(), from.as_slice())))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    /// Unit-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| TangentVector(linalg::scaled(&self.0, 1.0 / n)))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_raw(delta: Vec<f64>) -> Self {
        TangentVector(delta)
    }
}

impl std::ops::Index<usize> for TangentVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A discrete memoryless channel `W(y|x)`: one row per input symbol.
///
/// Construction canonicalizes the channel by dropping output symbols that no
/// input can produce, so the capacity-achieving output distribution has full
/// support.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    dropped: Vec<String>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        Channel::with_labels(
            rows,
            (0..n).map(|i| i.to_string()).collect(),
            (0..m).map(|j| j.to_string()).collect(),
        )
    }

    pub fn with_labels(
        rows: Vec<Vec<f64>>,
        inputs: Vec<String>,
        outputs: Vec<String>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidChannel("no input symbols".into()));
        }
        let m = rows[0].len();
        if m == 0 {
            return Err(Error::InvalidChannel("no output symbols".into()));
        }
        if inputs.len() != rows.len() {
            return Err(Error::InvalidChannel(format!(
                "{} input labels for {} rows",
                inputs.len(),
                rows.len()
            )));
        }
        if outputs.len() != m {
            return Err(Error::InvalidChannel(format!(
                "{} output labels for {} columns",
                outputs.len(),
                m
            )));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has {} entries, expected {m}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has a negative or non-finite entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidChannel(format!(
                    "row {x} sums to {total}, expected 1"
                )));
            }
        }
        let keep: Vec<usize> = (0..m)
            .filter(|&y| rows.iter().any(|r| r[y] > 0.0))
            .collect();
        let dropped = (0..m)
            .filter(|y| !keep.contains(y))
            .map(|y| outputs[y].clone())
            .collect();
        let rows = rows
            .iter()
            .map(|r| keep.iter().map(|&y| r[y]).collect())
            .collect();
        let outputs = keep.iter().map(|&y| outputs[y].clone()).collect();
        Ok(Channel {
            rows,
            inputs,
            outputs,
            dropped,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn input_labels(&self) -> &[String] {
        &self.inputs
    }

    pub fn output_labels(&self) -> &[String] {
        &self.outputs
    }

    /// Output labels removed during canonicalization.
    pub fn dropped_outputs(&self) -> &[String] {
        &self.dropped
    }

    /// `sum_x W(.|x) v(x)` for an arbitrary input-indexed vector.
    pub fn push_forward(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outputs()];
        for (row, &vx) in self.rows.iter().zip(v) {
            if vx != 0.0 {
                linalg::axpy(vx, row, &mut out);
            }
        }
        out
    }

    /// `D(W(.|x) || q)` for every input `x`; `+inf` where the row charges an
    /// output with `q = 0`.
    pub fn row_divergences(&self, q: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| kl_raw(row, q)).collect()
    }

    /// `sum_y W(y|x) ln W(y|x)` per input (negative conditional entropy).
    pub(crate) fn neg_row_entropies(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().filter(|&&w| w > 0.0).map(|&w| w * w.ln()).sum())
            .collect()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                found: len,
            });
        }
        Ok(())
    }
}

/// `sum_i p_i ln(p_i / q_i)` without validation; `+inf` on a support violation.
pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            total += pi * (pi / qi).ln();
        }
    }
    total
}

/// Mutual information of an arbitrary (possibly slightly unnormalized) input vector.
pub(crate) fn mi_raw(channel: &Channel, p: &[f64]) -> f64 {
    let q = channel.push_forward(p);
    let value: f64 = channel
        .rows()
        .iter()
        .zip(p)
        .filter(|(_, &px)| px > 0.0)
        .map(|(row, &px)| px * kl_raw(row, &q))
        .sum();
    value.max(0.0)
}

/// Relative entropy `D(p || q)` in nats. Fails if `p` charges a symbol `q` does not.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    if let Some(index) = (0..p.len()).find(|&i| p[i] > 0.0 && q[i] <= 0.0) {
        return Err(Error::SupportViolation { index });
    }
    Ok(kl_raw(p.as_slice(), q.as_slice()).max(0.0))
}

/// The output distribution `q_p(y) = sum_x W(y|x) p(x)`.
pub fn output_distribution(channel: &Channel, p: &Distribution) -> Result<Distribution> {
    channel.check_input(p.len())?;
    Distribution::from_approx(channel.push_forward(p.as_slice()))
}

/// The information rate `I_W(p) = sum_x p(x) D(W(.|x) || q_p)`, in nats.
pub fn mutual_information(channel: &Channel, p: &Distribution) -> Result<f64> {
    channel.check_input(p.len())?;
    Ok(mi_raw(channel, p.as_slice()))
}

/// Orthonormal basis of the channel kernel `{v : sum_x W(y|x) v(x) = 0 for all y}`
/// intersected with the sum-zero hyperplane. Empty when the kernel is trivial.
pub fn kernel_basis(channel: &Channel) -> Vec<TangentVector> {
    let n = channel.n_inputs();
    let mut rows: Vec<Vec<f64>> = (0..channel.n_outputs())
        .map(|y| channel.rows().iter().map(|r| r[y]).collect())
        .collect();
    rows.push(vec![1.0; n]);
    linalg::null_space(&rows, n, RANK_TOL)
        .into_iter()
        .map(TangentVector::from_raw)
        .collect()
}
