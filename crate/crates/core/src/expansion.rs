//! Second-order expansion of the information rate around the
//! capacity-achieving set.
//!
//! Around any `p*` with output `q*`,
//! `I(p* + t d) = C + <grad, d> t + (d' H d) t^2 + rho(t)`
//! where `H` is the half-Hessian (the true Hessian is `2H`) and
//! `|rho(t)| <= f(t) t^2` for `t < q_min / sqrt(|X|)`.

use crate::capacity::{CapacitySolution, PiSet};
use crate::channel::{mi_raw, Channel, Distribution, TangentVector};
use crate::error::{Error, Result};
use crate::geometry::project_raw;
use crate::linalg::{dot, sub};
use crate::polytope::clean;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionData {
    /// `D(W(.|x) || q*) - 1`.
    pub grad: Vec<f64>,
    /// `-sum_y W(y|x1) W(y|x2) / (2 q*(y))`.
    pub half_hessian: Vec<Vec<f64>>,
    pub q_min: f64,
    pub n_inputs: usize,
    pub n_outputs: usize,
    q_star: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

/// Output-space image `d_Y(y) = sum_x W(y|x) d(x)` of an input direction.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDirection {
    pub d_y: Vec<f64>,
}

impl OutputDirection {
    pub fn new(channel: &Channel, d: &TangentVector) -> Self {
        OutputDirection {
            d_y: channel.push_forward(d.as_slice()),
        }
    }
}

pub fn expansion_at(channel: &Channel, sol: &CapacitySolution) -> Result<ExpansionData> {
    let q = sol.q_star.as_slice();
    if q.len() != channel.n_outputs() {
        return Err(Error::DimensionMismatch {
            expected: channel.n_outputs(),
            found: q.len(),
        });
    }
    if let Some(y) = q.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroOutput(y));
    }
    let n = channel.n_inputs();
    let grad = channel
        .row_divergences(q)
        .into_iter()
        .map(|d| d - 1.0)
        .collect();
    let half_hessian = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    -channel
                        .row(a)
                        .iter()
                        .zip(channel.row(b))
                        .zip(q)
                        .map(|((wa, wb), qy)| wa * wb / (2.0 * qy))
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    Ok(ExpansionData {
        grad,
        half_hessian,
        q_min: q.iter().cloned().fold(f64::INFINITY, f64::min),
        n_inputs: n,
        n_outputs: channel.n_outputs(),
        q_star: q.to_vec(),
        rows: channel.rows().to_vec(),
    })
}

impl ExpansionData {
    /// `<grad, d>`.
    pub fn linear(&self, d: &[f64]) -> f64 {
        dot(&self.grad, d)
    }

    /// `d' H d`, evaluated as `-sum_y d_Y(y)^2 / (2 q*(y))` so that kernel
    /// directions give exactly zero.
    pub fn quadratic(&self, d: &[f64]) -> f64 {
        let mut total = 0.0;
        for (y, &qy) in self.q_star.iter().enumerate() {
            let dy: f64 = self.rows.iter().zip(d).map(|(r, dx)| r[y] * dx).sum();
            total -= dy * dy / (2.0 * qy);
        }
        total
    }

    /// Right end `q_min / sqrt(|X|)` of the envelope's domain.
    pub fn envelope_limit(&self) -> f64 {
        self.q_min / (self.n_inputs as f64).sqrt()
    }
}

/// `Phi(p) = (<grad, D> + D' H D) / |D|^2` with `D = p - p^Pi`.
pub fn phi(channel: &Channel, p: &Distribution, pi: &PiSet, exp: &ExpansionData) -> Result<f64> {
    if p.len() != channel.n_inputs() || p.len() != pi.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: channel.n_inputs(),
            found: p.len(),
        });
    }
    let (proj, dist) = project_raw(p.as_slice(), pi)?;
    if dist <= 1e-12 {
        return Err(Error::PointInPi(dist));
    }
    let delta = sub(p.as_slice(), &proj);
    Ok((exp.linear(&delta) + exp.quadratic(&delta)) / (dist * dist))
}

/// `f(t) = (|X||Y| / q_min) * sqrt(|X|) t / (q_min - sqrt(|X|) t)`.
pub fn remainder_envelope(exp: &ExpansionData, t: f64) -> Result<f64> {
    let limit = exp.envelope_limit();
    if t.is_nan() || t < 0.0 || t >= limit {
        return Err(Error::OutsideEnvelope { t, limit });
    }
    let root = (exp.n_inputs as f64).sqrt();
    let size = (exp.n_inputs * exp.n_outputs) as f64;
    Ok(size / exp.q_min * (root * t) / (exp.q_min - root * t))
}

/// Exact remainder `I(p* + t d) - C - <grad, d> t - (d' H d) t^2`, with the
/// information rate evaluated directly.
pub fn taylor_remainder(
    channel: &Channel,
    p_star: &Distribution,
    d: &TangentVector,
    t: f64,
    exp: &ExpansionData,
    capacity: f64,
) -> Result<f64> {
    let n = channel.n_inputs();
    if p_star.len() != n || d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if p_star.len() != n {
                p_star.len()
            } else {
                d.len()
            },
        });
    }
    if (d.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "direction must have unit norm, got {}",
            d.norm()
        )));
    }
    let limit = exp.envelope_limit();
    if t.is_nan() || t < 0.0 || t >= limit {
        return Err(Error::OutsideEnvelope { t, limit });
    }
    let mut p: Vec<f64> = p_star
        .as_slice()
        .iter()
        .zip(d.as_slice())
        .map(|(a, b)| a + t * b)
        .collect();
    if p.iter().any(|&v| v < -1e-12) {
        return Err(Error::InfeasiblePoint);
    }
    clean(&mut p);
    let value = mi_raw(channel, &p);
    let dv = d.as_slice();
    Ok(value - capacity - exp.linear(dv) * t - exp.quadratic(dv) * t * t)
}

/// Largest eigenvalue of the half-Hessian; nonpositive up to rounding.
pub fn max_curvature(exp: &ExpansionData) -> f64 {
    crate::linalg::max_eigenvalue(&exp.half_hessian)
}
