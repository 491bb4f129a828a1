//! The `capacity`, `certify` and `scan` pipelines.

use std::f64::consts::LN_2;

use capcert_core::{
    capacity_achieving_set, certify, constrained_pi_set, expansion_at, mutual_information,
    remainder_envelope, sample_valid_directions, solve_capacity, verify_theorem, CapacitySolution,
    Channel, ConstraintSet, Distribution, Error, PiSet, Status, TangentVector,
};

use crate::error::{CliError, CliResult};
use crate::report::*;
use crate::spec::ChannelSpecFile;

/// Violating points copied into a report.
const REPORTED_VIOLATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub tol: f64,
    pub support_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub slack: f64,
    /// Display information quantities in bits instead of nats.
    pub bits: bool,
    pub max_iter: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: 1e-9,
            support_tol: capcert_core::DEFAULT_SUPPORT_TOL,
            samples: 10_000,
            seed: 0,
            slack: 1e-9,
            bits: false,
            max_iter: 1_000_000,
        }
    }
}

impl Options {
    fn scale(&self) -> f64 {
        if self.bits {
            1.0 / LN_2
        } else {
            1.0
        }
    }

    fn units(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

struct Loaded {
    channel: Channel,
    constraints: ConstraintSet,
    solution: CapacitySolution,
}

fn load(spec: &ChannelSpecFile, opts: &Options) -> CliResult<Loaded> {
    let channel = spec.channel()?;
    let constraints = spec.constraint_set()?;
    let solution = solve_capacity(
        &channel,
        &constraints,
        opts.tol,
        opts.max_iter,
        opts.support_tol,
    )?;
    Ok(Loaded {
        channel,
        constraints,
        solution,
    })
}

fn pi_set(run: &Loaded, opts: &Options) -> CliResult<PiSet> {
    let pi = if run.constraints.is_empty() {
        capacity_achieving_set(&run.channel, &run.solution, opts.support_tol)?
    } else {
        constrained_pi_set(
            &run.channel,
            &run.constraints,
            &run.solution,
            opts.support_tol,
        )?
    };
    Ok(pi)
}

fn base_report(spec: &ChannelSpecFile, run: &Loaded, opts: &Options, full: bool) -> RunReport {
    let sol = &run.solution;
    let scale = opts.scale();
    RunReport {
        channel: ChannelBlock {
            name: spec.name.clone(),
            inputs: run.channel.input_labels().to_vec(),
            outputs: run.channel.output_labels().to_vec(),
            dropped_outputs: run.channel.dropped_outputs().to_vec(),
            constraints: run.constraints.len(),
        },
        settings: SettingsBlock {
            units: opts.units(),
            tol: Sci(opts.tol),
            support_tol: Sci(opts.support_tol),
            samples: full.then_some(opts.samples),
            seed: full.then_some(opts.seed),
            slack: full.then_some(Sci(opts.slack)),
        },
        capacity: CapacityBlock {
            capacity: Sci(sol.capacity * scale),
            q_star: sci(sol.q_star.as_slice()),
            p_witness: sci(sol.p_witness.as_slice()),
            residual: Sci(sol.residual * scale),
            iterations: sol.iterations,
        },
        pi: None,
        certificate: None,
        verification: None,
        status: None,
    }
}

/// Capacity (constrained when the file lists constraints) and its output distribution.
pub fn cmd_capacity(spec: &ChannelSpecFile, opts: &Options) -> CliResult<RunReport> {
    let run = load(spec, opts)?;
    Ok(base_report(spec, &run, opts, false))
}

/// Full pipeline: capacity, capacity-achieving set, expansion, certificate and
/// sampled verification. Channels where every feasible input achieves
/// capacity get status `degenerate` and no certificate.
pub fn cmd_certify(spec: &ChannelSpecFile, opts: &Options) -> CliResult<RunReport> {
    let run = load(spec, opts)?;
    let pi = pi_set(&run, opts)?;
    let mut report = base_report(spec, &run, opts, true);
    let labels = run.channel.input_labels();
    report.pi = Some(PiBlock {
        x_max: pi.x_max.iter().map(|&x| labels[x].clone()).collect(),
        dim_v: pi.dim(),
        representative: sci(pi.representative.as_slice()),
        constrained: pi.constrained,
    });
    if pi.covers_feasible() {
        report.status = Some("degenerate");
        return Ok(report);
    }
    let exp = expansion_at(&run.channel, &run.solution)?;
    let cert = match certify(
        &run.channel,
        &pi,
        &exp,
        run.solution.capacity,
        opts.samples,
        opts.seed,
    ) {
        Err(Error::Degenerate) => {
            report.status = Some("degenerate");
            return Ok(report);
        }
        other => other?,
    };
    let verdict = verify_theorem(
        &run.channel,
        &pi,
        &cert,
        opts.samples,
        opts.seed,
        opts.slack,
    )?;
    let scale = opts.scale();
    report.certificate = Some(CertificateBlock {
        alpha_hat: Sci(cert.alpha_hat * scale),
        mu: Sci(cert.mu),
        min_direction: sci(cert.min_direction.as_slice()),
        base_point: sci(cert.base_point.as_slice()),
        directions_sampled: cert.sample_count,
        seed: cert.seed,
    });
    report.verification = Some(VerificationBlock {
        checked: verdict.checked,
        missed: verdict.missed,
        violations: verdict.violations.len(),
        max_gap: Sci(verdict.max_gap * scale),
        status: verdict.status.as_str(),
        examples: verdict
            .violations
            .iter()
            .take(REPORTED_VIOLATIONS)
            .map(|v| ViolationEntry {
                index: v.index,
                p: sci(&v.p),
                value: Sci(v.value * scale),
                bound: Sci(v.bound * scale),
                gap: Sci(v.gap * scale),
            })
            .collect(),
    });
    report.status = Some(match verdict.status {
        Status::Pass => "pass",
        Status::Fail => "fail",
    });
    Ok(report)
}

/// Direction for a scan.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanDirection {
    /// The `i`-th sampled valid direction (seeded by `--seed`), from its own base point.
    Sampled(usize),
    /// A user direction, normalized, from the representative of the set.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub t: f64,
    /// `None` when `p* + t d` leaves the feasible polytope.
    pub rate: Option<f64>,
    pub model: f64,
    /// `None` outside the envelope domain.
    pub bound: Option<f64>,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub base_point: Vec<f64>,
    pub direction: Vec<f64>,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    /// CSV with header `t,I,model,bound,note` and LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let num = |v: f64| format!("{v:.16e}");
        w.write_record(["t", "I", "model", "bound", "note"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                num(r.t),
                r.rate.map(num).unwrap_or_default(),
                num(r.model),
                r.bound.map(num).unwrap_or_default(),
                r.note.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// Tabulates `I(p* + t d)`, the quadratic model `I(p*) + <grad, d> t + d'Hd t^2`
/// and the remainder bound `f(t) t^2` on a grid of `t`.
pub fn cmd_scan(
    spec: &ChannelSpecFile,
    opts: &Options,
    direction: &ScanDirection,
    ts: &[f64],
) -> CliResult<ScanTable> {
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(CliError::Parse(format!(
            "step sizes must be finite and nonnegative, got {t}"
        )));
    }
    let run = load(spec, opts)?;
    let pi = pi_set(&run, opts)?;
    let exp = expansion_at(&run.channel, &run.solution)?;
    let (base, d) = match direction {
        ScanDirection::Sampled(i) => {
            let draws = sample_valid_directions(&pi, pi.feasible(), i + 1, opts.seed)?;
            let (p, d) = draws
                .into_iter()
                .nth(*i)
                .ok_or(CliError::Solver(Error::Degenerate))?;
            (p.into_vec(), d.into_vec())
        }
        ScanDirection::Explicit(v) => {
            if v.len() != run.channel.n_inputs() {
                return Err(CliError::Parse(format!(
                    "direction has {} entries, expected {}",
                    v.len(),
                    run.channel.n_inputs()
                )));
            }
            let d = TangentVector::new(v.clone())
                .ok()
                .and_then(|d| d.normalized())
                .ok_or_else(|| {
                    CliError::Parse("direction must be nonzero with entries summing to zero".into())
                })?;
            (pi.representative.as_slice().to_vec(), d.into_vec())
        }
    };
    let scale = opts.scale();
    let rate_at = |p: Vec<f64>| -> Option<f64> {
        if !pi.feasible().contains(&p, 1e-12) {
            return None;
        }
        let p = Distribution::from_approx(p.iter().map(|v| v.max(0.0)).collect()).ok()?;
        mutual_information(&run.channel, &p).ok()
    };
    let anchor = rate_at(base.clone()).ok_or(CliError::Solver(Error::InfeasiblePoint))?;
    let lin = exp.linear(&d);
    let quad = exp.quadratic(&d);
    let limit = exp.envelope_limit();
    let rows = ts
        .iter()
        .map(|&t| {
            let p: Vec<f64> = base.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let rate = rate_at(p);
            let bound = (t < limit)
                .then(|| remainder_envelope(&exp, t).ok().map(|f| f * t * t))
                .flatten();
            let note = match (rate, bound) {
                (None, _) => "infeasible",
                (_, None) => "out-of-domain",
                _ => "",
            };
            ScanRow {
                t,
                rate: rate.map(|v| v * scale),
                model: (anchor + lin * t + quad * t * t) * scale,
                bound: bound.map(|v| v * scale),
                note,
            }
        })
        .collect();
    Ok(ScanTable {
        base_point: base,
        direction: d,
        rows,
    })
}
