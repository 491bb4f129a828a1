//! Quadratic-decay certificates `I(p) <= C - alpha |p - p^Pi|^2` for inputs
//! within distance `mu` of the capacity-achieving set, and their empirical
//! verification.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::capacity::PiSet;
use crate::channel::{mi_raw, Channel, Distribution, TangentVector};
use crate::error::{Error, Result};
use crate::expansion::{remainder_envelope, ExpansionData};
use crate::geometry::{
    cone_membership, project_onto_cone, project_raw, sample_valid_directions, support_sets,
    valid_direction_cone, ConeDescription, SupportSets, MEMBERSHIP_TOL, ZERO_TOL,
};
use crate::linalg::{self, norm};
use crate::polytope::clean;
use crate::rng;

/// Number of best samples used as refinement starts.
const RESTARTS: usize = 10;
/// Extra starts, one per distinct support pattern not already covered.
const PATTERN_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCertificate {
    pub alpha_hat: f64,
    pub mu: f64,
    pub min_direction: TangentVector,
    pub base_point: Distribution,
    pub sample_count: usize,
    pub seed: u64,
    pub constrained: bool,
    /// Capacity the bound is anchored to.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate {
    pub alpha_hat: f64,
    pub min_direction: TangentVector,
    pub base_point: Distribution,
    /// Valid directions actually drawn.
    pub sampled: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub p: Vec<f64>,
    pub value: f64,
    pub bound: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Largest `I(p) - bound(p)` over checked points.
    pub max_gap: f64,
    pub status: Status,
    /// Samples that failed to land in the neighbourhood.
    pub missed: usize,
}

/// `alpha(d) = -(<grad, d> + d' H d) / 2`.
pub fn alpha_of_direction(d: &TangentVector, exp: &ExpansionData) -> f64 {
    alpha_raw(d.as_slice(), exp)
}

fn alpha_raw(d: &[f64], exp: &ExpansionData) -> f64 {
    -(exp.linear(d) + exp.quadratic(d)) / 2.0
}

/// Minimum of `alpha` over sampled valid directions, refined locally by
/// projected gradient on the unit sphere inside each start's cone and
/// compared against an exact search over the faces of each distinct cone.
pub fn estimate_alpha(
    channel: &Channel,
    pi: &PiSet,
    exp: &ExpansionData,
    samples: usize,
    seed: u64,
) -> Result<AlphaEstimate> {
    if exp.n_inputs != channel.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: channel.n_inputs(),
            found: exp.n_inputs,
        });
    }
    let draws = sample_valid_directions(pi, pi.feasible(), samples, seed)?;
    let alphas: Vec<f64> = draws
        .iter()
        .map(|(_, d)| alpha_of_direction(d, exp))
        .collect();
    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.sort_by(|&a, &b| alphas[a].total_cmp(&alphas[b]).then(a.cmp(&b)));

    let constraints = pi.constraint_set.as_ref();
    let patterns: Vec<SupportSets> = draws
        .iter()
        .map(|(p, _)| support_sets(p, constraints, ZERO_TOL))
        .collect();
    let mut starts: Vec<usize> = order.iter().take(RESTARTS).copied().collect();
    let mut best_per_pattern: BTreeMap<&SupportSets, usize> = BTreeMap::new();
    for &i in &order {
        best_per_pattern.entry(&patterns[i]).or_insert(i);
    }
    let mut extra: Vec<usize> = best_per_pattern
        .values()
        .copied()
        .filter(|i| !starts.contains(i))
        .collect();
    extra.sort_by(|&a, &b| alphas[a].total_cmp(&alphas[b]).then(a.cmp(&b)));
    starts.extend(extra.into_iter().take(PATTERN_RESTARTS));

    let refined: Vec<Option<(f64, Vec<f64>)>> = starts
        .par_iter()
        .map(|&i| {
            let cone = valid_direction_cone(pi, &patterns[i]);
            let (value, d) = refine(draws[i].1.as_slice(), &cone, exp).ok()?;
            (value < alphas[i]).then_some((value, d))
        })
        .collect();

    let mut best = (
        alphas[order[0]],
        draws[order[0]].1.as_slice().to_vec(),
        order[0],
    );
    for (&i, r) in starts.iter().zip(refined) {
        if let Some((value, d)) = r {
            if value < best.0 {
                best = (value, d, i);
            }
        }
    }
    let mut searched: Vec<&SupportSets> = Vec::new();
    let mut distinct = Vec::new();
    for &i in &starts {
        if !searched.contains(&&patterns[i]) {
            searched.push(&patterns[i]);
            distinct.push(i);
        }
    }
    let exact: Vec<Option<(f64, Vec<f64>)>> = distinct
        .par_iter()
        .map(|&i| face_search(&valid_direction_cone(pi, &patterns[i]), exp))
        .collect();
    for (&i, r) in distinct.iter().zip(exact) {
        if let Some((value, d)) = r {
            if value < best.0 {
                best = (value, d, i);
            }
        }
    }
    let (alpha_hat, direction, index) = best;
    if alpha_hat.is_nan() || alpha_hat <= 0.0 {
        return Err(Error::NonPositiveAlpha { alpha: alpha_hat });
    }
    Ok(AlphaEstimate {
        alpha_hat,
        min_direction: TangentVector::from_raw(direction),
        base_point: draws[index].0.clone(),
        sampled: draws.len(),
    })
}

/// Projected-gradient descent of `alpha` over the unit sphere intersected with
/// the cone; the result is kept only if it passes the membership test.
fn refine(
    start: &[f64],
    cone: &crate::geometry::ConeDescription,
    exp: &ExpansionData,
) -> Result<(f64, Vec<f64>)> {
    let mut d = start.to_vec();
    let mut value = alpha_raw(&d, exp);
    let mut step = 0.1;
    for _ in 0..300 {
        // gradient of alpha: -(grad + 2 H d) / 2
        let hd: Vec<f64> = exp
            .half_hessian
            .iter()
            .map(|row| linalg::dot(row, &d))
            .collect();
        let g: Vec<f64> = exp
            .grad
            .iter()
            .zip(&hd)
            .map(|(a, b)| -(a + 2.0 * b) / 2.0)
            .collect();
        let trial = linalg::combine(&[d.clone(), g], &[1.0, -step], d.len());
        let projected = project_onto_cone(&trial, cone)?;
        let l = norm(&projected);
        if l < 1e-12 {
            step *= 0.5;
        } else {
            let candidate: Vec<f64> = projected.iter().map(|v| v / l).collect();
            let cv = alpha_raw(&candidate, exp);
            if cv < value - 1e-15 {
                let moved = norm(&linalg::sub(&candidate, &d));
                d = candidate;
                value = cv;
                step *= 1.5;
                if moved < 1e-12 {
                    break;
                }
                continue;
            }
            step *= 0.5;
        }
        if step < 1e-10 {
            break;
        }
    }
    let member = cone_membership(&TangentVector::from_raw(d.clone()), cone, MEMBERSHIP_TOL)?;
    if !member {
        return Err(Error::Degenerate);
    }
    Ok((value, d))
}

/// Faces visited per support pattern. Beyond this the sampled search is all
/// there is.
const MAX_FACES: usize = 1 << 12;

/// Minimum of `alpha` over unit vectors of the cone, taken over the stationary
/// points of `alpha` on the unit sphere of every face cut out by the sign
/// constraints. Exact unless the minimizer sits on the boundary contributed by
/// the capacity-achieving set itself.
fn face_search(cone: &ConeDescription, exp: &ExpansionData) -> Option<(f64, Vec<f64>)> {
    let n = exp.n_inputs;
    let mut sides: Vec<Vec<f64>> = cone
        .x_zero
        .iter()
        .map(|&x| {
            let mut e = vec![0.0; n];
            e[x] = 1.0;
            e
        })
        .collect();
    sides.extend(cone.a_zero.iter().cloned());
    if 1usize.checked_shl(sides.len() as u32)? > MAX_FACES {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0..1usize << sides.len() {
        let mut rows = cone.equalities.clone();
        rows.extend(
            (0..sides.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| sides[k].clone()),
        );
        let basis = linalg::null_space(&rows, n, linalg::RANK_TOL);
        if basis.is_empty() {
            continue;
        }
        for z in sphere_stationary_points(&basis, exp) {
            let d = linalg::combine(&basis, &z, n);
            let l = norm(&d);
            if l < 0.5 {
                continue;
            }
            let d: Vec<f64> = d.iter().map(|v| v / l).collect();
            let value = alpha_raw(&d, exp);
            if best.as_ref().is_some_and(|(b, _)| *b <= value) {
                continue;
            }
            let member = cone_membership(&TangentVector::from_raw(d.clone()), cone, MEMBERSHIP_TOL);
            if member.unwrap_or(false) {
                best = Some((value, d));
            }
        }
    }
    best
}

/// Stationary points of `alpha(U z)` on `|z| = 1` for an orthonormal `U`.
/// With `alpha(U z) = <b, z> + z' A z` they solve `(A - lambda) z = -b / 2`.
fn sphere_stationary_points(basis: &[Vec<f64>], exp: &ExpansionData) -> Vec<Vec<f64>> {
    let k = basis.len();
    let b: Vec<f64> = basis.iter().map(|u| -exp.linear(u) / 2.0).collect();
    let hu: Vec<Vec<f64>> = basis
        .iter()
        .map(|u| {
            exp.half_hessian
                .iter()
                .map(|row| linalg::dot(row, u))
                .collect()
        })
        .collect();
    let a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| -linalg::dot(&basis[i], &hu[j]) / 2.0)
                .collect()
        })
        .collect();
    let (m, q) = linalg::symmetric_eigen(&a);
    let beta: Vec<f64> = q.iter().map(|v| linalg::dot(v, &b)).collect();
    let scale = norm(&b)
        .max(m.iter().fold(0.0f64, |s, v| s.max(v.abs())))
        .max(1e-300);
    let tiny = 1e-12 * scale;
    let in_eigenbasis = |w: &[f64]| -> Vec<f64> { linalg::combine(&q, w, k) };
    let at = |lambda: f64| -> Vec<f64> {
        (0..k)
            .map(|i| {
                if beta[i].abs() <= tiny {
                    0.0
                } else {
                    -beta[i] / (2.0 * (m[i] - lambda))
                }
            })
            .collect()
    };
    let psi = |lambda: f64| -> f64 { norm(&at(lambda)).powi(2) - 1.0 };
    let dpsi = |lambda: f64| -> f64 {
        (0..k)
            .filter(|&i| beta[i].abs() > tiny)
            .map(|i| beta[i] * beta[i] / (2.0 * (m[i] - lambda).powi(3)))
            .sum()
    };
    let bisect = |mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let rising = f(hi) > f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (f(mid) > 0.0) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut out = Vec::new();
    let mut poles: Vec<f64> = (0..k)
        .filter(|&i| beta[i].abs() > tiny)
        .map(|i| m[i])
        .collect();
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|a, b| (*a - *b).abs() <= tiny);
    let reach = norm(&b) / 2.0;
    let mut lambdas = Vec::new();
    if let (Some(&first), Some(&last)) = (poles.first(), poles.last()) {
        let gap = |p: f64| 1e-15 * p.abs().max(scale);
        lambdas.push(bisect(first - reach - gap(first), first - gap(first), &psi));
        lambdas.push(bisect(last + gap(last), last + reach + gap(last), &psi));
        for pair in poles.windows(2) {
            let (lo, hi) = (pair[0] + gap(pair[0]), pair[1] - gap(pair[1]));
            if lo >= hi {
                continue;
            }
            let bottom = bisect(lo, hi, &dpsi);
            if psi(bottom) < 0.0 {
                lambdas.push(bisect(lo, bottom, &psi));
                lambdas.push(bisect(bottom, hi, &psi));
            }
        }
    }
    for lambda in lambdas {
        out.push(in_eigenbasis(&at(lambda)));
    }
    // eigenvalues the linear term does not see: the stationary points form a
    // sphere of which the axis points are taken
    for i in (0..k).filter(|&i| beta[i].abs() <= tiny) {
        let mut w = at(m[i]);
        for (j, wj) in w.iter_mut().enumerate() {
            if (m[j] - m[i]).abs() <= tiny {
                *wj = 0.0;
            }
        }
        let rest = 1.0 - norm(&w).powi(2);
        if rest >= 0.0 {
            for sign in [1.0, -1.0] {
                let mut v = w.clone();
                v[i] = sign * rest.sqrt();
                out.push(in_eigenbasis(&v));
            }
        }
    }
    out
}

/// Closed-form solution of `f(mu) = alpha_hat`:
/// `mu = alpha q_min^2 / (sqrt|X| (|X||Y| + alpha q_min))`.
pub fn compute_mu(alpha_hat: f64, exp: &ExpansionData) -> f64 {
    let root = (exp.n_inputs as f64).sqrt();
    let size = (exp.n_inputs * exp.n_outputs) as f64;
    alpha_hat * exp.q_min * exp.q_min / (root * (size + alpha_hat * exp.q_min))
}

/// Estimates alpha and derives mu for the given capacity.
pub fn certify(
    channel: &Channel,
    pi: &PiSet,
    exp: &ExpansionData,
    capacity: f64,
    samples: usize,
    seed: u64,
) -> Result<QuadraticCertificate> {
    let est = estimate_alpha(channel, pi, exp, samples, seed)?;
    let mu = compute_mu(est.alpha_hat, exp);
    debug_assert!(mu < exp.envelope_limit());
    debug_assert!(remainder_envelope(exp, mu * (1.0 - 1e-12))
        .is_ok_and(|f| f <= est.alpha_hat * (1.0 + 1e-12)));
    Ok(QuadraticCertificate {
        alpha_hat: est.alpha_hat,
        mu,
        min_direction: est.min_direction,
        base_point: est.base_point,
        sample_count: est.sampled,
        seed,
        constrained: pi.constrained,
        capacity,
    })
}

/// Distance to the set, the point, `I(p)` and the certified bound.
type Checked = (f64, Vec<f64>, f64, f64);

const RADII: [f64; 4] = [1.0, 0.5, 0.1, 0.01];
const ATTEMPTS: usize = 32;

/// Checks `I(p) <= C - alpha_hat |p - p^Pi|^2 + slack` on feasible points
/// within distance `mu` of the set. Sample `i` is drawn by kind `i mod 8`:
/// members of the set, radial points at distances `mu, mu/2, mu/10, mu/100`
/// along sampled valid directions, perturbations of members, and
/// face-restricted radial points.
pub fn verify_theorem(
    channel: &Channel,
    pi: &PiSet,
    certificate: &QuadraticCertificate,
    samples: usize,
    seed: u64,
    slack: f64,
) -> Result<VerificationReport> {
    if pi.n_inputs() != channel.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: channel.n_inputs(),
            found: pi.n_inputs(),
        });
    }
    let mu = certificate.mu;
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {mu}"
        )));
    }
    let results: Vec<Option<Checked>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, rng::VERIFY, i as u64);
            for _ in 0..ATTEMPTS {
                let Some(p) = draw(pi, mu, i % 8, &mut rng) else {
                    continue;
                };
                let Ok((_, dist)) = project_raw(&p, pi) else {
                    continue;
                };
                // radial draws at exactly mu land there only up to rounding
                if dist > mu + 1e-14 {
                    continue;
                }
                let value = mi_raw(channel, &p);
                let bound = certificate.capacity - certificate.alpha_hat * dist * dist;
                return Some((dist, p, value, bound));
            }
            None
        })
        .collect();

    let mut checked = 0;
    let mut missed = 0;
    let mut max_gap = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            None => missed += 1,
            Some((_, p, value, bound)) => {
                checked += 1;
                let gap = value - bound;
                max_gap = max_gap.max(gap);
                if gap > slack {
                    violations.push(Violation {
                        index,
                        p,
                        value,
                        bound,
                        gap,
                    });
                }
            }
        }
    }
    if checked == 0 && samples > 0 {
        return Err(Error::NeighbourhoodMiss {
            mu,
            attempts: samples * ATTEMPTS,
        });
    }
    let status = if violations.is_empty() {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(VerificationReport {
        checked,
        violations,
        max_gap,
        status,
        missed,
    })
}

fn draw<R: Rng + ?Sized>(pi: &PiSet, mu: f64, kind: usize, rng: &mut R) -> Option<Vec<f64>> {
    let feasible = pi.feasible();
    let mut p = match kind {
        0 => pi.random_member(rng),
        1..=4 => {
            let (base, d) = valid_direction(pi, rng, false)?;
            let r = mu * RADII[kind - 1];
            step_along(feasible, &base, &d, r)?
        }
        5 | 6 => {
            // toward a random feasible point, so the step stays feasible
            let base = pi.random_member(rng);
            let target = feasible.sample_interior(rng);
            let dir = linalg::sub(&target, &base);
            let l = norm(&dir);
            if l < 1e-12 {
                return None;
            }
            let r = mu * rng.random::<f64>();
            step_along(feasible, &base, &linalg::scaled(&dir, 1.0 / l), r)?
        }
        _ => {
            let (base, d) = valid_direction(pi, rng, true)?;
            let r = mu * rng.random::<f64>();
            step_along(feasible, &base, &d, r)?
        }
    };
    clean(&mut p);
    feasible.contains(&p, 1e-12).then_some(p)
}

fn valid_direction<R: Rng + ?Sized>(
    pi: &PiSet,
    rng: &mut R,
    boundary: bool,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let feasible = pi.feasible();
    let p = if boundary {
        feasible.sample_boundary(rng)
    } else {
        feasible.sample_interior(rng)
    };
    let (proj, dist) = project_raw(&p, pi).ok()?;
    if dist < 1e-12 {
        return None;
    }
    Some((
        proj.clone(),
        linalg::scaled(&linalg::sub(&p, &proj), 1.0 / dist),
    ))
}

/// `base + r d`, shortened to stay feasible.
fn step_along(
    feasible: &crate::polytope::InputPolytope,
    base: &[f64],
    d: &[f64],
    r: f64,
) -> Option<Vec<f64>> {
    let (_, hi) = feasible.chord(base, d);
    let r = r.min(hi.max(0.0));
    if r <= 0.0 {
        return None;
    }
    Some(base.iter().zip(d).map(|(b, v)| b + r * v).collect())
}
