//! Channel capacity, the capacity-achieving output distribution, and
//! polyhedral descriptions of the set of capacity-achieving inputs.
//!
//! Unconstrained capacity comes from Blahut-Arimoto. Capacity under linear
//! input constraints `<p, a> >= 0` comes from an away-step conditional-gradient
//! method whose linear subproblem is an LP over the constraint polytope. Both
//! stop on a certified duality gap. [`polish_solution`] then runs a Newton
//! iteration on the optimal face, which drives the gap to rounding level.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{mi_raw, Channel, Distribution, TangentVector};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, RANK_TOL};
use crate::lp::{Cmp, LinearProgram};
use crate::polytope::{self, clean, InputPolytope};

/// Default threshold separating capacity-achieving inputs from the rest.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-7;

/// Linear input constraints, each vector `a` encoding `<p, a> >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    vectors: Vec<Vec<f64>>,
}

impl ConstraintSet {
    /// Validates dimensions and checks by LP that the constrained simplex is nonempty.
    pub fn new(n_inputs: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        for a in &vectors {
            if a.len() != n_inputs {
                return Err(Error::DimensionMismatch {
                    expected: n_inputs,
                    found: a.len(),
                });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "constraint vector has a non-finite entry".into(),
                ));
            }
        }
        if !vectors.is_empty() {
            polytope::check_feasible(n_inputs, &vectors)?;
        }
        Ok(ConstraintSet { vectors })
    }

    pub fn empty() -> Self {
        ConstraintSet::default()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Result of a capacity computation. `capacity` is the information rate of
/// `p_witness` and `residual` bounds how far it can be below the true optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySolution {
    pub capacity: f64,
    pub q_star: Distribution,
    pub p_witness: Distribution,
    pub iterations: usize,
    pub residual: f64,
}

/// Rows and right-hand sides of an affine equality system `matrix * p = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualitySystem {
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl EqualitySystem {
    pub fn max_residual(&self, p: &[f64]) -> f64 {
        self.matrix
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (dot(row, p) - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Polyhedral description of the capacity-achieving inputs `(representative + V)`
/// intersected with the feasible polytope.
#[derive(Debug, Clone)]
pub struct PiSet {
    /// Inputs that may carry mass in a capacity-achieving distribution.
    pub x_max: Vec<usize>,
    pub equality_constraints: EqualitySystem,
    /// Orthonormal basis of the subspace parallel to the set.
    pub v_basis: Vec<TangentVector>,
    pub representative: Distribution,
    pub constrained: bool,
    pub constraint_set: Option<ConstraintSet>,
    feasible: InputPolytope,
    coord_rows: Vec<Vec<f64>>,
    coord_rhs: Vec<f64>,
}

impl PiSet {
    fn build(
        representative: Vec<f64>,
        basis: Vec<Vec<f64>>,
        x_max: Vec<usize>,
        equality_constraints: EqualitySystem,
        constraint_set: Option<ConstraintSet>,
        feasible: InputPolytope,
    ) -> Result<Self> {
        let n = representative.len();
        let mut coord_rows = Vec::new();
        let mut coord_rhs = Vec::new();
        if !basis.is_empty() {
            for x in 0..n {
                let row: Vec<f64> = basis.iter().map(|v| v[x]).collect();
                if norm(&row) > 1e-14 {
                    coord_rows.push(row);
                    coord_rhs.push(-representative[x]);
                }
            }
            for a in feasible.constraints() {
                let scale = norm(a).max(1.0);
                let row: Vec<f64> = basis.iter().map(|v| dot(a, v) / scale).collect();
                if norm(&row) > 1e-14 {
                    coord_rows.push(row);
                    coord_rhs.push(-dot(a, &representative) / scale);
                }
            }
        }
        Ok(PiSet {
            x_max,
            equality_constraints,
            v_basis: basis.into_iter().map(TangentVector::from_raw).collect(),
            representative: Distribution::from_approx(representative)?,
            constrained: constraint_set.is_some(),
            constraint_set,
            feasible,
            coord_rows,
            coord_rhs,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.representative.len()
    }

    /// Dimension of the parallel subspace V.
    pub fn dim(&self) -> usize {
        self.v_basis.len()
    }

    /// The polytope of admissible inputs this set lives in.
    pub fn feasible(&self) -> &InputPolytope {
        &self.feasible
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.feasible.contains(p, tol) && self.equality_constraints.max_residual(p) <= tol
    }

    /// True when every feasible input is capacity-achieving, so there are no
    /// directions pointing away from the set.
    pub fn covers_feasible(&self) -> bool {
        let basis = self.basis_vectors();
        self.feasible
            .hull_basis()
            .iter()
            .all(|h| norm(&linalg::reject(&basis, h)) <= 1e-9)
    }

    pub(crate) fn basis_vectors(&self) -> Vec<Vec<f64>> {
        self.v_basis.iter().map(|v| v.as_slice().to_vec()).collect()
    }

    /// The set in basis coordinates: `{c : rows * c >= rhs}`.
    pub(crate) fn coord_polytope(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.coord_rows, &self.coord_rhs)
    }

    pub(crate) fn point_at(&self, c: &[f64]) -> Vec<f64> {
        let mut p = self.representative.as_slice().to_vec();
        for (v, &ci) in self.v_basis.iter().zip(c) {
            linalg::axpy(ci, v.as_slice(), &mut p);
        }
        p
    }

    /// A member of the set: a random point on a random line through the
    /// representative, taken at the boundary half of the time.
    pub(crate) fn random_member<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.dim();
        if k == 0 {
            return self.representative.as_slice().to_vec();
        }
        let w: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (row, &b) in self.coord_rows.iter().zip(&self.coord_rhs) {
            let rate = dot(row, &w);
            let slack = (-b).max(0.0);
            if rate > 1e-15 {
                lo = lo.max(-slack / rate);
            } else if rate < -1e-15 {
                hi = hi.min(slack / -rate);
            }
        }
        let (lo, hi) = (lo.min(0.0), hi.max(0.0));
        let s = if !lo.is_finite() || !hi.is_finite() {
            0.0
        } else if rng.random::<bool>() {
            if rng.random::<bool>() {
                lo
            } else {
                hi
            }
        } else {
            lo + (hi - lo) * rng.random::<f64>()
        };
        let c: Vec<f64> = w.iter().map(|x| x * s).collect();
        let mut p = self.point_at(&c);
        clean(&mut p);
        p
    }
}

/// Blahut-Arimoto iteration from the uniform input.
///
/// Stops once `max_x D(W(.|x) || q_k) - I(p_k) <= tol`; the left term is an
/// upper bound on capacity and `I(p_k)` a lower bound, so the reported
/// capacity is within `tol` of the true value.
pub fn blahut_arimoto(channel: &Channel, tol: f64, max_iter: usize) -> Result<CapacitySolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = channel.n_inputs();
    let mut p = vec![1.0 / n as f64; n];
    let mut previous = f64::NEG_INFINITY;
    for iteration in 0..=max_iter {
        let q = channel.push_forward(&p);
        let d = channel.row_divergences(&q);
        let lower = p
            .iter()
            .zip(&d)
            .filter(|(&px, _)| px > 0.0)
            .map(|(px, dx)| px * dx)
            .sum::<f64>();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        debug_assert!(
            lower >= previous - 1e-12,
            "Blahut-Arimoto lower bound decreased: {previous} -> {lower}"
        );
        previous = lower;
        let residual = (upper - lower).max(0.0);
        if residual <= tol {
            return Ok(CapacitySolution {
                capacity: lower.max(0.0),
                q_star: Distribution::from_approx(q)?,
                p_witness: Distribution::from_approx(p)?,
                iterations: iteration,
                residual,
            });
        }
        if iteration == max_iter {
            return Err(Error::MaxIterations {
                iterations: max_iter,
                residual,
            });
        }
        let mut total = 0.0;
        for (px, dx) in p.iter_mut().zip(&d) {
            *px *= (dx - upper).exp();
            total += *px;
        }
        for px in p.iter_mut() {
            *px /= total;
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Capacity over `{p in simplex : <p, a> >= 0 for all a}` by away-step
/// conditional gradient with exact line search.
///
/// The linear subproblem is an LP over the constraint polytope; the iteration
/// stops when the Frank-Wolfe duality gap `max_s <grad I(p), s - p>` is at
/// most `tol`, which bounds `C_A - I(p)`.
pub fn constrained_capacity(
    channel: &Channel,
    constraints: &ConstraintSet,
    tol: f64,
    max_iter: usize,
) -> Result<CapacitySolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = channel.n_inputs();
    if constraints.vectors().iter().any(|a| a.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: constraints
                .vectors()
                .iter()
                .map(|a| a.len())
                .find(|&l| l != n)
                .unwrap_or(0),
        });
    }
    let feasible = InputPolytope::constrained(n, constraints)?;
    let mut atoms: Vec<Vec<f64>> = if feasible.is_constrained() {
        let mut pool = vec![feasible.center().to_vec()];
        pool.extend(feasible_vertices(&feasible)?);
        pool
    } else {
        (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect()
    };
    let mut weights = vec![1.0 / atoms.len() as f64; atoms.len()];
    let mut p = mix(&atoms, &weights, n);

    let q0 = channel.push_forward(&p);
    if let Some(y) = q0.iter().position(|&v| v <= 0.0) {
        return Err(Error::UnreachableOutput(y));
    }
    let neg_entropy = channel.neg_row_entropies();

    for iteration in 0..=max_iter {
        let q = channel.push_forward(&p);
        let d = channel.row_divergences(&q);
        let value = mi_raw(channel, &p);
        let s = feasible.linear_max(&d)?;
        let fw_gap = dot(&d, &s) - dot(&d, &p);
        if fw_gap <= tol {
            return Ok(CapacitySolution {
                capacity: value,
                q_star: Distribution::from_approx(q)?,
                p_witness: Distribution::from_approx(p)?,
                iterations: iteration,
                residual: fw_gap.max(0.0),
            });
        }
        if iteration == max_iter {
            return Err(Error::MaxIterations {
                iterations: max_iter,
                residual: fw_gap,
            });
        }

        let away = (0..atoms.len())
            .filter(|&i| weights[i] > 0.0)
            .min_by(|&i, &j| dot(&d, &atoms[i]).total_cmp(&dot(&d, &atoms[j])))
            .expect("at least one atom carries weight");
        let away_gap = dot(&d, &p) - dot(&d, &atoms[away]);

        if fw_gap >= away_gap {
            let dir = linalg::sub(&s, &p);
            let gamma = line_search(channel, &neg_entropy, &p, &dir, 1.0);
            for w in weights.iter_mut() {
                *w *= 1.0 - gamma;
            }
            match atoms
                .iter()
                .position(|a| linalg::norm(&linalg::sub(a, &s)) < 1e-14)
            {
                Some(i) => weights[i] += gamma,
                None => {
                    atoms.push(s);
                    weights.push(gamma);
                }
            }
        } else {
            let wa = weights[away];
            let gamma_max = wa / (1.0 - wa);
            let dir = linalg::sub(&p, &atoms[away]);
            let gamma = line_search(channel, &neg_entropy, &p, &dir, gamma_max);
            for w in weights.iter_mut() {
                *w *= 1.0 + gamma;
            }
            weights[away] -= gamma;
            if gamma >= gamma_max * (1.0 - 1e-12) {
                weights[away] = 0.0;
            }
        }
        let mut i = 0;
        while i < atoms.len() {
            if weights[i] <= 0.0 {
                atoms.swap_remove(i);
                weights.swap_remove(i);
            } else {
                i += 1;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        p = mix(&atoms, &weights, n);
    }
    unreachable!("loop returns on its last iteration")
}

fn feasible_vertices(feasible: &InputPolytope) -> Result<Vec<Vec<f64>>> {
    let n = feasible.dim();
    let mut out = Vec::new();
    for x in 0..n {
        let mut e = vec![0.0; n];
        e[x] = 1.0;
        out.push(feasible.linear_max(&e)?);
    }
    Ok(out)
}

fn mix(atoms: &[Vec<f64>], weights: &[f64], n: usize) -> Vec<f64> {
    let mut p = linalg::combine(atoms, weights, n);
    clean(&mut p);
    p
}

/// Maximizes the concave `gamma -> I(p + gamma * dir)` on `[0, gamma_max]`
/// using its derivative `<c, dir> - sum_y dY(y) ln q_gamma(y)` (dir sums to zero).
fn line_search(
    channel: &Channel,
    neg_entropy: &[f64],
    p: &[f64],
    dir: &[f64],
    gamma_max: f64,
) -> f64 {
    let q = channel.push_forward(p);
    let dq = channel.push_forward(dir);
    let linear = dot(neg_entropy, dir);
    // The log barrier only bites within rounding distance of q_y = 0, so an
    // output losing all its mass can look like an improving step. Stop short.
    let gamma_max = q
        .iter()
        .zip(&dq)
        .filter(|(_, &dy)| dy < 0.0)
        .map(|(&qy, &dy)| qy / -dy * (1.0 - 1e-9))
        .fold(gamma_max, f64::min);
    let slope = |gamma: f64| -> (f64, f64) {
        let mut first = linear;
        let mut second = 0.0;
        for (&qy, &dy) in q.iter().zip(&dq) {
            if dy == 0.0 {
                continue;
            }
            let v = qy + gamma * dy;
            if v <= 0.0 {
                return (
                    if dy < 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    },
                    f64::NEG_INFINITY,
                );
            }
            first -= dy * v.ln();
            second -= dy * dy / v;
        }
        (first, second)
    };
    if slope(0.0).0 <= 0.0 {
        return 0.0;
    }
    if slope(gamma_max).0 >= 0.0 {
        return gamma_max;
    }
    let (mut lo, mut hi) = (0.0, gamma_max);
    let mut gamma = 0.5 * gamma_max;
    for _ in 0..200 {
        let (f1, f2) = slope(gamma);
        if f1 == 0.0 {
            return gamma;
        }
        if f1 > 0.0 {
            lo = gamma;
        } else {
            hi = gamma;
        }
        let newton = if f2 < 0.0 && f1.is_finite() {
            gamma - f1 / f2
        } else {
            f64::NAN
        };
        gamma = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-17 * gamma_max.max(1.0) || (f1.abs() < 1e-16) {
            break;
        }
    }
    gamma
}

/// Refines a solution by Newton's method on its optimal face.
///
/// The face is read off the solution: inputs with `D(W(.|x) || q) < C - support_tol`
/// are dropped in the unconstrained case; in the constrained case inputs with
/// mass below `support_tol` are dropped and constraints within `support_tol`
/// of equality are held active. The refined point replaces the original only
/// if it is feasible and its certified gap is no larger.
pub fn polish_solution(
    channel: &Channel,
    constraints: Option<&ConstraintSet>,
    sol: &CapacitySolution,
    support_tol: f64,
) -> CapacitySolution {
    let n = channel.n_inputs();
    let constraints = constraints.filter(|c| !c.is_empty());
    let feasible = match constraints {
        Some(cs) => match InputPolytope::constrained(n, cs) {
            Ok(f) => f,
            Err(_) => return sol.clone(),
        },
        None => InputPolytope::simplex(n),
    };
    let p = sol.p_witness.as_slice();
    let divergences = channel.row_divergences(sol.q_star.as_slice());
    let (mut dropped, active): (Vec<bool>, Vec<Vec<f64>>) = match constraints {
        None => (
            divergences
                .iter()
                .map(|&dx| dx < sol.capacity - support_tol)
                .collect(),
            Vec::new(),
        ),
        Some(cs) => (
            p.iter().map(|&px| px <= support_tol).collect(),
            cs.vectors()
                .iter()
                .filter(|a| dot(a, p) <= support_tol * norm(a).max(1.0))
                .cloned()
                .collect(),
        ),
    };

    // Inputs put back only to feed an output are held at a fixed mass on the
    // face; their optimal mass can be far below rounding of the other inputs.
    // Without constraints that mass is then updated by Newton's method in
    // log scale on D(W(.|x) || q) = rate.
    let readmitted = keep_outputs_reachable(channel, &mut dropped, &divergences);
    let mut fixed: Vec<(usize, f64)> = match constraints {
        None => readmitted
            .iter()
            .map(|&x| (x, if p[x] > 0.0 { p[x] } else { 1e-20 }))
            .collect(),
        Some(_) => Vec::new(),
    };
    let mut candidate = None;
    for _ in 0..50 {
        let Some((point, face)) = solve_face(channel, constraints, p, &dropped, &fixed, &active)
        else {
            break;
        };
        let q = channel.push_forward(&point);
        if fixed.is_empty() || q.iter().any(|&v| v <= 0.0) {
            candidate = Some((point, face));
            break;
        }
        let d = channel.row_divergences(&q);
        let held: Vec<usize> = fixed.iter().map(|&(x, _)| x).collect();
        let free_mass: f64 = (0..n)
            .filter(|x| !face[*x] && !held.contains(x))
            .map(|x| point[x])
            .sum();
        let rate = (0..n)
            .filter(|x| !face[*x] && !held.contains(x))
            .map(|x| point[x] * d[x])
            .sum::<f64>()
            / free_mass;
        let mut settled = true;
        for (x, mass) in fixed.iter_mut() {
            let gap = d[*x] - rate;
            let slope: f64 = (0..channel.n_outputs())
                .map(|y| channel.row(*x)[y].powi(2) * *mass / q[y])
                .sum();
            if gap.abs() > 1e-13 && (gap * *mass).abs() > 1e-18 && slope > 0.0 {
                settled = false;
                *mass = (*mass * (gap / slope).clamp(-50.0, 50.0).exp()).min(0.5);
            }
        }
        candidate = Some((point, face));
        if settled {
            break;
        }
    }
    let Some((mut point, dropped)) = candidate else {
        return sol.clone();
    };
    for (v, &z) in point.iter_mut().zip(&dropped) {
        if z {
            *v = 0.0;
        }
    }
    clean(&mut point);
    if !feasible.contains(&point, 1e-12) {
        return sol.clone();
    }
    let q = channel.push_forward(&point);
    if q.iter().any(|&v| v <= 0.0) {
        return sol.clone();
    }
    let d = channel.row_divergences(&q);
    let value = mi_raw(channel, &point);
    let residual = match constraints {
        None => d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - value,
        Some(_) => match feasible.linear_max(&d) {
            Ok(s) => dot(&d, &s) - dot(&d, &point),
            Err(_) => return sol.clone(),
        },
    }
    .max(0.0);
    if residual > sol.residual || value < sol.capacity - sol.residual {
        return sol.clone();
    }
    match (
        Distribution::from_approx(q),
        Distribution::from_approx(point),
    ) {
        (Ok(q_star), Ok(p_witness)) => CapacitySolution {
            capacity: value,
            q_star,
            p_witness,
            iterations: sol.iterations,
            residual,
        },
        _ => sol.clone(),
    }
}

/// Active-set loop on the face: drop inputs that go negative and hold violated
/// constraints active. Without constraints, dropped inputs whose divergence
/// exceeds the rate on the face are re-admitted. Returns the point and the
/// final dropped set.
fn solve_face(
    channel: &Channel,
    constraints: Option<&ConstraintSet>,
    start: &[f64],
    dropped: &[bool],
    fixed: &[(usize, f64)],
    active: &[Vec<f64>],
) -> Option<(Vec<f64>, Vec<bool>)> {
    let n = start.len();
    let mut dropped = dropped.to_vec();
    let mut active = active.to_vec();
    for _ in 0..4 * n + 4 + constraints.map_or(0, |c| 2 * c.len()) {
        let point = newton_on_face(channel, start, &dropped, fixed, &active)?;
        let held = |x: usize| fixed.iter().any(|&(h, _)| h == x);
        let worst = (0..n)
            .filter(|&x| !dropped[x] && !held(x) && point[x] < -1e-13)
            .min_by(|&a, &b| point[a].total_cmp(&point[b]));
        if let Some(x) = worst {
            dropped[x] = true;
            continue;
        }
        if let Some(cs) = constraints {
            let violated = cs
                .vectors()
                .iter()
                .filter(|a| !active.contains(a))
                .map(|a| (a, dot(a, &point) / norm(a).max(1.0)))
                .filter(|&(_, v)| v < -1e-13)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((a, _)) = violated {
                active.push(a.clone());
                continue;
            }
            return Some((point, dropped));
        }
        let mut clipped = point.clone();
        clean(&mut clipped);
        let q = channel.push_forward(&clipped);
        if q.iter().all(|&v| v > 0.0) {
            let d = channel.row_divergences(&q);
            let rate = mi_raw(channel, &clipped);
            let violated = (0..n)
                .filter(|&x| dropped[x] && d[x] > rate + 1e-13)
                .max_by(|&a, &b| d[a].total_cmp(&d[b]));
            if let Some(x) = violated {
                dropped[x] = false;
                continue;
            }
        }
        return Some((point, dropped));
    }
    None
}

/// The optimal output distribution has full support, so every output must be
/// reachable from some input left on the face. For each output the face would
/// starve, the input of largest divergence among those producing it is put
/// back. Returns the inputs put back.
fn keep_outputs_reachable(
    channel: &Channel,
    dropped: &mut [bool],
    divergences: &[f64],
) -> Vec<usize> {
    let mut readmitted = Vec::new();
    for y in 0..channel.n_outputs() {
        let producers = (0..dropped.len()).filter(|&x| channel.row(x)[y] > 0.0);
        if producers.clone().all(|x| dropped[x]) {
            if let Some(x) = producers.max_by(|&a, &b| divergences[a].total_cmp(&divergences[b])) {
                dropped[x] = false;
                readmitted.push(x);
            }
        }
    }
    readmitted
}

/// Newton iteration for `max I` on the affine face `{sum p = 1, p_x = 0 (dropped),
/// p_x = m (fixed), <a, p> = 0 (active)}`. Steps use the pseudo-inverse of the
/// restricted Hessian, which is singular exactly along channel-kernel directions.
fn newton_on_face(
    channel: &Channel,
    start: &[f64],
    dropped: &[bool],
    fixed: &[(usize, f64)],
    active: &[Vec<f64>],
) -> Option<Vec<f64>> {
    let n = start.len();
    let mut rows = vec![vec![1.0; n]];
    let mut rhs = vec![1.0];
    for x in 0..n {
        if dropped[x] {
            let mut e = vec![0.0; n];
            e[x] = 1.0;
            rows.push(e);
            rhs.push(0.0);
        }
    }
    for &(x, m) in fixed {
        let mut e = vec![0.0; n];
        e[x] = 1.0;
        rows.push(e);
        rhs.push(m);
    }
    rows.extend(active.iter().cloned());
    rhs.extend(active.iter().map(|_| 0.0));
    let basis = linalg::null_space(&rows, n, RANK_TOL);

    let mut p: Vec<f64> = (0..n)
        .map(|x| if dropped[x] { 0.0 } else { start[x] })
        .collect();
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return None;
    }
    for v in p.iter_mut() {
        *v /= total;
    }
    // Move onto the face: minimum-norm correction satisfying the face rows.
    if !active.is_empty() || !fixed.is_empty() {
        let target: Vec<f64> = rows.iter().zip(&rhs).map(|(r, b)| b - dot(r, &p)).collect();
        let delta = linalg::pinv_solve(&rows, &target, RANK_TOL);
        linalg::axpy(1.0, &delta, &mut p);
        for &(x, m) in fixed {
            p[x] = m;
        }
    }
    if basis.is_empty() {
        return Some(p);
    }

    for _ in 0..60 {
        let q = channel.push_forward(&p);
        if q.iter().any(|&v| v <= 0.0) {
            return None;
        }
        let d = channel.row_divergences(&q);
        let grad: Vec<f64> = (0..n)
            .map(|x| if dropped[x] { 0.0 } else { d[x] })
            .collect();
        let r = linalg::coords(&basis, &grad);
        let pushed: Vec<Vec<f64>> = basis.iter().map(|b| channel.push_forward(b)).collect();
        let k = basis.len();
        let curvature: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        pushed[i]
                            .iter()
                            .zip(&pushed[j])
                            .zip(&q)
                            .map(|((a, b), qy)| a * b / qy)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let step = linalg::pinv_solve(&curvature, &r, 1e-12);
        let mut delta = linalg::combine(&basis, &step, n);
        // halve steps that would leave an output with no mass
        for _ in 0..40 {
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(a, b)| a + b).collect();
            if channel.push_forward(&trial).iter().all(|&v| v > 0.0) {
                break;
            }
            delta.iter_mut().for_each(|v| *v *= 0.5);
        }
        linalg::axpy(1.0, &delta, &mut p);
        if norm(&delta) <= 1e-16 {
            break;
        }
        if p.iter().zip(dropped).any(|(&v, &z)| !z && v < -1e-3) {
            // Far outside the face: let the caller shrink the face.
            return Some(p);
        }
    }
    Some(p)
}

/// Capacity-achieving set of an unconstrained channel:
/// `{p >= 0 : supp(p) in x_max, p W = q*, sum p = 1}` with
/// `x_max = {x : D(W(.|x) || q*) >= C - support_tol}`.
///
/// The representative is the analytic center of the set (maximizer of
/// `sum_x ln p(x)` over the inputs that can carry mass).
pub fn capacity_achieving_set(
    channel: &Channel,
    sol: &CapacitySolution,
    support_tol: f64,
) -> Result<PiSet> {
    let n = channel.n_inputs();
    let m = channel.n_outputs();
    check_solution_shape(channel, sol)?;
    let d = channel.row_divergences(sol.q_star.as_slice());
    let x_max: Vec<usize> = (0..n)
        .filter(|&x| d[x] >= sol.capacity - support_tol)
        .collect();
    if x_max.is_empty() {
        return Err(Error::EmptyPiSet);
    }
    check_output_reachable(channel, &x_max, sol)?;

    let mut base: Vec<f64> = (0..n)
        .map(|x| {
            if x_max.contains(&x) {
                sol.p_witness[x]
            } else {
                0.0
            }
        })
        .collect();
    let mass: f64 = base.iter().sum();
    if mass <= 0.0 {
        return Err(Error::EmptyPiSet);
    }
    for v in base.iter_mut() {
        *v /= mass;
    }
    let q_base = channel.push_forward(&base);

    let mut free = x_max.clone();
    let mut basis = restricted_kernel(channel, &free);
    if !basis.is_empty() {
        let forced = forced_zero(&base, &basis, &free)?;
        if !forced.is_empty() {
            for &x in &forced {
                base[x] = 0.0;
            }
            clean(&mut base);
            free.retain(|x| !forced.contains(x));
            basis = restricted_kernel(channel, &free);
        }
    }
    let representative = if basis.is_empty() {
        base.clone()
    } else {
        analytic_center(&base, &basis, &free)?
    };

    let mut matrix = Vec::with_capacity(m + n + 1);
    let mut rhs = Vec::with_capacity(m + n + 1);
    for (y, &target) in q_base.iter().enumerate() {
        matrix.push(
            (0..n)
                .map(|x| {
                    if x_max.contains(&x) {
                        channel.row(x)[y]
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
        rhs.push(target);
    }
    for x in (0..n).filter(|x| !x_max.contains(x)) {
        let mut e = vec![0.0; n];
        e[x] = 1.0;
        matrix.push(e);
        rhs.push(0.0);
    }
    matrix.push(vec![1.0; n]);
    rhs.push(1.0);

    PiSet::build(
        representative,
        basis,
        x_max,
        EqualitySystem { matrix, rhs },
        None,
        InputPolytope::simplex(n),
    )
}

/// Capacity-achieving set under linear constraints, `(p* + V') ∩ P_A`, where
/// `V'` holds the channel-kernel directions along which the gradient of `I`
/// at `p*` vanishes. With an empty constraint set this is
/// [`capacity_achieving_set`].
pub fn constrained_pi_set(
    channel: &Channel,
    constraints: &ConstraintSet,
    sol: &CapacitySolution,
    support_tol: f64,
) -> Result<PiSet> {
    if constraints.is_empty() {
        return capacity_achieving_set(channel, sol, support_tol);
    }
    let n = channel.n_inputs();
    let m = channel.n_outputs();
    check_solution_shape(channel, sol)?;
    let feasible = InputPolytope::constrained(n, constraints)?;
    let p_star = sol.p_witness.as_slice().to_vec();
    if !feasible.contains(&p_star, 1e-9) {
        return Err(Error::InfeasiblePoint);
    }
    let q_star = sol.q_star.as_slice();
    if let Some(y) = q_star.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroOutput(y));
    }
    let grad: Vec<f64> = channel
        .row_divergences(q_star)
        .iter()
        .map(|d| d - 1.0)
        .collect();

    let kernel: Vec<Vec<f64>> = crate::channel::kernel_basis(channel)
        .into_iter()
        .map(|v| v.into_vec())
        .collect();
    let slopes = linalg::coords(&kernel, &grad);
    let basis = if norm(&slopes) <= support_tol {
        kernel
    } else {
        let inner = linalg::null_space(&[slopes], kernel.len(), RANK_TOL);
        inner
            .iter()
            .map(|c| linalg::combine(&kernel, c, n))
            .collect()
    };

    let x_max: Vec<usize> = (0..n)
        .filter(|&x| p_star[x] > support_tol || basis.iter().any(|v| v[x].abs() > 1e-12))
        .collect();
    let mut matrix = Vec::with_capacity(m + 2);
    let mut rhs = Vec::with_capacity(m + 2);
    for y in 0..m {
        matrix.push(channel.rows().iter().map(|r| r[y]).collect());
        rhs.push(q_star[y]);
    }
    matrix.push(vec![1.0; n]);
    rhs.push(1.0);
    rhs.push(dot(&grad, &p_star));
    matrix.push(grad);

    PiSet::build(
        p_star,
        basis,
        x_max,
        EqualitySystem { matrix, rhs },
        Some(constraints.clone()),
        feasible,
    )
}

/// Capacity with the constrained solver when `constraints` is nonempty.
///
/// The solver first runs to a coarse gap and the result is polished on its
/// optimal face; only if polishing cannot reach `tol` does the solver run to
/// `tol` itself (and that result is polished as well).
pub fn solve_capacity(
    channel: &Channel,
    constraints: &ConstraintSet,
    tol: f64,
    max_iter: usize,
    support_tol: f64,
) -> Result<CapacitySolution> {
    let cs = (!constraints.is_empty()).then_some(constraints);
    let solve = |t: f64| match cs {
        None => blahut_arimoto(channel, t, max_iter),
        Some(c) => constrained_capacity(channel, c, t, max_iter),
    };
    let coarse = solve(tol.max(COARSE_TOL))?;
    let sol = polish_solution(channel, cs, &coarse, support_tol);
    if sol.residual <= tol {
        return Ok(sol);
    }
    Ok(polish_solution(channel, cs, &solve(tol)?, support_tol))
}

/// Capacity and capacity-achieving set in one call.
pub fn analyze(
    channel: &Channel,
    constraints: &ConstraintSet,
    tol: f64,
    max_iter: usize,
    support_tol: f64,
) -> Result<(CapacitySolution, PiSet)> {
    let sol = solve_capacity(channel, constraints, tol, max_iter, support_tol)?;
    let pi = if constraints.is_empty() {
        capacity_achieving_set(channel, &sol, support_tol)?
    } else {
        constrained_pi_set(channel, constraints, &sol, support_tol)?
    };
    Ok((sol, pi))
}

const COARSE_TOL: f64 = 1e-6;

fn check_solution_shape(channel: &Channel, sol: &CapacitySolution) -> Result<()> {
    if sol.p_witness.len() != channel.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: channel.n_inputs(),
            found: sol.p_witness.len(),
        });
    }
    if sol.q_star.len() != channel.n_outputs() {
        return Err(Error::DimensionMismatch {
            expected: channel.n_outputs(),
            found: sol.q_star.len(),
        });
    }
    Ok(())
}

/// The output distribution must be reproducible from `x_max` alone, up to the
/// accuracy the solver residual allows (Pinsker: `|q_p - q*|_1 <= sqrt(2 gap)`).
fn check_output_reachable(
    channel: &Channel,
    x_max: &[usize],
    sol: &CapacitySolution,
) -> Result<()> {
    let n = channel.n_inputs();
    let m = channel.n_outputs();
    let k = x_max.len();
    // variables: p on x_max, then slack+ and slack- per output
    let mut objective = vec![0.0; k];
    objective.extend(vec![1.0; 2 * m]);
    let mut lp = LinearProgram::minimize(objective);
    let mut sum_row = vec![1.0; k];
    sum_row.extend(vec![0.0; 2 * m]);
    lp = lp.constraint(sum_row, Cmp::Eq, 1.0);
    for y in 0..m {
        let mut row: Vec<f64> = x_max.iter().map(|&x| channel.row(x)[y]).collect();
        let mut slack = vec![0.0; 2 * m];
        slack[y] = 1.0;
        slack[m + y] = -1.0;
        row.extend(slack);
        lp = lp.constraint(row, Cmp::Eq, sol.q_star[y]);
    }
    let mismatch = lp.solve()?.objective;
    let allowed = 2.0 * (2.0 * sol.residual).sqrt() + 1e-9;
    debug_assert!(n >= k);
    if mismatch > allowed {
        return Err(Error::EmptyPiSet);
    }
    Ok(())
}

/// Kernel of `p -> p W` restricted to inputs in `free` (embedded in R^n).
fn restricted_kernel(channel: &Channel, free: &[usize]) -> Vec<Vec<f64>> {
    let n = channel.n_inputs();
    let k = free.len();
    let mut rows: Vec<Vec<f64>> = (0..channel.n_outputs())
        .map(|y| free.iter().map(|&x| channel.row(x)[y]).collect())
        .collect();
    rows.push(vec![1.0; k]);
    linalg::null_space(&rows, k, RANK_TOL)
        .into_iter()
        .map(|v| {
            let mut full = vec![0.0; n];
            for (&x, &vx) in free.iter().zip(&v) {
                full[x] = vx;
            }
            full
        })
        .collect()
}

/// Inputs in `free` that are zero throughout `{base + V c >= 0}`.
fn forced_zero(base: &[f64], basis: &[Vec<f64>], free: &[usize]) -> Result<Vec<usize>> {
    let mut forced = Vec::new();
    for &x in free {
        let objective: Vec<f64> = basis.iter().map(|v| v[x]).collect();
        let mut lp = LinearProgram::maximize(objective).free();
        for &z in free {
            let row: Vec<f64> = basis.iter().map(|v| v[z]).collect();
            lp = lp.constraint(row, Cmp::Ge, -base[z]);
        }
        let best = base[x] + lp.solve()?.objective;
        if best <= 1e-12 {
            forced.push(x);
        }
    }
    Ok(forced)
}

/// Maximizes `sum_{x in free} ln(base_x + (V c)_x)` by damped Newton, starting
/// from the average of the per-coordinate LP maximizers.
fn analytic_center(base: &[f64], basis: &[Vec<f64>], free: &[usize]) -> Result<Vec<f64>> {
    let n = base.len();
    let k = basis.len();
    let rows: Vec<Vec<f64>> = free
        .iter()
        .map(|&x| basis.iter().map(|v| v[x]).collect())
        .collect();
    let offsets: Vec<f64> = free.iter().map(|&x| base[x]).collect();

    let mut c = vec![0.0; k];
    for (i, obj) in rows.iter().enumerate() {
        let mut lp = LinearProgram::maximize(obj.clone()).free();
        for (row, &b) in rows.iter().zip(&offsets) {
            lp = lp.constraint(row.clone(), Cmp::Ge, -b);
        }
        let sol = lp.solve()?;
        let _ = i;
        linalg::axpy(1.0 / rows.len() as f64, &sol.x, &mut c);
    }
    let values = |c: &[f64]| -> Vec<f64> {
        rows.iter()
            .zip(&offsets)
            .map(|(r, b)| b + dot(r, c))
            .collect()
    };
    let objective = |v: &[f64]| -> f64 {
        if v.iter().any(|&x| x <= 0.0) {
            f64::NEG_INFINITY
        } else {
            v.iter().map(|x| x.ln()).sum()
        }
    };

    let mut current = values(&c);
    if current.iter().any(|&v| v <= 0.0) {
        // LP average landed on the boundary (should not happen); keep base.
        return Ok(base.to_vec());
    }
    for _ in 0..100 {
        let mut grad = vec![0.0; k];
        let mut hess = vec![vec![0.0; k]; k];
        for (row, &v) in rows.iter().zip(&current) {
            linalg::axpy(1.0 / v, row, &mut grad);
            for i in 0..k {
                for j in 0..k {
                    hess[i][j] += row[i] * row[j] / (v * v);
                }
            }
        }
        let step = linalg::pinv_solve(&hess, &grad, 1e-14);
        let decrement = dot(&grad, &step);
        if decrement < 1e-20 {
            break;
        }
        let f0 = objective(&current);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = c.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            let tv = values(&trial);
            if objective(&tv) >= f0 + 0.25 * t * decrement {
                c = trial;
                current = tv;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                break;
            }
        }
        if t < 1e-12 {
            break;
        }
    }
    let mut p = base.to_vec();
    for (v, &ci) in basis.iter().zip(&c) {
        linalg::axpy(ci, v, &mut p);
    }
    debug_assert_eq!(p.len(), n);
    clean(&mut p);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bsc(delta: f64) -> Channel {
        Channel::new(vec![vec![1.0 - delta, delta], vec![delta, 1.0 - delta]]).unwrap()
    }

    fn h(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    fn identity(n: usize) -> Channel {
        Channel::new(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
        .unwrap()
    }

    fn merged() -> Channel {
        Channel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn ba_identity_three() {
        let sol = blahut_arimoto(&identity(3), 1e-12, 1000).unwrap();
        assert_abs_diff_eq!(sol.capacity, 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn ba_bsc() {
        let sol = blahut_arimoto(&bsc(0.1), 1e-12, 1000).unwrap();
        assert_abs_diff_eq!(sol.capacity, 2f64.ln() - h(0.1), epsilon = 1e-12);
        assert_abs_diff_eq!(sol.q_star[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ba_useless_channel() {
        let r = vec![0.2, 0.3, 0.5];
        let w = Channel::new(vec![r.clone(), r.clone(), r]).unwrap();
        let sol = blahut_arimoto(&w, 1e-12, 10).unwrap();
        assert_abs_diff_eq!(sol.capacity, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ba_reports_iteration_limit() {
        let w = Channel::new(vec![
            vec![0.9, 0.1, 0.0],
            vec![0.2, 0.5, 0.3],
            vec![0.0, 0.05, 0.95],
        ])
        .unwrap();
        let err = blahut_arimoto(&w, 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::MaxIterations { iterations: 2, .. }));
        assert!(blahut_arimoto(&w, 0.0, 10).is_err());
    }

    #[test]
    fn pi_set_of_bsc_is_a_point() {
        let w = bsc(0.1);
        let sol = blahut_arimoto(&w, 1e-12, 1000).unwrap();
        let pi = capacity_achieving_set(&w, &sol, DEFAULT_SUPPORT_TOL).unwrap();
        assert!(pi.v_basis.is_empty());
        assert_abs_diff_eq!(pi.representative[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pi_set_of_merged_inputs_is_a_segment() {
        let w = merged();
        let sol = blahut_arimoto(&w, 1e-12, 1000).unwrap();
        let pi = capacity_achieving_set(&w, &sol, DEFAULT_SUPPORT_TOL).unwrap();
        assert_eq!(pi.x_max, vec![0, 1, 2]);
        assert_eq!(pi.dim(), 1);
        let v = pi.v_basis[0].as_slice();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v[0], s, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], -s, epsilon = 1e-12);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-12);
        let rep = pi.representative.as_slice();
        assert_abs_diff_eq!(rep[0] + rep[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rep[2], 0.5, epsilon = 1e-12);
        // analytic center of the segment
        assert_abs_diff_eq!(rep[0], 0.25, epsilon = 1e-9);
        assert!(pi.contains(&[0.5, 0.0, 0.5], 1e-9));
        assert!(!pi.contains(&[0.4, 0.0, 0.6], 1e-9));
    }

    #[test]
    fn pi_set_of_useless_channel_is_the_simplex() {
        let r = vec![0.2, 0.8];
        let w = Channel::new(vec![r.clone(), r.clone(), r]).unwrap();
        let sol = blahut_arimoto(&w, 1e-12, 10).unwrap();
        let pi = capacity_achieving_set(&w, &sol, DEFAULT_SUPPORT_TOL).unwrap();
        assert_eq!(pi.dim(), 2);
        assert!(pi.covers_feasible());
    }

    #[test]
    fn constrained_identity() {
        let w = identity(2);
        let cs = ConstraintSet::new(2, vec![vec![0.3, -0.7]]).unwrap();
        let sol = constrained_capacity(&w, &cs, 1e-10, 10_000).unwrap();
        assert_abs_diff_eq!(sol.capacity, h(0.3), epsilon = 1e-9);
        assert_abs_diff_eq!(sol.capacity, 0.610864, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.p_witness[0], 0.7, epsilon = 1e-8);
        let pi = constrained_pi_set(&w, &cs, &sol, DEFAULT_SUPPORT_TOL).unwrap();
        assert!(pi.v_basis.is_empty());
        assert!(pi.constrained);
    }

    #[test]
    fn constrained_with_slack_constraint_matches_unconstrained() {
        let w = bsc(0.1);
        let cs = ConstraintSet::new(2, vec![vec![0.6, -0.4]]).unwrap();
        let sol = constrained_capacity(&w, &cs, 1e-10, 10_000).unwrap();
        assert_abs_diff_eq!(sol.capacity, 2f64.ln() - h(0.1), epsilon = 1e-9);
    }

    #[test]
    fn empty_constraints_match_blahut_arimoto() {
        let w = Channel::new(vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let tol = 1e-9;
        let ba = blahut_arimoto(&w, tol, 1_000_000).unwrap();
        let fw = constrained_capacity(&w, &ConstraintSet::empty(), tol, 1_000_000).unwrap();
        assert!((ba.capacity - fw.capacity).abs() <= 2.0 * tol);
    }

    #[test]
    fn infeasible_constraints_are_rejected() {
        let err = ConstraintSet::new(2, vec![vec![-1.0, -1.0]]).unwrap_err();
        assert_eq!(err, Error::Infeasible);
    }

    #[test]
    fn constrained_pi_with_empty_set_is_unconstrained() {
        let w = merged();
        let sol = blahut_arimoto(&w, 1e-12, 1000).unwrap();
        let a = capacity_achieving_set(&w, &sol, DEFAULT_SUPPORT_TOL).unwrap();
        let b = constrained_pi_set(&w, &ConstraintSet::empty(), &sol, DEFAULT_SUPPORT_TOL).unwrap();
        assert_eq!(a.v_basis, b.v_basis);
        assert_eq!(a.representative, b.representative);
        assert_eq!(a.x_max, b.x_max);
    }

    #[test]
    fn polish_tightens_the_gap() {
        let w = Channel::new(vec![
            vec![0.9, 0.1, 0.0],
            vec![0.2, 0.5, 0.3],
            vec![0.0, 0.05, 0.95],
        ])
        .unwrap();
        let sol = blahut_arimoto(&w, 1e-6, 1_000_000).unwrap();
        let fine = polish_solution(&w, None, &sol, DEFAULT_SUPPORT_TOL);
        assert!(fine.residual < 1e-12, "residual {}", fine.residual);
        let reference = blahut_arimoto(&w, 1e-13, 10_000_000).unwrap();
        assert_abs_diff_eq!(fine.capacity, reference.capacity, epsilon = 1e-12);
    }

    #[test]
    fn polish_keeps_a_sole_producer_on_the_face() {
        // Output 1 comes only from inputs 0 and 4. Input 0 carries little mass
        // and its divergence converges slowly, so the coarse solution places it
        // well below the support threshold.
        let w = Channel::new(vec![
            vec![
                0.47991020123578304,
                0.0818625149814757,
                0.22469676616992748,
                0.06307759027508884,
                0.15045292733772492,
            ],
            vec![0.0, 0.0, 0.10544352038305639, 0.0, 0.8945564796169436],
            vec![
                0.4320756816191835,
                0.0,
                0.3041120336924631,
                0.26381228468835344,
                0.0,
            ],
            vec![0.8587634534543169, 0.0, 0.0, 0.0, 0.14123654654568316],
            vec![
                0.49080822364224486,
                0.036136858893943025,
                0.0,
                0.0,
                0.4730549174638122,
            ],
        ])
        .unwrap();
        let sol = blahut_arimoto(&w, 1e-9, 10_000_000).unwrap();
        let d = w.row_divergences(sol.q_star.as_slice());
        assert!(d[0] < sol.capacity - DEFAULT_SUPPORT_TOL);
        let fine = polish_solution(&w, None, &sol, DEFAULT_SUPPORT_TOL);
        assert!(fine.residual < 1e-12, "residual {}", fine.residual);
        assert!(fine.p_witness[0] > 1e-3);
    }

    #[test]
    fn too_small_support_tol_signals_empty_set() {
        // Two optimal inputs; a coarse solution with a tiny threshold keeps only one.
        let w = Channel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let sol = blahut_arimoto(&w, 1e-3, 1000).unwrap();
        let upper = w
            .row_divergences(sol.q_star.as_slice())
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        // choose a threshold that keeps only the input attaining the max
        let fake = CapacitySolution {
            capacity: upper,
            ..sol
        };
        assert_eq!(
            capacity_achieving_set(&w, &fake, 0.0).unwrap_err(),
            Error::EmptyPiSet
        );
    }

    #[test]
    fn polish_finds_an_exponentially_small_producer() {
        // Output 3 comes only from input 2, whose optimal mass is near 3e-20.
        let w = Channel::new(vec![
            vec![0.6076125552798342, 0.39238744472016585, 0.0, 0.0],
            vec![
                0.04674461969045618,
                0.015195203836870001,
                0.9380601764726738,
                0.0,
            ],
            vec![
                0.5212038650977904,
                0.10768234566227101,
                0.3597633267183205,
                0.011350462521618039,
            ],
        ])
        .unwrap();
        let sol = blahut_arimoto(&w, 1e-9, 10_000_000).unwrap();
        let fine = polish_solution(&w, None, &sol, DEFAULT_SUPPORT_TOL);
        assert!(fine.residual <= 1e-14);
        assert!(fine.p_witness[2] > 0.0 && fine.p_witness[2] < 1e-18);
        let d = w.row_divergences(fine.q_star.as_slice());
        for dx in &d[..2] {
            assert_abs_diff_eq!(*dx, fine.capacity, epsilon = 1e-14);
        }
        assert!(d[2] < fine.capacity);
    }

    #[test]
    fn constrained_polish_drops_inputs_leaving_the_face() {
        // the constraint is slack; inputs 0 and 1 are suboptimal but rows 0
        // and 3 nearly coincide, so the solver leaves mass on input 0
        let w = Channel::new(vec![
            vec![0.08977825563533588, 0.9102217443646641],
            vec![0.26678375475520855, 0.7332162452447915],
            vec![0.28246501473107, 0.71753498526893],
            vec![0.08958714065246136, 0.9104128593475387],
        ])
        .unwrap();
        let cs = ConstraintSet::new(
            4,
            vec![vec![
                0.4424952798926828,
                0.7119761154998177,
                -0.5339238979297298,
                1.0888690260392453,
            ]],
        )
        .unwrap();
        let sol = solve_capacity(&w, &cs, 1e-9, 1_000_000, DEFAULT_SUPPORT_TOL).unwrap();
        assert!(sol.residual <= 1e-14);
        assert_eq!(sol.p_witness[0], 0.0);
        assert_eq!(sol.p_witness[1], 0.0);
        let free = blahut_arimoto(&w, 1e-12, 10_000_000).unwrap();
        assert_abs_diff_eq!(sol.capacity, free.capacity, epsilon = 1e-12);
    }

    #[test]
    fn constrained_steps_keep_every_output_alive() {
        // Output 3 comes only from input 0, whose optimal mass is tiny. A full
        // step to a vertex without input 0 used to empty it.
        let w = Channel::new(vec![
            vec![
                0.5994549453680814,
                0.06569504568104423,
                0.2883869334591138,
                0.04646307549176055,
            ],
            vec![0.7507331880539182, 0.0, 0.24926681194608186, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        let cs = ConstraintSet::new(
            3,
            vec![
                vec![0.2788152654052923, -0.2677422672143765, 1.0258446348636403],
                vec![
                    -0.20714192324870295,
                    0.44553444389775354,
                    -1.1496617948149077,
                ],
                vec![
                    -0.28263826725708385,
                    0.4339707958441598,
                    0.08795865728678512,
                ],
            ],
        )
        .unwrap();
        let sol = constrained_capacity(&w, &cs, 1e-9, 100_000).unwrap();
        assert!(sol.capacity.is_finite());
        assert!(sol.residual <= 1e-9);
        assert!(sol.q_star.as_slice().iter().all(|&v| v > 0.0));
        assert!(sol.p_witness[0] > 0.0);
    }
}
