//! Projection onto the capacity-achieving set, zero-support and active
//! constraint sets, and the polyhedral cone of valid directions.
//!
//! With `K = {v in V : v(x) >= 0 on X0, <v, a> >= 0 on A0}` the valid
//! directions at a member `p*` form
//! `{d : sum d = 0, d(x) >= 0 on X0, <d, a> >= 0 on A0} ∩ -K*`.

use rayon::prelude::*;

use crate::capacity::{ConstraintSet, PiSet};
use crate::channel::{Distribution, TangentVector};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, RANK_TOL};
use crate::lp::{Cmp, LinearProgram};
use crate::polytope::{clean, InputPolytope};
use crate::qp::project_polyhedron;
use crate::rng;

/// Absolute threshold for the zero tests defining X0 and A0.
pub const ZERO_TOL: f64 = 1e-9;

/// Default tolerance of [`cone_membership`].
pub const MEMBERSHIP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportSets {
    /// Inputs with zero mass.
    pub x_zero: Vec<usize>,
    /// Indices of constraints holding with equality.
    pub a_zero: Vec<usize>,
}

/// `K = {sum_j c_j basis_j : rows * c >= 0}`, the tangent cone of the
/// capacity-achieving set at a point with the given support pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGenerators {
    pub basis: Vec<Vec<f64>>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeDescription {
    /// Vectors orthogonal to every member: the all-ones vector and the
    /// lineality space of `K`.
    pub equalities: Vec<Vec<f64>>,
    pub x_zero: Vec<usize>,
    pub a_zero: Vec<Vec<f64>>,
    pub dual_generators: DualGenerators,
}

/// Euclidean projection onto the capacity-achieving set, with the distance.
pub fn project_to_pi(p: &Distribution, pi: &PiSet) -> Result<(Distribution, f64)> {
    if p.len() != pi.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: pi.n_inputs(),
            found: p.len(),
        });
    }
    let (proj, dist) = project_raw(p.as_slice(), pi)?;
    Ok((Distribution::from_approx(proj)?, dist))
}

pub(crate) fn project_raw(p: &[f64], pi: &PiSet) -> Result<(Vec<f64>, f64)> {
    let rep = pi.representative.as_slice();
    let mut proj = if pi.dim() == 0 {
        rep.to_vec()
    } else {
        let basis = pi.basis_vectors();
        let target = linalg::coords(&basis, &linalg::sub(p, rep));
        let (rows, rhs) = pi.coord_polytope();
        let c = project_polyhedron(&target, rows, rhs, &vec![0.0; basis.len()])?;
        pi.point_at(&c)
    };
    clean(&mut proj);
    let dist = norm(&linalg::sub(p, &proj));
    Ok((proj, dist))
}

pub fn support_sets(
    p_star: &Distribution,
    constraints: Option<&ConstraintSet>,
    tol: f64,
) -> SupportSets {
    let p = p_star.as_slice();
    let x_zero = (0..p.len()).filter(|&x| p[x].abs() <= tol).collect();
    let a_zero = constraints
        .map(|cs| {
            cs.vectors()
                .iter()
                .enumerate()
                .filter(|(_, a)| dot(a, p).abs() <= tol)
                .map(|(i, _)| i)
                .collect()
        })
        .unwrap_or_default();
    SupportSets { x_zero, a_zero }
}

pub fn valid_direction_cone(pi: &PiSet, sets: &SupportSets) -> ConeDescription {
    let n = pi.n_inputs();
    let a_zero: Vec<Vec<f64>> = match &pi.constraint_set {
        Some(cs) => sets
            .a_zero
            .iter()
            .map(|&i| cs.vectors()[i].clone())
            .collect(),
        None => Vec::new(),
    };
    let basis = pi.basis_vectors();
    let mut rows = Vec::new();
    if !basis.is_empty() {
        for &x in &sets.x_zero {
            let row: Vec<f64> = basis.iter().map(|v| v[x]).collect();
            if norm(&row) > 1e-12 {
                rows.push(row);
            }
        }
        for a in &a_zero {
            let scale = norm(a).max(1.0);
            let row: Vec<f64> = basis.iter().map(|v| dot(a, v) / scale).collect();
            if norm(&row) > 1e-12 {
                rows.push(row);
            }
        }
    }
    let lineality: Vec<Vec<f64>> = if basis.is_empty() {
        Vec::new()
    } else {
        linalg::null_space(&rows, basis.len(), RANK_TOL)
            .iter()
            .map(|c| linalg::combine(&basis, c, n))
            .collect()
    };
    let mut equalities = vec![vec![1.0; n]];
    equalities.extend(linalg::orthonormalize(&lineality, 1e-10));
    ConeDescription {
        equalities,
        x_zero: sets.x_zero.clone(),
        a_zero,
        dual_generators: DualGenerators { basis, rows },
    }
}

/// Tests `d` against the cone; scale-invariant since `d` is normalized first.
pub fn cone_membership(d: &TangentVector, cone: &ConeDescription, tol: f64) -> Result<bool> {
    let length = d.norm();
    if length == 0.0 {
        return Ok(true);
    }
    let d: Vec<f64> = d.as_slice().iter().map(|v| v / length).collect();
    if cone
        .equalities
        .iter()
        .any(|e| dot(&d, e).abs() > tol * norm(e).max(1.0))
    {
        return Ok(false);
    }
    if cone.x_zero.iter().any(|&x| d[x] < -tol) {
        return Ok(false);
    }
    if cone
        .a_zero
        .iter()
        .any(|a| dot(&d, a) < -tol * norm(a).max(1.0))
    {
        return Ok(false);
    }
    let basis = &cone.dual_generators.basis;
    if basis.is_empty() {
        return Ok(true);
    }
    // max <d, V c> over c with rows c >= 0 and |V c|_inf <= 1
    let objective = linalg::coords(basis, &d);
    let mut lp = LinearProgram::maximize(objective).free();
    for row in &cone.dual_generators.rows {
        lp = lp.constraint(row.clone(), Cmp::Ge, 0.0);
    }
    for x in 0..d.len() {
        let row: Vec<f64> = basis.iter().map(|v| v[x]).collect();
        if norm(&row) > 1e-14 {
            lp = lp.constraint(row.clone(), Cmp::Le, 1.0);
            lp = lp.constraint(row, Cmp::Ge, -1.0);
        }
    }
    Ok(lp.solve()?.objective <= tol)
}

/// Valid directions `(p - p^Pi) / |p - p^Pi|` from feasible points `p`, paired
/// with their projections. Three quarters of the draws are interior, the rest
/// lie on random faces. Sample `i` uses its own random stream, so the output
/// does not depend on the number of worker threads.
pub fn sample_valid_directions(
    pi: &PiSet,
    feasible: &InputPolytope,
    count: usize,
    seed: u64,
) -> Result<Vec<(Distribution, TangentVector)>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "direction count must be at least 1".into(),
        ));
    }
    if pi.covers_feasible() {
        return Err(Error::Degenerate);
    }
    let draws: Vec<Option<(Vec<f64>, Vec<f64>)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, rng::DIRECTIONS, i as u64);
            for attempt in 0..64 {
                let p = if attempt % 4 == 3 || i % 4 == 3 {
                    feasible.sample_boundary(&mut rng)
                } else {
                    feasible.sample_interior(&mut rng)
                };
                let Ok((proj, dist)) = project_raw(&p, pi) else {
                    continue;
                };
                if dist < 1e-12 {
                    continue;
                }
                let d = linalg::scaled(&linalg::sub(&p, &proj), 1.0 / dist);
                return Some((proj, d));
            }
            None
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for (proj, d) in draws.into_iter().flatten() {
        let d = center(d);
        out.push((Distribution::from_approx(proj)?, TangentVector::from_raw(d)));
    }
    if out.is_empty() {
        return Err(Error::Degenerate);
    }
    Ok(out)
}

/// Removes the rounding drift from the sum of a direction and renormalizes.
fn center(mut d: Vec<f64>) -> Vec<f64> {
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    for v in d.iter_mut() {
        *v -= mean;
    }
    let l = norm(&d);
    if l > 0.0 {
        for v in d.iter_mut() {
            *v /= l;
        }
    }
    d
}

/// Euclidean projection onto the cone by Dykstra alternation between the
/// polyhedral part and `-K*`; the latter uses `P_{-K*}(w) = w - P_K(w)`.
pub fn project_onto_cone(w: &[f64], cone: &ConeDescription) -> Result<Vec<f64>> {
    let n = w.len();
    let free = linalg::null_space(&cone.equalities, n, RANK_TOL);
    if free.is_empty() {
        return Ok(vec![0.0; n]);
    }
    let mut face_rows: Vec<Vec<f64>> = Vec::new();
    for &x in &cone.x_zero {
        face_rows.push(free.iter().map(|e| e[x]).collect());
    }
    for a in &cone.a_zero {
        face_rows.push(free.iter().map(|e| dot(a, e)).collect());
    }
    let face_rhs = vec![0.0; face_rows.len()];
    let project_face = |v: &[f64]| -> Result<Vec<f64>> {
        let target = linalg::coords(&free, v);
        let z = project_polyhedron(&target, &face_rows, &face_rhs, &vec![0.0; free.len()])?;
        Ok(linalg::combine(&free, &z, n))
    };
    let k = &cone.dual_generators;
    let k_rhs = vec![0.0; k.rows.len()];
    let project_polar = |v: &[f64]| -> Result<Vec<f64>> {
        if k.basis.is_empty() {
            return Ok(v.to_vec());
        }
        let target = linalg::coords(&k.basis, v);
        let c = project_polyhedron(&target, &k.rows, &k_rhs, &vec![0.0; k.basis.len()])?;
        Ok(linalg::sub(v, &linalg::combine(&k.basis, &c, n)))
    };

    let mut x = w.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for _ in 0..500 {
        let y = project_face(&linalg::combine(&[x.clone(), p.clone()], &[1.0, 1.0], n))?;
        p = linalg::combine(&[x.clone(), p, y.clone()], &[1.0, 1.0, -1.0], n);
        let next = project_polar(&linalg::combine(&[y.clone(), q.clone()], &[1.0, 1.0], n))?;
        q = linalg::combine(&[y.clone(), q, next.clone()], &[1.0, 1.0, -1.0], n);
        let change = norm(&linalg::sub(&next, &x));
        x = next;
        if change <= 1e-13 * (1.0 + norm(w))
            && norm(&linalg::sub(&x, &y)) <= 1e-12 * (1.0 + norm(w))
        {
            break;
        }
    }
    Ok(x)
}
