//! The polytope of admissible inputs: the probability simplex, optionally cut
//! by linear constraints `<p, a> >= 0`.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::capacity::ConstraintSet;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, RANK_TOL};
use crate::lp::{Cmp, LinearProgram};

const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct InputPolytope {
    n: usize,
    constraints: Vec<Vec<f64>>,
    hull: Vec<Vec<f64>>,
    center: Vec<f64>,
    vertices: Vec<Vec<f64>>,
}

impl InputPolytope {
    /// The full probability simplex over `n` symbols.
    pub fn simplex(n: usize) -> Self {
        InputPolytope {
            n,
            constraints: Vec::new(),
            hull: linalg::sum_zero_basis(n),
            center: vec![1.0 / n as f64; n],
            vertices: (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect(),
        }
    }

    /// The simplex cut by every halfspace in `constraints`.
    ///
    /// Coordinates and constraints that are identically zero on the polytope
    /// are detected by one LP each, so the affine hull and a relative-interior
    /// point are exact even for lower-dimensional polytopes.
    pub fn constrained(n: usize, constraints: &ConstraintSet) -> Result<Self> {
        if constraints.is_empty() {
            return Ok(Self::simplex(n));
        }
        let vectors = constraints.vectors().to_vec();
        let mut shell = InputPolytope {
            n,
            constraints: vectors.clone(),
            hull: Vec::new(),
            center: Vec::new(),
            vertices: Vec::new(),
        };

        let mut equalities = vec![vec![1.0; n]];
        let mut maximizers = Vec::new();
        for x in 0..n {
            let mut e = vec![0.0; n];
            e[x] = 1.0;
            let v = shell.lp_vertex(&e, true)?;
            if v[x] <= ZERO_TOL {
                equalities.push(e);
            }
            maximizers.push(v);
        }
        for a in &vectors {
            let v = shell.lp_vertex(a, true)?;
            if dot(a, &v) <= ZERO_TOL * norm(a).max(1.0) {
                equalities.push(a.clone());
            }
            maximizers.push(v);
            let w = shell.lp_vertex(a, false)?;
            shell.vertices.push(w);
        }
        let mut center = vec![0.0; n];
        for v in &maximizers {
            linalg::axpy(1.0 / maximizers.len() as f64, v, &mut center);
        }
        shell.vertices.extend(maximizers);
        dedup_points(&mut shell.vertices);
        shell.hull = linalg::null_space(&equalities, n, RANK_TOL);
        shell.center = center;
        Ok(shell)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_constrained(&self) -> bool {
        !self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[Vec<f64>] {
        &self.constraints
    }

    /// Orthonormal basis of the directions spanned by the polytope.
    pub fn hull_basis(&self) -> &[Vec<f64>] {
        &self.hull
    }

    /// A point in the relative interior.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.n
            && p.iter().all(|&v| v >= -tol)
            && (p.iter().sum::<f64>() - 1.0).abs() <= tol
            && self
                .constraints
                .iter()
                .all(|a| dot(a, p) >= -tol * norm(a).max(1.0))
    }

    /// The interval `[lo, hi]` of steps `s` with `p + s * dir` feasible.
    /// `dir` must sum to zero.
    pub fn chord(&self, p: &[f64], dir: &[f64]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut limit = |value: f64, rate: f64| {
            let value = value.max(0.0);
            if rate > 1e-15 {
                lo = lo.max(-value / rate);
            } else if rate < -1e-15 {
                hi = hi.min(value / -rate);
            }
        };
        for (&px, &dx) in p.iter().zip(dir) {
            limit(px, dx);
        }
        for a in &self.constraints {
            let scale = norm(a).max(1.0);
            limit(dot(a, p) / scale, dot(a, dir) / scale);
        }
        (lo.min(0.0), hi.max(0.0))
    }

    /// Uniformly distributed unit direction in the affine hull.
    pub fn random_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let coeffs: Vec<f64> = (0..self.hull.len())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let v = linalg::combine(&self.hull, &coeffs, self.n);
            let nv = norm(&v);
            if nv > 1e-12 || self.hull.is_empty() {
                return if nv > 0.0 {
                    linalg::scaled(&v, 1.0 / nv)
                } else {
                    v
                };
            }
        }
    }

    /// A draw from the uniform distribution on the polytope: flat Dirichlet on
    /// the simplex, hit-and-run from the relative-interior point otherwise.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        if !self.is_constrained() {
            return dirichlet_on(rng, self.n, &(0..self.n).collect::<Vec<_>>());
        }
        let mut p = self.center.clone();
        if self.hull.is_empty() {
            return p;
        }
        for _ in 0..(10 + 3 * self.n) {
            let dir = self.random_direction(rng);
            let (lo, hi) = self.chord(&p, &dir);
            let s = lo + (hi - lo) * rng.random::<f64>();
            linalg::axpy(s, &dir, &mut p);
        }
        clean(&mut p);
        p
    }

    /// A draw concentrated on the boundary: a random face of the simplex, or
    /// for constrained polytopes a chord endpoint or a point between two
    /// vertices.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        if !self.is_constrained() {
            if self.n < 2 {
                return vec![1.0];
            }
            let size = rng.random_range(1..self.n);
            let mut face = index::sample(rng, self.n, size).into_vec();
            face.sort_unstable();
            return dirichlet_on(rng, self.n, &face);
        }
        if rng.random::<bool>() || self.vertices.len() < 2 {
            let mut p = self.sample_interior(rng);
            let dir = self.random_direction(rng);
            let (_, hi) = self.chord(&p, &dir);
            if hi.is_finite() {
                linalg::axpy(hi, &dir, &mut p);
            }
            clean(&mut p);
            p
        } else {
            let i = rng.random_range(0..self.vertices.len());
            let j = rng.random_range(0..self.vertices.len());
            let w: f64 = rng.random();
            let mut p = linalg::scaled(&self.vertices[i], w);
            linalg::axpy(1.0 - w, &self.vertices[j], &mut p);
            clean(&mut p);
            p
        }
    }

    /// A vertex maximizing `<g, p>` over the polytope.
    pub fn linear_max(&self, g: &[f64]) -> Result<Vec<f64>> {
        if !self.is_constrained() {
            let mut best = 0;
            for i in 1..self.n {
                if g[i] > g[best] {
                    best = i;
                }
            }
            let mut e = vec![0.0; self.n];
            e[best] = 1.0;
            return Ok(e);
        }
        self.lp_vertex(g, true)
    }

    fn lp_vertex(&self, objective: &[f64], maximize: bool) -> Result<Vec<f64>> {
        let mut lp = if maximize {
            LinearProgram::maximize(objective.to_vec())
        } else {
            LinearProgram::minimize(objective.to_vec())
        };
        lp = lp.constraint(vec![1.0; self.n], Cmp::Eq, 1.0);
        for a in &self.constraints {
            lp = lp.constraint(a.clone(), Cmp::Ge, 0.0);
        }
        let mut x = lp.solve()?.x;
        clean(&mut x);
        Ok(x)
    }
}

/// Checks that `{p in simplex : <p, a> >= 0}` is nonempty.
pub(crate) fn check_feasible(n: usize, vectors: &[Vec<f64>]) -> Result<()> {
    let mut lp = LinearProgram::maximize(vec![0.0; n]).constraint(vec![1.0; n], Cmp::Eq, 1.0);
    for a in vectors {
        lp = lp.constraint(a.clone(), Cmp::Ge, 0.0);
    }
    match lp.solve() {
        Ok(_) => Ok(()),
        Err(Error::Infeasible) => Err(Error::Infeasible),
        Err(e) => Err(e),
    }
}

fn dirichlet_on<R: Rng + ?Sized>(rng: &mut R, n: usize, support: &[usize]) -> Vec<f64> {
    let mut p = vec![0.0; n];
    let mut total = 0.0;
    for &i in support {
        let e: f64 = rng.sample(Exp1);
        p[i] = e;
        total += e;
    }
    for v in p.iter_mut() {
        *v /= total;
    }
    p
}

/// Clips rounding noise so the point is a valid distribution.
pub(crate) fn clean(p: &mut [f64]) {
    for v in p.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        for v in p.iter_mut() {
            *v /= total;
        }
    }
}

fn dedup_points(points: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points.drain(..) {
        if !out
            .iter()
            .any(|q| linalg::norm(&linalg::sub(q, &p)) < 1e-12)
        {
            out.push(p);
        }
    }
    *points = out;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn simplex_samples_are_feasible() {
        let poly = InputPolytope::simplex(4);
        let mut r = rng::stream(7, 0, 0);
        for _ in 0..200 {
            assert!(poly.contains(&poly.sample_interior(&mut r), 1e-12));
            let b = poly.sample_boundary(&mut r);
            assert!(poly.contains(&b, 1e-12));
            assert!(b.contains(&0.0));
        }
    }

    #[test]
    fn constrained_samples_respect_halfspaces() {
        let cs = ConstraintSet::new(3, vec![vec![0.3, -0.7, 0.0], vec![-0.2, 0.1, 0.5]]).unwrap();
        let poly = InputPolytope::constrained(3, &cs).unwrap();
        assert_eq!(poly.hull_basis().len(), 2);
        assert!(poly.contains(poly.center(), 1e-12));
        let mut r = rng::stream(3, 0, 0);
        for _ in 0..200 {
            assert!(poly.contains(&poly.sample_interior(&mut r), 1e-10));
            assert!(poly.contains(&poly.sample_boundary(&mut r), 1e-10));
        }
    }

    #[test]
    fn implicit_equalities_shrink_the_hull() {
        // p0 <= 0 forces p0 = 0.
        let cs = ConstraintSet::new(3, vec![vec![-1.0, 0.0, 0.0]]).unwrap();
        let poly = InputPolytope::constrained(3, &cs).unwrap();
        assert_eq!(poly.hull_basis().len(), 1);
        assert!(poly.center()[0].abs() < 1e-12);
    }

    #[test]
    fn chord_of_simplex() {
        let poly = InputPolytope::simplex(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (lo, hi) = poly.chord(&[0.5, 0.5], &[h, -h]);
        assert!((lo + 0.5 / h).abs() < 1e-12 && (hi - 0.5 / h).abs() < 1e-12);
    }

    #[test]
    fn linear_max_picks_vertices() {
        let poly = InputPolytope::simplex(3);
        assert_eq!(
            poly.linear_max(&[0.1, 0.5, 0.2]).unwrap(),
            vec![0.0, 1.0, 0.0]
        );
        let cs = ConstraintSet::new(2, vec![vec![0.3, -0.7]]).unwrap();
        let poly = InputPolytope::constrained(2, &cs).unwrap();
        let v = poly.linear_max(&[0.0, 1.0]).unwrap();
        assert!((v[0] - 0.7).abs() < 1e-9 && (v[1] - 0.3).abs() < 1e-9);
    }
}
