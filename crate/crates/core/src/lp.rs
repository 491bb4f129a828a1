//! Thin dense front end over the `microlp` simplex solver.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    maximize: bool,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            maximize: true,
            objective,
            bounds: vec![(0.0, f64::INFINITY); n],
            rows: Vec::new(),
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            maximize: false,
            ..Self::maximize(objective)
        }
    }

    pub fn bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(bounds.len(), self.objective.len());
        self.bounds = bounds;
        self
    }

    pub fn free(self) -> Self {
        let n = self.objective.len();
        self.bounds(vec![(f64::NEG_INFINITY, f64::INFINITY); n])
    }

    pub fn constraint(mut self, row: Vec<f64>, cmp: Cmp, rhs: f64) -> Self {
        assert_eq!(row.len(), self.objective.len());
        self.rows.push((row, cmp, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let dir = if self.maximize {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        };
        let mut problem = Problem::new(dir);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        for (row, cmp, rhs) in &self.rows {
            let terms: Vec<_> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, &v)| (vars[j], v))
                .collect();
            let op = match cmp {
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Le => ComparisonOp::Le,
                Cmp::Eq => ComparisonOp::Eq,
            };
            if terms.is_empty() {
                let ok = match cmp {
                    Cmp::Ge => 0.0 >= *rhs - 1e-12,
                    Cmp::Le => 0.0 <= *rhs + 1e-12,
                    Cmp::Eq => rhs.abs() <= 1e-12,
                };
                if !ok {
                    return Err(Error::Infeasible);
                }
                continue;
            }
            problem.add_constraint(terms.as_slice(), op, *rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => Error::Infeasible,
            other => Error::Lp(other.to_string()),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| Error::Lp("solve interrupted".into()))?;
        let x: Vec<f64> = vars.iter().map(|&v| solution.var_value(v)).collect();
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective })
    }
}
