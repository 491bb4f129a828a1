//! Standard test channels and seeded random channels and constraint sets.

use rand::Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};

use crate::capacity::ConstraintSet;
use crate::channel::Channel;
use crate::error::Result;
use crate::rng;

const CHANNELS: u64 = 11;
const CONSTRAINTS: u64 = 12;

/// Binary symmetric channel with crossover `delta`.
pub fn bsc(delta: f64) -> Channel {
    Channel::new(vec![vec![1.0 - delta, delta], vec![delta, 1.0 - delta]]).expect("valid crossover")
}

/// Noiseless channel on `n` symbols.
pub fn identity(n: usize) -> Channel {
    Channel::new(
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    )
    .expect("identity is stochastic")
}

/// Channels with repeated input rows, so the capacity-achieving set is not a point.
pub fn duplicate_rows() -> Vec<(String, Channel)> {
    let build = |rows: Vec<Vec<f64>>| Channel::new(rows).expect("fixture rows are stochastic");
    vec![
        (
            "merged".into(),
            build(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]),
        ),
        (
            "dup-bsc".into(),
            build(vec![vec![0.9, 0.1], vec![0.9, 0.1], vec![0.1, 0.9]]),
        ),
        (
            "dup-ternary".into(),
            build(vec![
                vec![0.8, 0.1, 0.1],
                vec![0.1, 0.8, 0.1],
                vec![0.1, 0.1, 0.8],
                vec![0.8, 0.1, 0.1],
            ]),
        ),
        (
            "dup-pair".into(),
            build(vec![
                vec![0.7, 0.3, 0.0],
                vec![0.7, 0.3, 0.0],
                vec![0.0, 0.2, 0.8],
                vec![0.0, 0.2, 0.8],
            ]),
        ),
    ]
}

/// Random channel with `2 <= |X|, |Y| <= max_size` and Dirichlet(1) rows;
/// about one in four channels has some entries set to zero.
pub fn random_channel(seed: u64, index: u64, max_size: usize) -> Channel {
    let mut rng = rng::stream(seed, CHANNELS, index);
    let nx = rng.random_range(2..=max_size);
    let ny = rng.random_range(2..=max_size);
    let sparse = rng.random::<f64>() < 0.25;
    let rows = (0..nx)
        .map(|_| loop {
            let mut row: Vec<f64> = (0..ny)
                .map(|_| {
                    let e: f64 = Exp1.sample(&mut rng);
                    if sparse && rng.random::<f64>() < 0.3 {
                        0.0
                    } else {
                        e
                    }
                })
                .collect();
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
                let drift: f64 = 1.0 - row.iter().sum::<f64>();
                let last = row.iter().rposition(|&v| v > 0.0).expect("row has mass");
                row[last] += drift;
                break row;
            }
        })
        .collect();
    Channel::new(rows).expect("normalized rows")
}

/// One to three random halfspaces `<p, a> >= 0` that all hold strictly at a
/// common random point, so the feasible polytope has a nonempty interior.
pub fn random_constraints(n_inputs: usize, seed: u64, index: u64) -> Result<ConstraintSet> {
    let mut rng = rng::stream(seed, CONSTRAINTS, index);
    let count = rng.random_range(1..=3);
    let mut p: Vec<f64> = (0..n_inputs).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    let vectors = (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..n_inputs)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let shift: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() - 0.05 * scale;
            g.iter().map(|v| v - shift).collect()
        })
        .collect();
    ConstraintSet::new(n_inputs, vectors)
}

/// BSC family, identity family, duplicate-row channels and `random` random channels.
pub fn suite(random: usize, seed: u64) -> Vec<(String, Channel)> {
    let mut out = Vec::new();
    for delta in [0.05, 0.1, 0.2, 0.3] {
        out.push((format!("bsc-{delta}"), bsc(delta)));
    }
    for n in 2..=6 {
        out.push((format!("identity-{n}"), identity(n)));
    }
    out.extend(duplicate_rows());
    for i in 0..random {
        out.push((format!("random-{i}"), random_channel(seed, i as u64, 5)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_channels_are_reproducible() {
        assert_eq!(random_channel(5, 3, 5), random_channel(5, 3, 5));
        assert_ne!(random_channel(5, 3, 5), random_channel(5, 4, 5));
    }

    #[test]
    fn random_constraints_are_feasible() {
        for i in 0..20 {
            let cs = random_constraints(4, 1, i).unwrap();
            assert!((1..=3).contains(&cs.len()));
        }
    }
}
