use capcert_core::fixtures::{self, random_channel};
use capcert_core::rng::stream;
use capcert_core::*;
use proptest::prelude::*;
use rand::Rng;

fn pi_of(w: &Channel) -> PiSet {
    analyze(
        w,
        &ConstraintSet::empty(),
        1e-12,
        10_000_000,
        DEFAULT_SUPPORT_TOL,
    )
    .unwrap()
    .1
}

fn random_input(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Nearest member found by scanning the set at step 1e-4 along its
/// (at most one-dimensional) parallel subspace.
fn grid_projection(p: &[f64], pi: &PiSet) -> f64 {
    let rep = pi.representative.as_slice();
    match pi.v_basis.len() {
        0 => dist(p, rep),
        1 => {
            let v = pi.v_basis[0].as_slice();
            let step = 1e-4;
            let member = |c: f64| -> Option<Vec<f64>> {
                let m: Vec<f64> = rep.iter().zip(v).map(|(r, x)| r + c * x).collect();
                m.iter().all(|&x| x >= -1e-15).then_some(m)
            };
            let mut best = dist(p, rep);
            for sign in [1.0, -1.0] {
                let mut k = 1;
                while let Some(m) = member(sign * k as f64 * step) {
                    best = best.min(dist(p, &m));
                    k += 1;
                }
            }
            best
        }
        k => panic!("grid oracle covers sets of dimension <= 1, got {k}"),
    }
}

#[test]
fn projection_matches_grid_oracle_on_small_fixtures() {
    let mut channels = fixtures::suite(100, 0);
    channels.retain(|(_, w)| w.n_inputs() <= 3);
    assert!(!channels.is_empty());
    for (name, w) in channels {
        let pi = pi_of(&w);
        let mut rng = stream(17, 0, 0);
        for _ in 0..20 {
            let p = random_input(w.n_inputs(), &mut rng);
            let (_, d) =
                project_to_pi(&Distribution::from_approx(p.clone()).unwrap(), &pi).unwrap();
            let oracle = grid_projection(&p, &pi);
            assert!(
                d <= oracle + 1e-12,
                "{name}: projection {d} worse than grid {oracle}"
            );
            assert!(
                oracle - d <= 2e-4,
                "{name}: projection {d} vs grid {oracle}"
            );
        }
    }
}

#[test]
fn segment_example() {
    let w = Channel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let pi = pi_of(&w);
    let p = Distribution::new(vec![0.1, 0.3, 0.6]).unwrap();
    let (proj, d) = project_to_pi(&p, &pi).unwrap();
    assert!(
        (proj[0] - 0.15).abs() < 1e-12
            && (proj[1] - 0.35).abs() < 1e-12
            && (proj[2] - 0.5).abs() < 1e-12
    );
    assert!((d - 0.015f64.sqrt()).abs() < 1e-12);
    assert!((grid_projection(p.as_slice(), &pi) - d).abs() < 2e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn projection_is_idempotent_and_lipschitz(seed in any::<u64>()) {
        let mut w = random_channel(seed, 0, 5);
        if seed % 3 == 0 {
            // add a duplicate row so the set has positive dimension
            let mut rows = w.rows().to_vec();
            rows.push(rows[0].clone());
            w = Channel::new(rows).unwrap();
        }
        let pi = pi_of(&w);
        let mut rng = stream(seed, 1, 0);
        for _ in 0..25 {
            let p = Distribution::from_approx(random_input(w.n_inputs(), &mut rng)).unwrap();
            let q = Distribution::from_approx(random_input(w.n_inputs(), &mut rng)).unwrap();
            let (pp, _) = project_to_pi(&p, &pi).unwrap();
            let (qq, _) = project_to_pi(&q, &pi).unwrap();
            let (_, again) = project_to_pi(&pp, &pi).unwrap();
            prop_assert!(again <= 1e-12, "idempotence: {again}");
            prop_assert!(dist(pp.as_slice(), qq.as_slice()) <= dist(p.as_slice(), q.as_slice()) + 1e-9);
        }
    }

    #[test]
    fn membership_is_scale_invariant(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let base = random_channel(seed, 2, 4);
        let mut rows = base.rows().to_vec();
        rows.push(rows[0].clone());
        let w = Channel::new(rows).unwrap();
        let pi = pi_of(&w);
        let sets = support_sets(&pi.representative, None, 1e-9);
        let cone = valid_direction_cone(&pi, &sets);
        let mut rng = stream(seed, 3, 0);
        for _ in 0..10 {
            let mut d: Vec<f64> = (0..w.n_inputs()).map(|_| rng.random::<f64>() - 0.5).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            d.iter_mut().for_each(|v| *v -= mean);
            let scaled: Vec<f64> = d.iter().map(|v| v * scale).collect();
            let a = cone_membership(&TangentVector::new(d).unwrap(), &cone, 1e-7).unwrap();
            let b = cone_membership(&TangentVector::new(scaled).unwrap(), &cone, 1e-7).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn limits_of_valid_directions_are_valid(seed in any::<u64>()) {
        let base = random_channel(seed, 4, 4);
        let mut rows = base.rows().to_vec();
        rows.push(rows[rows.len() - 1].clone());
        let w = Channel::new(rows).unwrap();
        let pi = pi_of(&w);
        prop_assume!(!pi.covers_feasible());
        let draws = sample_valid_directions(&pi, pi.feasible(), 5, seed).unwrap();
        for (p_star, d) in draws {
            let cone = valid_direction_cone(&pi, &support_sets(&p_star, None, 1e-9));
            prop_assert!(cone_membership(&d, &cone, 1e-7).unwrap());
            // points approaching the set along a curved path
            let mut last = None;
            for k in 1..=12 {
                let t = 0.05 / 2f64.powi(k);
                let bend = t * t;
                let p: Vec<f64> = p_star.as_slice().iter().zip(d.as_slice()).enumerate()
                    .map(|(x, (a, b))| a + t * b + if x == 0 { bend } else { -bend / (w.n_inputs() - 1) as f64 })
                    .collect();
                if p.iter().any(|&v| v < 0.0) {
                    break;
                }
                let p = Distribution::from_approx(p).unwrap();
                let (proj, dd) = project_to_pi(&p, &pi).unwrap();
                if dd < 1e-12 {
                    break;
                }
                let dir: Vec<f64> = p.as_slice().iter().zip(proj.as_slice()).map(|(a, b)| (a - b) / dd).collect();
                last = Some((proj, dir));
            }
            if let Some((proj, dir)) = last {
                let cone = valid_direction_cone(&pi, &support_sets(&proj, None, 1e-9));
                let dir = TangentVector::new(dir).unwrap_or_else(|_| d.clone());
                prop_assert!(cone_membership(&dir, &cone, 1e-6).unwrap());
            }
        }
    }
}
