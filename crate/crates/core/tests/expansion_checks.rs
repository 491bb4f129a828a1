use capcert_core::fixtures::random_channel;
use capcert_core::rng::stream;
use capcert_core::*;
use proptest::prelude::*;
use rand::Rng;

fn unit_sum_zero(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    d.iter_mut().for_each(|v| *v -= mean);
    let l = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    d.iter_mut().for_each(|v| *v /= l);
    d
}

fn rate(w: &Channel, p: &[f64]) -> f64 {
    mutual_information(w, &Distribution::from_approx(p.to_vec()).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// The formulas are the gradient and half-Hessian at any input whose output
    /// has full support, so they are checked at a random interior point.
    #[test]
    fn derivatives_match_finite_differences(seed in any::<u64>()) {
        let w = random_channel(seed, 0, 5);
        let n = w.n_inputs();
        let mut rng = stream(seed, 5, 0);
        let raw: Vec<f64> = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let p = Distribution::new(raw.iter().map(|v| v / total).collect()).unwrap();
        let q = output_distribution(&w, &p).unwrap();
        let here = CapacitySolution {
            capacity: mutual_information(&w, &p).unwrap(),
            q_star: q,
            p_witness: p.clone(),
            iterations: 0,
            residual: 0.0,
        };
        let e = expansion_at(&w, &here).unwrap();
        for _ in 0..5 {
            let d = unit_sum_zero(n, &mut rng);
            let at = |s: f64| -> Vec<f64> { p.as_slice().iter().zip(&d).map(|(a, b)| a + s * b).collect() };
            let h1 = 1e-5;
            let first = (rate(&w, &at(h1)) - rate(&w, &at(-h1))) / (2.0 * h1);
            prop_assert!((first - e.linear(&d)).abs() <= 1e-6, "first {first} vs {}", e.linear(&d));
            let h2 = 1e-4;
            let second = (rate(&w, &at(h2)) - 2.0 * rate(&w, &at(0.0)) + rate(&w, &at(-h2))) / (h2 * h2);
            prop_assert!((second - 2.0 * e.quadratic(&d)).abs() <= 1e-4, "second {second} vs {}", 2.0 * e.quadratic(&d));
        }
    }

    #[test]
    fn expansion_at_the_optimum(seed in any::<u64>()) {
        let w = random_channel(seed, 1, 5);
        let (sol, pi) = analyze(&w, &ConstraintSet::empty(), 1e-12, 10_000_000, DEFAULT_SUPPORT_TOL).unwrap();
        let e = expansion_at(&w, &sol).unwrap();
        // eigenvalues carry rounding of order eps |H|, and |H| grows like 1/q_min
        let size = e.half_hessian.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(expansion::max_curvature(&e) <= 1e-10 + 1e-13 * size);
        prop_assert!(e.q_min > 0.0);
        for row in 0..e.n_inputs {
            for col in 0..e.n_inputs {
                prop_assert!((e.half_hessian[row][col] - e.half_hessian[col][row]).abs() <= 1e-15);
            }
        }
        prop_assume!(!pi.covers_feasible());
        let draws = sample_valid_directions(&pi, pi.feasible(), 200, seed).unwrap();
        let mut rng = stream(seed, 6, 0);
        for (p_star, d) in &draws {
            let dv = d.as_slice();
            prop_assert!(e.linear(dv) <= 1e-9, "first-order optimality: {}", e.linear(dv));
            let image = OutputDirection::new(&w, d);
            let out_norm = image.d_y.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(image.d_y.iter().sum::<f64>().abs() <= 1e-12);
            if out_norm > 1e-4 {
                prop_assert!(e.quadratic(dv) < -1e-9);
            }
            // remainder bound on feasible steps inside the envelope domain
            let (_, reach) = pi.feasible().chord(p_star.as_slice(), dv);
            let t_max = reach.min(0.999 * e.envelope_limit());
            for _ in 0..5 {
                let t = t_max * rng.random::<f64>();
                let rho = taylor_remainder(&w, p_star, d, t, &e, sol.capacity).unwrap();
                let bound = remainder_envelope(&e, t).unwrap() * t * t;
                prop_assert!(rho.abs() <= bound + 1e-9, "|rho| {} > {}", rho.abs(), bound);
            }
        }
    }
}

#[test]
fn quadratic_vanishes_exactly_on_kernel() {
    let w = Channel::new(vec![vec![0.7, 0.3], vec![0.7, 0.3], vec![0.1, 0.9]]).unwrap();
    let (sol, _) = analyze(
        &w,
        &ConstraintSet::empty(),
        1e-12,
        1_000_000,
        DEFAULT_SUPPORT_TOL,
    )
    .unwrap();
    let e = expansion_at(&w, &sol).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!(e.quadratic(&[s, -s, 0.0]).abs() < 1e-15);
    assert!(e.quadratic(&[s, 0.0, -s]) < -1e-9);
}
