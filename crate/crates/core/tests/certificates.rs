use capcert_core::fixtures::{self, random_channel, random_constraints};
use capcert_core::*;
use proptest::prelude::*;

struct Run {
    pi: PiSet,
    exp: ExpansionData,
    cert: QuadraticCertificate,
}

fn run(w: &Channel, cs: &ConstraintSet, samples: usize, seed: u64) -> Run {
    let (sol, pi) = analyze(w, cs, 1e-9, 1_000_000, DEFAULT_SUPPORT_TOL).unwrap();
    let exp = expansion_at(w, &sol).unwrap();
    let cert = certify(w, &pi, &exp, sol.capacity, samples, seed).unwrap();
    Run { pi, exp, cert }
}

/// Every feasible input achieves capacity, so there is nothing to certify.
fn degenerate(w: &Channel, cs: &ConstraintSet) -> bool {
    let (_, pi) = analyze(w, cs, 1e-9, 1_000_000, DEFAULT_SUPPORT_TOL).unwrap();
    pi.covers_feasible()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alpha_hat_is_below_fresh_samples(seed in any::<u64>()) {
        let w = random_channel(seed, 0, 5);
        prop_assume!(!degenerate(&w, &ConstraintSet::empty()));
        let r = run(&w, &ConstraintSet::empty(), 2000, seed);
        let fresh = sample_valid_directions(&r.pi, r.pi.feasible(), 2000, seed.wrapping_add(1)).unwrap();
        for (_, d) in &fresh {
            prop_assert!(r.cert.alpha_hat <= alpha_of_direction(d, &r.exp) + 1e-9);
        }
    }

    #[test]
    fn envelope_stays_below_alpha_on_radius(seed in any::<u64>()) {
        let w = random_channel(seed, 1, 5);
        prop_assume!(!degenerate(&w, &ConstraintSet::empty()));
        let r = run(&w, &ConstraintSet::empty(), 500, seed);
        prop_assert!(r.cert.mu > 0.0 && r.cert.mu < r.exp.envelope_limit());
        for k in 0..1000 {
            let t = r.cert.mu * k as f64 / 1000.0;
            prop_assert!(remainder_envelope(&r.exp, t).unwrap() < r.cert.alpha_hat);
        }
    }

    #[test]
    fn random_channels_satisfy_the_bound(seed in any::<u64>()) {
        let w = random_channel(seed, 2, 5);
        prop_assume!(!degenerate(&w, &ConstraintSet::empty()));
        let r = run(&w, &ConstraintSet::empty(), 2000, seed);
        let report = verify_theorem(&w, &r.pi, &r.cert, 2000, seed, 1e-9).unwrap();
        prop_assert_eq!(report.status, Status::Pass, "{:?}", report.violations.first());
    }

    #[test]
    fn constrained_channels_satisfy_the_bound(seed in any::<u64>()) {
        let w = random_channel(seed, 3, 4);
        let cs = random_constraints(w.n_inputs(), seed, 0).unwrap();
        prop_assume!(!degenerate(&w, &cs));
        let r = run(&w, &cs, 2000, seed);
        prop_assert!(r.cert.constrained);
        let report = verify_theorem(&w, &r.pi, &r.cert, 2000, seed, 1e-9).unwrap();
        prop_assert_eq!(report.status, Status::Pass, "{:?}", report.violations.first());
    }
}

#[test]
fn fixture_families_pass() {
    let mut channels = vec![];
    for delta in [0.05, 0.1, 0.2, 0.3] {
        channels.push(fixtures::bsc(delta));
    }
    for n in 2..=6 {
        channels.push(fixtures::identity(n));
    }
    channels.extend(fixtures::duplicate_rows().into_iter().map(|(_, w)| w));
    for w in channels {
        let r = run(&w, &ConstraintSet::empty(), 2000, 0);
        let report = verify_theorem(&w, &r.pi, &r.cert, 4000, 0, 1e-9).unwrap();
        assert_eq!(report.status, Status::Pass);
        assert_eq!(report.missed, 0);
    }
}

#[test]
fn identity_alpha_is_a_quarter_of_the_size() {
    for n in 2..=6 {
        let r = run(&fixtures::identity(n), &ConstraintSet::empty(), 1000, 0);
        assert!((r.cert.alpha_hat - n as f64 / 4.0).abs() < 1e-9);
    }
}

#[test]
fn inflated_certificate_is_caught() {
    let w = fixtures::bsc(0.1);
    let r = run(&w, &ConstraintSet::empty(), 1000, 0);
    let inflated = QuadraticCertificate {
        alpha_hat: 4.0 * r.cert.alpha_hat,
        ..r.cert.clone()
    };
    assert_eq!(
        verify_theorem(&w, &r.pi, &r.cert, 4000, 0, 1e-9)
            .unwrap()
            .status,
        Status::Pass
    );
    let report = verify_theorem(&w, &r.pi, &inflated, 4000, 0, 1e-9).unwrap();
    assert_eq!(report.status, Status::Fail);
    assert!(report.max_gap > 1e-9);
}

#[test]
fn runs_are_reproducible() {
    let w = random_channel(3, 3, 5);
    let a = run(&w, &ConstraintSet::empty(), 1000, 42);
    let b = run(&w, &ConstraintSet::empty(), 1000, 42);
    assert_eq!(a.cert, b.cert);
    let ra = verify_theorem(&w, &a.pi, &a.cert, 2000, 42, 1e-9).unwrap();
    let rb = verify_theorem(&w, &b.pi, &b.cert, 2000, 42, 1e-9).unwrap();
    assert_eq!(ra, rb);
}
