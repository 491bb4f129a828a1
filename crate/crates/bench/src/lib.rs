//! Benchmark workloads shared by the criterion targets.

use capcert_core::fixtures::{bsc, duplicate_rows, random_channel};
use capcert_core::{
    analyze, Channel, ConstraintSet, ExpansionData, PiSet, Result, DEFAULT_SUPPORT_TOL,
};

/// A small channel, a larger random one and a channel whose capacity-achieving set is a segment.
pub fn workloads() -> Vec<(&'static str, Channel)> {
    let dup = duplicate_rows()
        .into_iter()
        .find(|(n, _)| n == "dup-ternary")
        .expect("fixture exists")
        .1;
    vec![
        ("bsc-0.1", bsc(0.1)),
        ("random-5x5", random_channel(1, 0, 5)),
        ("dup-ternary", dup),
    ]
}

/// Everything up to the certificate.
pub fn prepare(channel: &Channel) -> Result<(f64, PiSet, ExpansionData)> {
    let (sol, pi) = analyze(
        channel,
        &ConstraintSet::empty(),
        1e-9,
        1_000_000,
        DEFAULT_SUPPORT_TOL,
    )?;
    let exp = capcert_core::expansion_at(channel, &sol)?;
    Ok((sol.capacity, pi, exp))
}
