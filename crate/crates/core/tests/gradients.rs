mod common;

use common::grad_cases::{composite_cases, full_loss_case, primitive_cases, Case, TOLERANCE};
use mvat_core::distill::PLoss;

fn assert_cases(cases: Vec<Case>) {
    let mut failures = Vec::new();
    for c in cases {
        let r = c.run().unwrap_or_else(|e| panic!("{}: {e}", c.name));
        eprintln!("{:40} {:.2e} probes={}", c.name, r.max_rel_err, r.probes);
        if r.max_rel_err >= TOLERANCE {
            failures.push(format!("{}: {r:?}", c.name));
        }
    }
    assert!(
        failures.is_empty(),
        "gradient mismatches:\n{}",
        failures.join("\n")
    );
}

#[test]
fn primitives_match_finite_differences() {
    assert_cases(primitive_cases());
}

#[test]
fn losses_and_blocks_match_finite_differences() {
    assert_cases(composite_cases());
}

#[test]
fn full_objective_matches_finite_differences() {
    assert_cases(vec![full_loss_case(PLoss::L1), full_loss_case(PLoss::L2)]);
}
