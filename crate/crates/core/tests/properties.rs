//! Property suites over 10^4 random cases each.

mod common;

use common::properties::{run_property, CASES};

fn check(name: &str) {
    if let Err(e) = run_property(name, CASES) {
        panic!("{name}: {e}");
    }
}

#[test]
fn belief_conservation() {
    check("belief conservation");
}

#[test]
fn retirement_absorption() {
    check("retirement absorption");
}

#[test]
fn pairing_validity() {
    check("pairing validity");
}

#[test]
fn survival_never_increases() {
    check("non-increasing survival");
}

#[test]
fn vpi_is_non_negative() {
    check("VPI non-negativity");
}
