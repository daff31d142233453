#![no_main]

use std::sync::OnceLock;

use abaclab::datasets::bundled_source;
use abaclab::policy::parse_rules;
use abaclab::{parse_policy, Policy};
use libfuzzer_sys::fuzz_target;

fn base() -> &'static Policy {
    static BASE: OnceLock<Policy> = OnceLock::new();
    BASE.get_or_init(|| parse_policy(bundled_source("university").unwrap(), "university").unwrap())
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_rules(text, base().schema());
});
