#![no_main]

use abaclab::{parse_policy, serialize_policy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_policy(text, "fuzz") {
        let again = parse_policy(&serialize_policy(&p), "fuzz").expect("serialized policy reparses");
        assert_eq!(again, p);
    }
});
