#![no_main]

use abaclab::exchange::{export_canonical, import_canonical};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = import_canonical(data) {
        let bytes = export_canonical(&p);
        assert_eq!(import_canonical(&bytes).expect("export reimports"), p);
    }
});
