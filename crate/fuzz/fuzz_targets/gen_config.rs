#![no_main]

use abaclab::datasets::Generator;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for g in Generator::ALL {
        let mut cfg = g.default_config();
        if cfg.apply_str(text).is_ok() {
            let mut round = g.default_config();
            round.apply_str(&cfg.to_config_string()).expect("printed config reapplies");
            assert_eq!(round, cfg);
        }
    }
});
