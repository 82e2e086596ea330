#![no_main]

use libfuzzer_sys::fuzz_target;
use svv_core::config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = config::parse_config(text) {
        // anything accepted must already satisfy the invariants
        cfg.validate().expect("parsed config fails validation");
        assert!(cfg.snapshots.iter().all(|t| t.is_finite()));
    }
});
