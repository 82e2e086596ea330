#![no_main]

use libfuzzer_sys::fuzz_target;
use svv_core::config;
use svv_core::fourier;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(samples) = config::parse_samples(text) else { return };
    assert!(!samples.is_empty());
    assert!(samples.iter().all(|u| u.is_finite()));
    // ingest as initial data at the largest resolution the grid supports
    let n = (samples.len() - 1) / 2;
    if n > 0 {
        let _ = fourier::project_sampled(&samples, n).expect("projection of validated samples");
    }
});
