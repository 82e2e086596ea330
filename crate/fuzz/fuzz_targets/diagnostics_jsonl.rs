#![no_main]

use libfuzzer_sys::fuzz_target;
use svv_core::diagnostics::DiagnosticsRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(record) = DiagnosticsRecord::read_jsonl(data) else { return };
    let mut out = Vec::new();
    record.write_jsonl(&mut out).unwrap();
    let again = DiagnosticsRecord::read_jsonl(out.as_slice()).expect("re-read of written rows");
    assert_eq!(record.rows, again.rows);
});
