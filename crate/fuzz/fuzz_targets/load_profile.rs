#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = getco::case_io::LoadProfile::from_csv(data) {
        let _ = getco::case_io::LoadProfile::from_csv(&p.to_csv()).expect("reparse");
    }
});
