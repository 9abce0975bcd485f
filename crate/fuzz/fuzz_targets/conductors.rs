#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = getco::dlr::ConductorSet::from_json(data);
});
