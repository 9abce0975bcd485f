#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // a parsed case must also survive validation and a JSON roundtrip
    if let Ok(net) = getco::case_io::parse_case(data) {
        let _ = getco::case_io::validate_network(&net);
        let json = getco::case_io::to_json(&net);
        getco::case_io::from_json(&json).expect("roundtrip of a parsed case");
    }
});
