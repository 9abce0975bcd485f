#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(w) = getco::case_io::WeatherSeries::from_csv(data) {
        let _ = getco::case_io::WeatherSeries::from_csv(&w.to_csv()).expect("reparse");
    }
});
