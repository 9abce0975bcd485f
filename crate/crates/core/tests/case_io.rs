mod support;

use getco::case_io::{from_json, parse_case, to_json, validate_network, LoadProfile, WeatherSeries};
use getco::scenario::{CASE118, CASE24, LOAD_PROFILE_RTS, WEATHER_HIGH_WIND, WEATHER_LOW_WIND};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bundled_cases_parse_clean() {
    for (text, subs, lines, gens) in [(CASE24, 24, 38, 33), (CASE118, 118, 186, 54)] {
        let net = parse_case(text).unwrap();
        assert_eq!((net.substations.len(), net.lines.len(), net.generators.len()), (subs, lines, gens));
        assert!(validate_network(&net).is_empty());
        assert_eq!(net.substations.iter().filter(|s| s.is_reference).count(), 1);
    }
}

#[test]
fn bundled_profiles_parse() {
    let p = LoadProfile::from_csv(LOAD_PROFILE_RTS).unwrap();
    assert!(p.multipliers().iter().all(|&m| m > 0.5 && m <= 1.0));
    for w in [WEATHER_HIGH_WIND, WEATHER_LOW_WIND] {
        assert_eq!(WeatherSeries::from_csv(w).unwrap().samples().len(), 24);
    }
}

proptest! {
    #[test]
    fn json_roundtrip_is_lossless(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = support::small::random_network(&mut rng);
        let back = from_json(&to_json(&net)).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(to_json(&back), to_json(&net));
    }

    #[test]
    fn matpower_parser_never_panics(text in "[ -~\n]{0,400}") {
        let _ = parse_case(&text);
    }
}
