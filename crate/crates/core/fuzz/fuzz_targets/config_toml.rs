#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = odl::scenario::ScenarioConfig::from_toml_str(text) {
        let again = odl::scenario::ScenarioConfig::to_toml_string(&v).expect("re-serialize");
        assert_eq!(odl::scenario::ScenarioConfig::from_toml_str(&again).expect("re-parse"), v);
    }
});
