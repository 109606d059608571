#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = odl::io::mixture_from_json(text) {
        let again = odl::io::mixture_to_json(&v).expect("re-serialize");
        assert_eq!(odl::io::mixture_from_json(&again).expect("re-parse"), v);
    }
});
