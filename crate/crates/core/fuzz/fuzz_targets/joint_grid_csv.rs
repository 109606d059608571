#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = odl::io::joint_from_csv(text) {
        let again = odl::io::joint_to_csv(&v).expect("re-serialize");
        assert_eq!(odl::io::joint_from_csv(&again).expect("re-parse"), v);
    }
});
