#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(w) = symmint::parse::parse_weight(text) {
        for x in [0.25, 1.0, 3.0] {
            assert!(!w.log_value(x).is_nan(), "{text:?} at {x}");
        }
    }
});
