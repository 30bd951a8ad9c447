#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(space) = symmint::parse::parse_space(text) {
        let _ = space.point_count();
        let _ = space.root_multiplicities();
        let _ = symmint::spaces::reduced_measure(&space, &symmint::spaces::WeightSpec::one());
    }
});
