#![no_main]

use libfuzzer_sys::fuzz_target;
use moapg_core::io::FrontTable;

// Anything accepted re-serializes to a fixed point.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(table) = FrontTable::parse_csv(text) else {
        return;
    };
    let once = table.to_csv();
    let twice = FrontTable::parse_csv(&once)
        .expect("canonical output parses")
        .to_csv();
    assert_eq!(once, twice);
});
