#![no_main]

use libfuzzer_sys::fuzz_target;
use moapg_core::io::{parse_reference_csv, reference_to_csv};
use moapg_core::merit::{Provenance, ReferenceFront};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(points) = parse_reference_csv(text) else {
        return;
    };
    let Ok(front) = ReferenceFront::new(points, Provenance::default()) else {
        return;
    };
    let once = reference_to_csv(&front);
    let again = parse_reference_csv(&once).expect("canonical output parses");
    let front = ReferenceFront::new(again, Provenance::default()).expect("still nondominated");
    assert_eq!(reference_to_csv(&front), once);
});
