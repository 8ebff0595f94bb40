#![no_main]

use libfuzzer_sys::fuzz_target;
use moapg_core::io::parse_problem_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(problem) = parse_problem_json(text) {
        // a built problem evaluates at the origin without panicking
        let origin = vec![0.0; problem.dim()];
        let _ = problem.evaluate(&origin);
        let _ = problem.gradients(&origin);
    }
});
