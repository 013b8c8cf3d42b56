#![no_main]

use libfuzzer_sys::fuzz_target;
use randchan_core::capacity::{solve_capacity, SolverOptions};
use randchan_core::io::parse_channel;

fuzz_target!(|data: &[u8]| {
    let Ok(w) = parse_channel(data) else { return };
    // keep the solver cheap; a parsed channel must never make it panic
    if w.rows() * w.cols() > 4096 {
        return;
    }
    let opts = SolverOptions { max_iter: 50, ..SolverOptions::default() };
    if let Ok(b) = solve_capacity(&w, opts) {
        assert!(b.lower <= b.upper + 1e-9);
    }
});
