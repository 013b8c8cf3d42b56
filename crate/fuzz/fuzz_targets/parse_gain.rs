#![no_main]

use libfuzzer_sys::fuzz_target;
use randchan_core::channel::normalize_rows;
use randchan_core::io::parse_gain;

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = parse_gain(data) {
        let _ = normalize_rows(&v);
    }
});
