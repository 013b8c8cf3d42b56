#![no_main]

use libfuzzer_sys::fuzz_target;
use randchan_core::io::parse_matrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = parse_matrix(data) {
        assert_eq!(m.data.len(), m.rows * m.cols);
    }
});
