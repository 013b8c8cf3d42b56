#![no_main]

use libfuzzer_sys::fuzz_target;
use randchan_core::distributions::parse_param;

fuzz_target!(|data: &str| {
    if let Ok((key, _)) = parse_param(data) {
        assert!(!key.is_empty());
    }
});
