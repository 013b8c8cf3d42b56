#![no_main]

use libfuzzer_sys::fuzz_target;
use randchan_core::sim::SweepConfig;

fuzz_target!(|data: &[u8]| {
    let _ = SweepConfig::from_json(data);
});
