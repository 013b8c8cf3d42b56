#![no_main]

use libfuzzer_sys::fuzz_target;
use randchan_core::sim::DesignStudyConfig;

fuzz_target!(|data: &[u8]| {
    let _ = DesignStudyConfig::from_json(data);
});
