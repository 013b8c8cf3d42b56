#![no_main]

use libfuzzer_sys::fuzz_target;
use randchan_core::distributions::{analytic_moments, DistributionSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<DistributionSpec>(data) else { return };
    let text = serde_json::to_string(&spec).unwrap();
    let again: DistributionSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(spec, again);
    let _ = analytic_moments(&spec);
});
