#![no_main]

use libfuzzer_sys::fuzz_target;

// Parameter files are the first thing the CLI parses; must never panic.
fuzz_target!(|data: &[u8]| {
    let _ = otfs_radar::config::parse_params_json(data);
});
