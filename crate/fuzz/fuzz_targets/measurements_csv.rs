#![no_main]

use std::path::Path;

use firming::io::read_measurements;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(report) = read_measurements(data, Path::new("fuzz.csv"), 15) {
        for day in &report.days {
            assert_eq!(day.power.len(), 96);
        }
    }
});
