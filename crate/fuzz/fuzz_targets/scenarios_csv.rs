#![no_main]

use std::path::Path;

use firming::io::{read_scenarios, write_scenarios};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(sets) = read_scenarios(data, Path::new("fuzz.csv")) else { return };
    let sets: Vec<_> = sets.into_iter().collect();
    let mut first = Vec::new();
    write_scenarios(&mut first, &sets).unwrap();
    let back: Vec<_> = read_scenarios(first.as_slice(), Path::new("again.csv")).unwrap().into_iter().collect();
    let mut second = Vec::new();
    write_scenarios(&mut second, &back).unwrap();
    assert_eq!(first, second);
});
