#![no_main]

use std::path::Path;

use firming::io::{read_engagements, write_engagements};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(plans) = read_engagements(data, Path::new("fuzz.csv")) else { return };
    let plans: Vec<_> = plans.into_iter().collect();
    let mut first = Vec::new();
    write_engagements(&mut first, &plans).unwrap();
    let back: Vec<_> = read_engagements(first.as_slice(), Path::new("again.csv")).unwrap().into_iter().collect();
    let mut second = Vec::new();
    write_engagements(&mut second, &back).unwrap();
    assert_eq!(first, second);
});
