#![no_main]

use std::path::Path;

use firming::io::{read_traces, write_traces};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(traces) = read_traces(data, Path::new("fuzz.csv")) else { return };
    let traces: Vec<_> = traces.into_iter().collect();
    let mut first = Vec::new();
    write_traces(&mut first, &traces).unwrap();
    let back: Vec<_> = read_traces(first.as_slice(), Path::new("again.csv")).unwrap().into_iter().collect();
    let mut second = Vec::new();
    write_traces(&mut second, &back).unwrap();
    assert_eq!(first, second);
});
