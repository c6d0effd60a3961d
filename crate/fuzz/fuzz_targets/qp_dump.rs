#![no_main]

use firming::optim::{parse_dump, write_dump};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(problem) = parse_dump(text) {
        let written = write_dump(&problem);
        let again = parse_dump(&written).expect("written dump must parse");
        assert_eq!(write_dump(&again), written);
    }
});
