#![no_main]

use std::path::Path;

use firming::io::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::parse(text, Path::new("fuzz.cfg")) {
        let again = Config::parse(&cfg.dump(), Path::new("dump.cfg")).expect("dump must parse");
        assert_eq!(again.dump(), cfg.dump());
    }
});
