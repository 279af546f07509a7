#![no_main]

use jtsmf::data::parse_voting_texts;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_voting_texts(text, 8, "fuzz");
    }
});
