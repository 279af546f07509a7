#![no_main]

use jtsmf::topic::doc_topics_from_text;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = doc_topics_from_text(text);
    }
});
