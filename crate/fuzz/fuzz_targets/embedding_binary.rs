#![no_main]

use jtsmf::embedding::EmbeddingStore;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = EmbeddingStore::from_bytes(data);
});
