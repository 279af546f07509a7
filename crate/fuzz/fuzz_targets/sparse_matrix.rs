#![no_main]

use jtsmf::similarity::SparseMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = SparseMatrix::from_text(text);
    }
});
