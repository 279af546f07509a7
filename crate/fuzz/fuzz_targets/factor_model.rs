#![no_main]

use jtsmf::factor::FactorModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = FactorModel::from_text(text);
    }
});
