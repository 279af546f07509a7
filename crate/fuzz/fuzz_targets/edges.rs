#![no_main]

use jtsmf::data::{parse_edges, Dimensions, EdgeKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let dims = Dimensions {
            n_users: 16,
            n_votings: 16,
            n_groups: 4,
        };
        for kind in [EdgeKind::UserVoting, EdgeKind::UserUser, EdgeKind::UserGroup] {
            let _ = parse_edges(text, kind, &dims, "fuzz");
        }
    }
});
