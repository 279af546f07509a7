mod common;

use common::criteria;

#[test]
fn gibbs_counters_planted_topics_and_exact_posterior() {
    let summary = criteria::lda().unwrap_or_else(|e| panic!("{e}"));
    println!("{summary}");
}
