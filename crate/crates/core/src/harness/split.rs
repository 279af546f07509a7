use rand::seq::SliceRandom;

use crate::data::InteractionGraph;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: InteractionGraph,
    /// Held-out `(user, voting)` participations, sorted.
    pub test: Vec<(usize, usize)>,
    /// Users left without any training participation but with test pairs.
    pub cold_users: Vec<usize>,
}

/// Moves `round(fraction · #participations)` uniformly chosen participations
/// into the test set. Follow and group relations are untouched.
pub fn split(graph: &InteractionGraph, spec: &SplitSpec) -> Result<Split> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test fraction must lie strictly between 0 and 1, got {}",
            spec.test_fraction
        )));
    }
    let mut pairs: Vec<(usize, usize)> = graph.edges(crate::data::EdgeKind::UserVoting).collect();
    let n_test = (spec.test_fraction * pairs.len() as f64).round() as usize;
    pairs.shuffle(&mut rng::seeded(spec.seed));
    let mut test = pairs.split_off(pairs.len() - n_test);
    test.sort_unstable();
    let train = graph.with_participations(pairs);
    let mut cold_users: Vec<usize> = test
        .iter()
        .map(|&(u, _)| u)
        .filter(|&u| train.votings_of(u).is_empty())
        .collect();
    cold_users.dedup();
    Ok(Split {
        train,
        test,
        cold_users,
    })
}

/// `user<TAB>voting` lines.
pub fn pairs_to_tsv(pairs: &[(usize, usize)]) -> String {
    pairs.iter().map(|(u, v)| format!("{u}\t{v}\n")).collect()
}
