//! Correlation statistics between voting behavior and social structure.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng as _;

use crate::data::InteractionGraph;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanAccumulator {
    pub count: usize,
    pub sum: f64,
}

impl MeanAccumulator {
    fn add(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Mean number of common votings per sampled pair category. A pair that is both
/// a social-level and group-level friend pair counts in both categories.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairTypeStats {
    pub social: MeanAccumulator,
    pub group: MeanAccumulator,
    pub neither: MeanAccumulator,
    pub all: MeanAccumulator,
}

impl PairTypeStats {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("category\tpairs\tmean_common_votings\n");
        for (name, acc) in [
            ("social", &self.social),
            ("group", &self.group),
            ("neither", &self.neither),
            ("all", &self.all),
        ] {
            let _ = writeln!(out, "{name}\t{}\t{:.6e}", acc.count, acc.mean());
        }
        out
    }
}

fn random_pair(n: usize, rng: &mut rng::Rng) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// Samples `n_pairs` unordered distinct-user pairs uniformly (with replacement)
/// and averages their common-voting counts per category.
pub fn pair_type_stats(graph: &InteractionGraph, n_pairs: usize, seed: u64) -> Result<PairTypeStats> {
    if n_pairs == 0 {
        return Err(Error::config("need at least one pair"));
    }
    let n = graph.n_users();
    if n < 2 {
        return Err(Error::Stat("need at least two users".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut stats = PairTypeStats::default();
    for _ in 0..n_pairs {
        let (a, b) = random_pair(n, &mut rng);
        let common = graph.common_votings(a, b) as f64;
        let social = graph.social_friends(a, b);
        let group = graph.shares_group(a, b);
        if social {
            stats.social.add(common);
        }
        if group {
            stats.group.add(common);
        }
        if !social && !group {
            stats.neither.add(common);
        }
        stats.all.add(common);
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriendProbability {
    /// Mean over sampled votings of the friend fraction among participant pairs.
    pub p_participants: f64,
    /// Same statistic for equally sized random user sets.
    pub p_random: f64,
    pub votings_used: usize,
    /// Sampled votings with fewer than two participants.
    pub votings_skipped: usize,
}

impl FriendProbability {
    pub fn to_tsv(&self) -> String {
        format!(
            "set\tprobability\nparticipants\t{:.6e}\nrandom\t{:.6e}\n# votings_used={}\n# votings_skipped={}\n",
            self.p_participants, self.p_random, self.votings_used, self.votings_skipped
        )
    }
}

fn friend_fraction(graph: &InteractionGraph, users: &[usize]) -> f64 {
    let n = users.len();
    let mut friends = 0usize;
    for a in 0..n {
        for b in a + 1..n {
            let (x, y) = (users[a], users[b]);
            if graph.social_friends(x, y) || graph.shares_group(x, y) {
                friends += 1;
            }
        }
    }
    friends as f64 / (n * (n - 1) / 2) as f64
}

/// `p_j = #friend pairs among participants / (n_j (n_j − 1) / 2)`, averaged
/// over `n_votings` votings sampled without replacement. The baseline draws,
/// for each used voting, `n_j` distinct random users.
pub fn common_voting_friend_prob(graph: &InteractionGraph, n_votings: usize, seed: u64) -> Result<FriendProbability> {
    let m = graph.n_votings();
    let mut rng = rng::seeded(seed);
    let sampled = index::sample(&mut rng, m, n_votings.min(m)).into_vec();
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    for j in sampled {
        let participants = graph.participants(j);
        if participants.len() < 2 {
            skipped += 1;
            continue;
        }
        p_sum += friend_fraction(graph, participants);
        let random_users = index::sample(&mut rng, graph.n_users(), participants.len()).into_vec();
        r_sum += friend_fraction(graph, &random_users);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Stat("no sampled voting has two or more participants".into()));
    }
    Ok(FriendProbability {
        p_participants: p_sum / used as f64,
        p_random: r_sum / used as f64,
        votings_used: used,
        votings_skipped: skipped,
    })
}
