//! Synthetic voting networks with planted interest communities.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Dimensions, EdgeKind, GraphBuilder};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_votings: usize,
    pub n_groups: usize,
    /// Planted communities, one topic vocabulary each.
    pub communities: usize,
    /// Total vocabulary, split evenly across communities.
    pub vocab_size: usize,
    pub words_per_voting: usize,
    /// Probability a voting token is drawn from the whole vocabulary instead of
    /// its community block.
    pub text_noise: f64,
    /// Probability that a participation, follow or membership targets the
    /// user's own community rather than a uniform choice.
    pub homophily: f64,
    pub participations_per_user: usize,
    pub follows_per_user: usize,
    pub groups_per_user: usize,
    /// Zipf exponent of voting popularity inside a community.
    pub popularity_skew: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 2000,
            n_votings: 1000,
            n_groups: 100,
            communities: 10,
            vocab_size: 1000,
            words_per_voting: 20,
            text_noise: 0.1,
            homophily: 0.8,
            participations_per_user: 12,
            follows_per_user: 8,
            groups_per_user: 2,
            popularity_skew: 0.8,
            seed: 1,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.communities == 0 {
            return Err(Error::config("at least one community is required"));
        }
        if self.n_users < self.communities || self.n_votings < self.communities {
            return Err(Error::config(format!(
                "{} communities need at least as many users and votings (got {} users, {} votings)",
                self.communities, self.n_users, self.n_votings
            )));
        }
        if self.vocab_size < self.communities {
            return Err(Error::config("vocabulary must have at least one word per community"));
        }
        if self.words_per_voting == 0 {
            return Err(Error::config("voting texts need at least one word"));
        }
        for (name, v) in [("homophily", self.homophily), ("text_noise", self.text_noise)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.popularity_skew.is_finite() && self.popularity_skew >= 0.0) {
            return Err(Error::config("popularity_skew must be finite and non-negative"));
        }
        if self.participations_per_user > self.n_votings {
            return Err(Error::config("more participations per user than votings"));
        }
        if self.groups_per_user > self.n_groups {
            return Err(Error::config("more groups per user than groups"));
        }
        if self.follows_per_user >= self.n_users {
            return Err(Error::config("more follows per user than other users"));
        }
        Ok(())
    }
}

/// Planted community labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub communities: usize,
    pub user_community: Vec<usize>,
    pub voting_community: Vec<usize>,
    pub group_community: Vec<usize>,
    /// Word `w` belongs to community `word_community[w]`'s block.
    pub word_community: Vec<usize>,
}

impl GroundTruth {
    /// `kind<TAB>id<TAB>community` lines; kind is `user`, `voting`, `group` or `word`.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# communities={}\n", self.communities);
        for (kind, labels) in [
            ("user", &self.user_community),
            ("voting", &self.voting_community),
            ("group", &self.group_community),
            ("word", &self.word_community),
        ] {
            for (i, c) in labels.iter().enumerate() {
                let _ = writeln!(out, "{kind}\t{i}\t{c}");
            }
        }
        out
    }
}

pub fn word_token(w: usize) -> String {
    format!("w{w}")
}

fn balanced_labels(n: usize, k: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

fn members_by_label(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        out[c].push(i);
    }
    out
}

/// Count drawn uniformly from `[mean/2, mean + mean/2]`, at least 1 when `mean > 0`.
fn jittered(mean: usize, rng: &mut rng::Rng) -> usize {
    if mean == 0 {
        return 0;
    }
    let lo = (mean / 2).max(1);
    rng.random_range(lo..=mean + mean / 2)
}

/// Picks `count` distinct items, each from `local` with probability `homophily`
/// and otherwise uniformly from `0..n`, never `exclude`.
#[allow(clippy::too_many_arguments)]
fn pick_targets(
    count: usize,
    n: usize,
    local: &[usize],
    local_weights: Option<&WeightedIndex<f64>>,
    global_weights: Option<&WeightedIndex<f64>>,
    homophily: f64,
    exclude: Option<usize>,
    rng: &mut rng::Rng,
) -> Vec<usize> {
    let available = n - usize::from(exclude.is_some());
    let count = count.min(available);
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    let mut attempts = 0;
    while chosen.len() < count && attempts < 50 * count + 100 {
        attempts += 1;
        let in_community = rng.random_bool(homophily) && local.iter().any(|&x| Some(x) != exclude);
        let item = if in_community {
            match local_weights {
                Some(w) => local[w.sample(rng)],
                None => local[rng.random_range(0..local.len())],
            }
        } else {
            match global_weights {
                Some(w) => w.sample(rng),
                None => rng.random_range(0..n),
            }
        };
        if Some(item) != exclude && !chosen.contains(&item) {
            chosen.push(item);
        }
    }
    chosen
}

/// Generates a dataset whose participations, follows and group memberships
/// are assortative by planted community.
pub fn synth_generate(config: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let k = config.communities;
    let mut rng = rng::seeded(config.seed);

    let user_community = balanced_labels(config.n_users, k, &mut rng);
    let voting_community = balanced_labels(config.n_votings, k, &mut rng);
    let group_community = balanced_labels(config.n_groups, k, &mut rng);
    let word_community: Vec<usize> = (0..config.vocab_size).map(|w| w * k / config.vocab_size).collect();

    let users_by = members_by_label(&user_community, k);
    let votings_by = members_by_label(&voting_community, k);
    let groups_by = members_by_label(&group_community, k);
    let words_by = members_by_label(&word_community, k);

    // popularity: Zipf weight over a random permutation of ranks
    let mut ranks: Vec<usize> = (0..config.n_votings).collect();
    ranks.shuffle(&mut rng);
    let popularity: Vec<f64> = ranks
        .iter()
        .map(|&r| 1.0 / ((r + 1) as f64).powf(config.popularity_skew))
        .collect();
    let weights = |idx: &[usize]| WeightedIndex::new(idx.iter().map(|&j| popularity[j])).ok();
    let voting_local: Vec<Option<WeightedIndex<f64>>> = votings_by.iter().map(|v| weights(v)).collect();
    let all_votings: Vec<usize> = (0..config.n_votings).collect();
    let voting_global = weights(&all_votings);

    let voting_texts: Vec<Vec<String>> = voting_community
        .iter()
        .map(|&c| {
            (0..config.words_per_voting)
                .map(|_| {
                    let w = if rng.random_bool(config.text_noise) {
                        rng.random_range(0..config.vocab_size)
                    } else {
                        words_by[c][rng.random_range(0..words_by[c].len())]
                    };
                    word_token(w)
                })
                .collect()
        })
        .collect();

    let mut builder = GraphBuilder::new(Dimensions {
        n_users: config.n_users,
        n_votings: config.n_votings,
        n_groups: config.n_groups,
    });
    for (u, &c) in user_community.iter().enumerate() {
        let n_part = jittered(config.participations_per_user, &mut rng);
        for j in pick_targets(
            n_part,
            config.n_votings,
            &votings_by[c],
            voting_local[c].as_ref(),
            voting_global.as_ref(),
            config.homophily,
            None,
            &mut rng,
        ) {
            builder.add(EdgeKind::UserVoting, u, j)?;
        }
        let n_follow = jittered(config.follows_per_user, &mut rng);
        for f in pick_targets(
            n_follow,
            config.n_users,
            &users_by[c],
            None,
            None,
            config.homophily,
            Some(u),
            &mut rng,
        ) {
            builder.add(EdgeKind::UserUser, u, f)?;
        }
        if config.n_groups > 0 {
            let n_groups = jittered(config.groups_per_user, &mut rng);
            for g in pick_targets(
                n_groups,
                config.n_groups,
                &groups_by[c],
                None,
                None,
                config.homophily,
                None,
                &mut rng,
            ) {
                builder.add(EdgeKind::UserGroup, u, g)?;
            }
        }
    }

    Ok((
        Dataset {
            graph: builder.build(),
            voting_texts,
        },
        GroundTruth {
            communities: k,
            user_community,
            voting_community,
            group_community,
            word_community,
        },
    ))
}
