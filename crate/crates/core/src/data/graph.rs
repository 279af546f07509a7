//! The three relationship sets between users, votings and groups.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{io_err, Error, Result};

/// Which relationship an edge file encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// `user voting`: the user participated in the voting.
    UserVoting,
    /// `follower followee`: directed follow edge.
    UserUser,
    /// `user group`: group membership.
    UserGroup,
}

impl EdgeKind {
    fn column_names(self) -> (&'static str, &'static str) {
        match self {
            EdgeKind::UserVoting => ("user", "voting"),
            EdgeKind::UserUser => ("user", "user"),
            EdgeKind::UserGroup => ("user", "group"),
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::UserVoting => "user-voting",
            EdgeKind::UserUser => "user-user",
            EdgeKind::UserGroup => "user-group",
        })
    }
}

impl FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user-voting" => Ok(EdgeKind::UserVoting),
            "user-user" => Ok(EdgeKind::UserUser),
            "user-group" => Ok(EdgeKind::UserGroup),
            other => Err(Error::config(format!("unknown edge kind `{other}`"))),
        }
    }
}

/// Declared entity counts. All ids are dense in `[0, count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimensions {
    pub n_users: usize,
    pub n_votings: usize,
    pub n_groups: usize,
}

impl Dimensions {
    fn limits(&self, kind: EdgeKind) -> (usize, usize) {
        match kind {
            EdgeKind::UserVoting => (self.n_users, self.n_votings),
            EdgeKind::UserUser => (self.n_users, self.n_users),
            EdgeKind::UserGroup => (self.n_users, self.n_groups),
        }
    }
}

/// Parses an edge list: one whitespace-separated id pair per line. Blank lines
/// and lines starting with `#` are ignored. Returned pairs are in file order and
/// may contain duplicates.
pub fn parse_edges(text: &str, kind: EdgeKind, dims: &Dimensions, source_name: &str) -> Result<Vec<(usize, usize)>> {
    let (left_limit, right_limit) = dims.limits(kind);
    let (left_name, right_name) = kind.column_names();
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected two ids, found `{line}`"),
            ));
        };
        let a = parse_id(a, source_name, line_no)?;
        let b = parse_id(b, source_name, line_no)?;
        let a = check_range(a, left_limit, left_name, source_name, line_no)?;
        let b = check_range(b, right_limit, right_name, source_name, line_no)?;
        if kind == EdgeKind::UserUser && a == b {
            return Err(Error::SelfLoop {
                source_name: source_name.to_string(),
                line: line_no,
                id: a,
            });
        }
        pairs.push((a, b));
    }
    Ok(pairs)
}

fn parse_id(field: &str, source_name: &str, line: usize) -> Result<u64> {
    field
        .parse::<u64>()
        .map_err(|_| Error::parse(source_name, line, format!("`{field}` is not a non-negative integer id")))
}

fn check_range(id: u64, limit: usize, what: &'static str, source_name: &str, line: usize) -> Result<usize> {
    if id >= limit as u64 {
        return Err(Error::Range {
            source_name: source_name.to_string(),
            line,
            what,
            id,
            limit,
        });
    }
    Ok(id as usize)
}

/// Accumulates edges with set semantics, then freezes into an [`InteractionGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    dims: Dimensions,
    user_voting: BTreeSet<(usize, usize)>,
    user_user: BTreeSet<(usize, usize)>,
    user_group: BTreeSet<(usize, usize)>,
}

impl GraphBuilder {
    pub fn new(dims: Dimensions) -> Self {
        Self {
            dims,
            user_voting: BTreeSet::new(),
            user_user: BTreeSet::new(),
            user_group: BTreeSet::new(),
        }
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    /// Adds one edge, validating ranges and the no-self-loop rule.
    pub fn add(&mut self, kind: EdgeKind, a: usize, b: usize) -> Result<()> {
        let (la, lb) = self.dims.limits(kind);
        let (na, nb) = kind.column_names();
        check_range(a as u64, la, na, "<edge>", 0)?;
        check_range(b as u64, lb, nb, "<edge>", 0)?;
        if kind == EdgeKind::UserUser && a == b {
            return Err(Error::SelfLoop {
                source_name: "<edge>".into(),
                line: 0,
                id: a,
            });
        }
        self.set_mut(kind).insert((a, b));
        Ok(())
    }

    fn set_mut(&mut self, kind: EdgeKind) -> &mut BTreeSet<(usize, usize)> {
        match kind {
            EdgeKind::UserVoting => &mut self.user_voting,
            EdgeKind::UserUser => &mut self.user_user,
            EdgeKind::UserGroup => &mut self.user_group,
        }
    }

    /// Parses edge text and merges it; duplicates collapse.
    pub fn merge_text(&mut self, text: &str, kind: EdgeKind, source_name: &str) -> Result<()> {
        let pairs = parse_edges(text, kind, &self.dims, source_name)?;
        self.set_mut(kind).extend(pairs);
        Ok(())
    }

    pub fn build(self) -> InteractionGraph {
        let Dimensions {
            n_users,
            n_votings,
            n_groups,
        } = self.dims;
        let (user_votings, voting_users) = adjacency(&self.user_voting, n_users, n_votings);
        let (followees, followers) = adjacency(&self.user_user, n_users, n_users);
        let (user_groups, group_users) = adjacency(&self.user_group, n_users, n_groups);
        InteractionGraph {
            dims: self.dims,
            user_votings,
            voting_users,
            followees,
            followers,
            user_groups,
            group_users,
        }
    }
}

fn adjacency(pairs: &BTreeSet<(usize, usize)>, n_left: usize, n_right: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut fwd = vec![Vec::new(); n_left];
    let mut rev = vec![Vec::new(); n_right];
    // BTreeSet iteration is sorted by (a, b), so every list comes out sorted.
    for &(a, b) in pairs {
        fwd[a].push(b);
        rev[b].push(a);
    }
    (fwd, rev)
}

/// Reads an edge file from disk and merges it into `builder`.
pub fn load_interactions(builder: &mut GraphBuilder, path: &Path, kind: EdgeKind) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    builder.merge_text(&text, kind, &path.display().to_string())
}

/// Immutable user-voting, user-user and user-group relationships. All adjacency
/// lists are sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    dims: Dimensions,
    user_votings: Vec<Vec<usize>>,
    voting_users: Vec<Vec<usize>>,
    followees: Vec<Vec<usize>>,
    followers: Vec<Vec<usize>>,
    user_groups: Vec<Vec<usize>>,
    group_users: Vec<Vec<usize>>,
}

impl InteractionGraph {
    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn n_users(&self) -> usize {
        self.dims.n_users
    }

    pub fn n_votings(&self) -> usize {
        self.dims.n_votings
    }

    pub fn n_groups(&self) -> usize {
        self.dims.n_groups
    }

    /// `I_{u,v}`.
    pub fn participates(&self, user: usize, voting: usize) -> bool {
        self.user_votings[user].binary_search(&voting).is_ok()
    }

    /// `I_{i,k}`: whether `follower` follows `followee`.
    pub fn follows(&self, follower: usize, followee: usize) -> bool {
        self.followees[follower].binary_search(&followee).is_ok()
    }

    /// `I_{u,G}`.
    pub fn in_group(&self, user: usize, group: usize) -> bool {
        self.user_groups[user].binary_search(&group).is_ok()
    }

    pub fn votings_of(&self, user: usize) -> &[usize] {
        &self.user_votings[user]
    }

    pub fn participants(&self, voting: usize) -> &[usize] {
        &self.voting_users[voting]
    }

    /// `F_i^+`.
    pub fn followees(&self, user: usize) -> &[usize] {
        &self.followees[user]
    }

    /// `F_i^-`.
    pub fn followers(&self, user: usize) -> &[usize] {
        &self.followers[user]
    }

    pub fn groups_of(&self, user: usize) -> &[usize] {
        &self.user_groups[user]
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.group_users[group]
    }

    /// `d_i^+`.
    pub fn out_degree(&self, user: usize) -> usize {
        self.followees[user].len()
    }

    /// `d_k^-`.
    pub fn in_degree(&self, user: usize) -> usize {
        self.followers[user].len()
    }

    /// `G_i`: every user sharing at least one group with `user`, excluding itself.
    pub fn group_friends(&self, user: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.user_groups[user]
            .iter()
            .flat_map(|&g| self.group_users[g].iter().copied())
            .filter(|&k| k != user)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn shares_group(&self, a: usize, b: usize) -> bool {
        sorted_intersects(&self.user_groups[a], &self.user_groups[b])
    }

    /// Social-level friends: either user follows the other.
    pub fn social_friends(&self, a: usize, b: usize) -> bool {
        self.follows(a, b) || self.follows(b, a)
    }

    pub fn common_votings(&self, a: usize, b: usize) -> usize {
        sorted_intersection_len(&self.user_votings[a], &self.user_votings[b])
    }

    pub fn n_participations(&self) -> usize {
        self.user_votings.iter().map(Vec::len).sum()
    }

    pub fn n_follows(&self) -> usize {
        self.followees.iter().map(Vec::len).sum()
    }

    pub fn n_memberships(&self) -> usize {
        self.user_groups.iter().map(Vec::len).sum()
    }

    pub fn edges(&self, kind: EdgeKind) -> impl Iterator<Item = (usize, usize)> + '_ {
        let lists = match kind {
            EdgeKind::UserVoting => &self.user_votings,
            EdgeKind::UserUser => &self.followees,
            EdgeKind::UserGroup => &self.user_groups,
        };
        lists
            .iter()
            .enumerate()
            .flat_map(|(a, bs)| bs.iter().map(move |&b| (a, b)))
    }

    /// Copy of this graph with the user-voting relation replaced.
    pub fn with_participations(&self, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let set: BTreeSet<(usize, usize)> = pairs.into_iter().collect();
        let (user_votings, voting_users) = adjacency(&set, self.dims.n_users, self.dims.n_votings);
        Self {
            user_votings,
            voting_users,
            ..self.clone()
        }
    }

    /// Serializes one relation as an edge file, sorted.
    pub fn edges_to_string(&self, kind: EdgeKind) -> String {
        let mut out = String::new();
        for (a, b) in self.edges(kind) {
            out.push_str(&format!("{a}\t{b}\n"));
        }
        out
    }
}

fn sorted_intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
