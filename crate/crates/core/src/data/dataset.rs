//! On-disk dataset layout: a manifest plus three edge files and a voting-text file.
//!
//! ```text
//! # jtsmf dataset
//! n_users = 2000
//! n_votings = 1000
//! n_groups = 100
//! user_voting = user_voting.tsv
//! user_user = user_user.tsv
//! user_group = user_group.tsv
//! voting_text = voting_text.tsv
//! ```
//!
//! File entries are optional and default to the names above, resolved relative
//! to the manifest's directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::data::corpus::{parse_voting_texts, voting_texts_to_string};
use crate::data::graph::{Dimensions, EdgeKind, GraphBuilder, InteractionGraph};
use crate::error::{io_err, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub dims: Dimensions,
    pub user_voting: String,
    pub user_user: String,
    pub user_group: String,
    pub voting_text: String,
}

impl Manifest {
    pub fn with_default_files(dims: Dimensions) -> Self {
        Self {
            dims,
            user_voting: "user_voting.tsv".into(),
            user_user: "user_user.tsv".into(),
            user_group: "user_group.tsv".into(),
            voting_text: "voting_text.tsv".into(),
        }
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut values: HashMap<&str, (&str, usize)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(source_name, line_no, "expected `key = value`"));
            };
            let key = key.trim();
            if values.insert(key, (value.trim(), line_no)).is_some() {
                return Err(Error::parse(source_name, line_no, format!("duplicate key `{key}`")));
            }
        }
        let count = |key: &str| -> Result<usize> {
            let (value, line) = values
                .get(key)
                .ok_or_else(|| Error::parse(source_name, 0, format!("missing `{key}`")))?;
            value
                .parse()
                .map_err(|_| Error::parse(source_name, *line, format!("`{key}` must be a count")))
        };
        let file = |key: &str| -> String {
            values
                .get(key)
                .map(|(v, _)| v.to_string())
                .unwrap_or_else(|| format!("{key}.tsv"))
        };
        for key in values.keys() {
            if !matches!(
                *key,
                "n_users" | "n_votings" | "n_groups" | "user_voting" | "user_user" | "user_group" | "voting_text"
            ) {
                let line = values[key].1;
                return Err(Error::parse(source_name, line, format!("unknown key `{key}`")));
            }
        }
        Ok(Self {
            dims: Dimensions {
                n_users: count("n_users")?,
                n_votings: count("n_votings")?,
                n_groups: count("n_groups")?,
            },
            user_voting: file("user_voting"),
            user_user: file("user_user"),
            user_group: file("user_group"),
            voting_text: file("voting_text"),
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "# jtsmf dataset\nn_users = {}\nn_votings = {}\nn_groups = {}\nuser_voting = {}\nuser_user = {}\nuser_group = {}\nvoting_text = {}\n",
            self.dims.n_users,
            self.dims.n_votings,
            self.dims.n_groups,
            self.user_voting,
            self.user_user,
            self.user_group,
            self.voting_text
        )
    }
}

/// Graph plus per-voting token sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: InteractionGraph,
    pub voting_texts: Vec<Vec<String>>,
}

impl Dataset {
    /// Loads a dataset from a manifest path, or from a directory holding
    /// `manifest.txt`.
    pub fn load(path: &Path) -> Result<Self> {
        let manifest_path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest = Manifest::parse(&text, &manifest_path.display().to_string())?;
        let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |name: &str| -> PathBuf { base.join(name) };

        let mut builder = GraphBuilder::new(manifest.dims);
        for (kind, name) in [
            (EdgeKind::UserVoting, &manifest.user_voting),
            (EdgeKind::UserUser, &manifest.user_user),
            (EdgeKind::UserGroup, &manifest.user_group),
        ] {
            let p = resolve(name);
            // A missing relation file means the relation is empty.
            if p.exists() {
                crate::data::graph::load_interactions(&mut builder, &p, kind)?;
            }
        }
        let text_path = resolve(&manifest.voting_text);
        let voting_texts = if text_path.exists() {
            let t = std::fs::read_to_string(&text_path).map_err(io_err(&text_path))?;
            parse_voting_texts(&t, manifest.dims.n_votings, &text_path.display().to_string())?
        } else {
            vec![Vec::new(); manifest.dims.n_votings]
        };
        Ok(Self {
            graph: builder.build(),
            voting_texts,
        })
    }

    /// Writes the dataset with default file names into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest = Manifest::with_default_files(self.graph.dims());
        let write = |name: &str, body: String| -> Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(io_err(p))
        };
        write(MANIFEST_FILE, manifest.to_text())?;
        write(&manifest.user_voting, self.graph.edges_to_string(EdgeKind::UserVoting))?;
        write(&manifest.user_user, self.graph.edges_to_string(EdgeKind::UserUser))?;
        write(&manifest.user_group, self.graph.edges_to_string(EdgeKind::UserGroup))?;
        write(&manifest.voting_text, voting_texts_to_string(&self.voting_texts))?;
        Ok(())
    }
}

/// Maps sparse external ids onto dense `0..n` ids in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    forward: HashMap<String, usize>,
    external: Vec<String>,
}

impl IdMap {
    pub fn dense(&mut self, external: &str) -> usize {
        if let Some(&id) = self.forward.get(external) {
            return id;
        }
        let id = self.external.len();
        self.forward.insert(external.to_owned(), id);
        self.external.push(external.to_owned());
        id
    }

    pub fn get(&self, external: &str) -> Option<usize> {
        self.forward.get(external).copied()
    }

    pub fn external(&self, dense: usize) -> Option<&str> {
        self.external.get(dense).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    /// Two-column `dense<TAB>external` table.
    pub fn to_table(&self) -> String {
        self.external
            .iter()
            .enumerate()
            .map(|(i, e)| format!("{i}\t{e}\n"))
            .collect()
    }
}
