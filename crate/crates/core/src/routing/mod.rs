//! Switch-level routing: ECMP next-hop tables, shortest / k-shortest /
//! k edge-disjoint path sets, and the two-shortest-segment expressibility
//! check used to encode a path with a single waypoint label.
//!
//! Path length always counts switch-to-switch hops; server access links are
//! not part of a [`Path`].

mod book;
mod disjoint;
mod express;
mod nexthop;
mod yen;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::Error;
use crate::topology::Topology;

pub use book::PathBook;
pub use disjoint::k_disjoint_paths;
pub use express::{expressibility_report, ExpressibilityReport};
pub use nexthop::{bfs_distances, compute_next_hops, shortest_paths, NextHopTable, DEFAULT_PATH_CAP};
pub use yen::k_shortest_paths;

/// Simple switch path, source first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    hops: Vec<usize>,
}

impl Path {
    pub fn new(hops: Vec<usize>) -> Self {
        debug_assert!(!hops.is_empty());
        Path { hops }
    }

    pub fn hops(&self) -> &[usize] {
        &self.hops
    }

    /// Number of switch-to-switch links.
    pub fn len(&self) -> usize {
        self.hops.len() - 1
    }

    /// A single-switch path has no links.
    pub fn is_empty(&self) -> bool {
        self.hops.len() == 1
    }

    pub fn source(&self) -> usize {
        self.hops[0]
    }

    pub fn destination(&self) -> usize {
        *self.hops.last().unwrap()
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.hops.windows(2).map(|w| (w[0], w[1]))
    }

    /// Consecutive hops are linked and no switch repeats.
    pub fn is_valid_in(&self, t: &Topology) -> bool {
        if self.hops.iter().any(|&u| u >= t.switch_count()) {
            return false;
        }
        let mut seen = self.hops.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == self.hops.len() && self.links().all(|(a, b)| t.has_link(a, b))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.hops.iter().enumerate() {
            if i > 0 {
                f.write_char('>')?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

/// Routing scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Per-switch hashing over shortest-path next hops.
    Ecmp,
    /// Source routing over the first `K` loop-free paths.
    KShortest(usize),
    /// Source routing over `K` edge-disjoint paths of least total length.
    KDisjoint(usize),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Ecmp => f.write_str("ecmp"),
            Scheme::KShortest(k) => write!(f, "kshortest:{k}"),
            Scheme::KDisjoint(k) => write!(f, "kdisjoint:{k}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "ecmp" {
            return Ok(Scheme::Ecmp);
        }
        let bad = || Error::InvalidArgument(format!("unknown routing scheme `{s}`"));
        let (name, k) = s.split_once(':').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(Error::InvalidArgument("path count K must be >= 1".into()));
        }
        match name {
            "kshortest" => Ok(Scheme::KShortest(k)),
            "kdisjoint" => Ok(Scheme::KDisjoint(k)),
            _ => Err(bad()),
        }
    }
}

/// Paths between one switch pair under one scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    pub src: usize,
    pub dst: usize,
    pub scheme: Scheme,
    pub paths: Vec<Path>,
    /// Number of paths that exist under the scheme; for ECMP this is the
    /// exact shortest-path count even when `paths` was truncated.
    pub total: u128,
}

impl PathSet {
    pub fn is_truncated(&self) -> bool {
        self.total > self.paths.len() as u128
    }
}

/// One line per path: `src dst scheme len hop0>hop1>...>hopN`.
pub fn write_path_dump<'a>(sets: impl IntoIterator<Item = &'a PathSet>) -> String {
    let mut out = String::new();
    for set in sets {
        for p in &set.paths {
            let _ = writeln!(out, "{} {} {} {} {}", set.src, set.dst, set.scheme, p.len(), p);
        }
    }
    out
}
