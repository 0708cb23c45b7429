use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{k_disjoint_paths, k_shortest_paths, shortest_paths, NextHopTable, Path, Scheme, DEFAULT_PATH_CAP};
use crate::error::Result;
use crate::topology::Topology;

/// Path sets for a collection of switch pairs under one scheme.
#[derive(Debug, Clone)]
pub struct PathBook {
    scheme: Scheme,
    paths: BTreeMap<(usize, usize), Vec<Path>>,
}

impl PathBook {
    /// Computes path sets for `pairs` in parallel. ECMP pairs get the
    /// (capped) shortest-path enumeration.
    pub fn build(
        t: &Topology,
        table: &NextHopTable,
        scheme: Scheme,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        pairs.dedup();
        let sets: Vec<((usize, usize), Vec<Path>)> = pairs
            .par_iter()
            .map(|&(s, d)| {
                let set = match scheme {
                    Scheme::Ecmp => shortest_paths(table, s, d, DEFAULT_PATH_CAP)?,
                    Scheme::KShortest(k) => k_shortest_paths(t, s, d, k)?,
                    Scheme::KDisjoint(k) => k_disjoint_paths(t, s, d, k)?,
                };
                Ok(((s, d), set.paths))
            })
            .collect::<Result<_>>()?;
        Ok(PathBook {
            scheme,
            paths: sets.into_iter().collect(),
        })
    }

    /// Path sets for every ordered pair of server-hosting switches,
    /// including each rack with itself.
    pub fn for_racks(t: &Topology, table: &NextHopTable, scheme: Scheme) -> Result<Self> {
        let racks: Vec<usize> = t.racks().collect();
        let pairs = racks.iter().flat_map(|&a| racks.iter().map(move |&b| (a, b)));
        PathBook::build(t, table, scheme, pairs)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn get(&self, src: usize, dst: usize) -> Option<&[Path]> {
        self.paths.get(&(src, dst)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<Path>)> {
        self.paths.iter()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}
