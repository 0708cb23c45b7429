use super::{NextHopTable, Path};

/// Result of splitting each path at one waypoint into two shortest segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressibilityReport {
    /// Per path: the waypoint switch, or `None` when no split works.
    pub witnesses: Vec<Option<usize>>,
    pub non_expressible: usize,
    pub total: usize,
}

impl ExpressibilityReport {
    /// Fraction of paths that cannot be expressed.
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.non_expressible as f64 / self.total as f64
        }
    }

    /// Merges reports from disjoint path batches.
    pub fn merge(mut self, other: ExpressibilityReport) -> Self {
        self.witnesses.extend(other.witnesses);
        self.non_expressible += other.non_expressible;
        self.total += other.total;
        self
    }
}

/// Waypoint `u` on `path` such that both the prefix to `u` and the suffix
/// from `u` are shortest paths. Candidates are tried from the destination
/// backwards, so a shortest path is witnessed by its destination.
pub fn split_witness(table: &NextHopTable, path: &Path) -> Option<usize> {
    let hops = path.hops();
    let (s, t) = (path.source(), path.destination());
    let len = path.len() as u32;
    (0..hops.len()).rev().map(|i| (i as u32, hops[i])).find_map(|(i, u)| {
        (table.distance(s, u) == i && table.distance(u, t) == len - i).then_some(u)
    })
}

pub fn expressibility_report<'a>(table: &NextHopTable, paths: impl IntoIterator<Item = &'a Path>) -> ExpressibilityReport {
    let witnesses: Vec<Option<usize>> = paths.into_iter().map(|p| split_witness(table, p)).collect();
    ExpressibilityReport {
        non_expressible: witnesses.iter().filter(|w| w.is_none()).count(),
        total: witnesses.len(),
        witnesses,
    }
}
