//! Balanced k-way partitions (how many links must run between clusters)
//! and edge expansion `h(G) = min ∂S / |S|` over sets with `|S| <= n/2`.
//!
//! Cut ratios are compared exactly as integer fractions and converted to
//! the scalar type only when reported.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hash::hash_words;
use crate::topology::Topology;
use crate::Scalar;

/// Largest switch count for which the exact subset search is used.
pub const EXACT_LIMIT: usize = 20;
/// Largest cluster count for which every cluster-merge cut is enumerated.
pub const MERGE_LIMIT: usize = 24;

/// Assignment of switches to `k` clusters whose sizes differ by at most 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    cluster_of: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(cluster_of: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || cluster_of.iter().any(|&c| c >= k) {
            return Err(Error::InvalidArgument(format!("cluster ids must lie in 0..{k}")));
        }
        let p = Partition { cluster_of, k };
        let sizes = p.sizes();
        if sizes.iter().max().unwrap() - sizes.iter().min().unwrap() > 1 {
            return Err(Error::InvalidArgument(format!("unbalanced cluster sizes {sizes:?}")));
        }
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cluster_of(&self, u: usize) -> usize {
        self.cluster_of[u]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.cluster_of {
            s[c] += 1;
        }
        s
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.cluster_of.len()).filter(|&u| self.cluster_of[u] == c).collect()
    }
}

fn check_k(t: &Topology, k: usize) -> Result<()> {
    if k == 0 || k > t.switch_count() {
        return Err(Error::InvalidArgument(format!(
            "cluster count must be in 1..={}, got {k}",
            t.switch_count()
        )));
    }
    Ok(())
}

/// Seeded uniformly random partition into `k` clusters of near-equal size.
pub fn random_balanced_partition(t: &Topology, k: usize, seed: u64) -> Result<Partition> {
    check_k(t, k)?;
    let mut order: Vec<usize> = (0..t.switch_count()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut cluster_of = vec![0; order.len()];
    for (i, &u) in order.iter().enumerate() {
        cluster_of[u] = i % k;
    }
    Partition::new(cluster_of, k)
}

pub fn cross_cluster_links(t: &Topology, p: &Partition) -> usize {
    t.links()
        .iter()
        .filter(|&&(a, b)| p.cluster_of[a] != p.cluster_of[b])
        .count()
}

/// Fraction of links whose endpoints lie in different clusters.
pub fn cross_cluster_fraction(t: &Topology, p: &Partition) -> f64 {
    if t.link_count() == 0 {
        return 0.0;
    }
    cross_cluster_links(t, p) as f64 / t.link_count() as f64
}

/// One Kernighan-Lin pass between clusters `ca` and `cb`: tentatively swap
/// the best unlocked pair until one side is exhausted, then keep the prefix
/// with the largest total gain if it is positive. Returns the gain kept.
fn kl_pass(t: &Topology, cluster_of: &mut [usize], ca: usize, cb: usize) -> usize {
    let a: Vec<usize> = (0..cluster_of.len()).filter(|&u| cluster_of[u] == ca).collect();
    let b: Vec<usize> = (0..cluster_of.len()).filter(|&u| cluster_of[u] == cb).collect();
    // gain[u]: cross-link reduction from moving u alone to the other side
    let mut gain = vec![0i64; cluster_of.len()];
    for &u in a.iter().chain(&b) {
        let (own, other) = if cluster_of[u] == ca { (ca, cb) } else { (cb, ca) };
        for &v in t.neighbors(u) {
            if cluster_of[v] == other {
                gain[u] += 1;
            } else if cluster_of[v] == own {
                gain[u] -= 1;
            }
        }
    }
    let mut side = cluster_of.to_vec();
    let mut locked = vec![false; cluster_of.len()];
    let mut swaps = Vec::new();
    let mut total = 0i64;
    let (mut best, mut best_len) = (0i64, 0usize);
    for _ in 0..a.len().min(b.len()) {
        let mut pick: Option<(i64, usize, usize)> = None;
        for &x in a.iter().filter(|&&x| !locked[x]) {
            for &y in b.iter().filter(|&&y| !locked[y]) {
                let g = gain[x] + gain[y] - if t.has_link(x, y) { 2 } else { 0 };
                if pick.is_none_or(|(bg, _, _)| g > bg) {
                    pick = Some((g, x, y));
                }
            }
        }
        let Some((g, x, y)) = pick else { break };
        locked[x] = true;
        locked[y] = true;
        side[x] = cb;
        side[y] = ca;
        // moved vertices change which neighbours count for or against
        for (moved, from, to) in [(x, ca, cb), (y, cb, ca)] {
            for &v in t.neighbors(moved) {
                if side[v] == from {
                    gain[v] += 2;
                } else if side[v] == to {
                    gain[v] -= 2;
                }
            }
        }
        total += g;
        swaps.push((x, y));
        if total > best {
            best = total;
            best_len = swaps.len();
        }
    }
    for &(x, y) in &swaps[..best_len] {
        cluster_of[x] = cb;
        cluster_of[y] = ca;
    }
    best as usize
}

/// KL refinement from a seeded random balanced start. Returns the partition
/// and the cross-link count after the start and after every improving
/// round; the sequence is strictly decreasing.
pub fn partition_graph_traced(t: &Topology, k: usize, seed: u64) -> Result<(Partition, Vec<usize>)> {
    let start = random_balanced_partition(t, k, seed)?;
    let mut cluster_of = start.cluster_of;
    let mut cross = cross_cluster_links(t, &Partition { cluster_of: cluster_of.clone(), k });
    let mut trace = vec![cross];
    loop {
        let mut improved = 0;
        for ca in 0..k {
            for cb in ca + 1..k {
                improved += kl_pass(t, &mut cluster_of, ca, cb);
            }
        }
        if improved == 0 {
            break;
        }
        cross -= improved;
        trace.push(cross);
    }
    Ok((Partition::new(cluster_of, k)?, trace))
}

/// Balanced partition into `k` clusters with few cross-cluster links.
pub fn partition_graph(t: &Topology, k: usize, seed: u64) -> Result<Partition> {
    partition_graph_traced(t, k, seed).map(|r| r.0)
}

/// Best of `restarts` independent KL runs (seeds derived from `seed`).
pub fn partition_graph_best(t: &Topology, k: usize, seed: u64, restarts: usize) -> Result<Partition> {
    let runs: Vec<Partition> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| partition_graph(t, k, hash_words(&[seed, r])))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .min_by_key(|p| cross_cluster_links(t, p))
        .expect("at least one run"))
}

/// Upper bound `d k f / (2 (k - 1))` on edge expansion for a d-regular
/// graph with a balanced k-way partition whose cross fraction is `f`.
pub fn theorem1_bound<T: Scalar>(d: usize, k: usize, f: T) -> Result<T> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree must be >= 1".into()));
    }
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("cluster count must be even and >= 2, got {k}")));
    }
    if !(f >= T::zero() && f <= T::one()) {
        return Err(Error::InvalidArgument(format!("fraction must be in [0, 1], got {f}")));
    }
    Ok(T::count(d) * T::count(k) * f / (T::lit(2.0) * T::count(k - 1)))
}

/// Candidate cut: `cut / size`, ordered exactly, ties by smaller set then
/// lexicographic members.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Cut {
    cut: usize,
    members: Vec<usize>,
}

impl Cut {
    fn new(t: &Topology, inside: &[bool]) -> Self {
        let members: Vec<usize> = (0..inside.len()).filter(|&u| inside[u]).collect();
        let cut = members
            .iter()
            .map(|&u| t.neighbors(u).iter().filter(|&&v| !inside[v]).count())
            .sum();
        Cut { cut, members }
    }

    fn better(&self, other: &Cut) -> Ordering {
        let lhs = self.cut as u128 * other.members.len() as u128;
        let rhs = other.cut as u128 * self.members.len() as u128;
        lhs.cmp(&rhs)
            .then(self.members.len().cmp(&other.members.len()))
            .then_with(|| self.members.cmp(&other.members))
    }

    fn min(self, other: Cut) -> Cut {
        if other.better(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

/// Minimum of `∂S/|S|` over every union of exactly `k/2` clusters.
/// Returns the ratio and the set.
pub fn min_cluster_merge_cut<T: Scalar>(t: &Topology, p: &Partition) -> Result<(T, Vec<usize>)> {
    let k = p.k;
    if k < 2 || !k.is_multiple_of(2) || k > MERGE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "cluster-merge cuts need an even k in 2..={MERGE_LIMIT}, got {k}"
        )));
    }
    let best = merge_cuts(t, p, |mask| mask.count_ones() as usize == k / 2)
        .ok_or_else(|| Error::InvalidArgument("empty partition".into()))?;
    Ok((ratio(&best), best.members))
}

fn merge_cuts(t: &Topology, p: &Partition, keep: impl Fn(u32) -> bool + Sync) -> Option<Cut> {
    let k = p.k;
    (1u32..(1 << k) - 1)
        .into_par_iter()
        .filter(|&m| keep(m))
        .map(|mask| {
            let inside: Vec<bool> = p.cluster_of.iter().map(|&c| mask >> c & 1 == 1).collect();
            Cut::new(t, &inside)
        })
        .filter(|c| !c.members.is_empty())
        .reduce_with(Cut::min)
}

fn ratio<T: Scalar>(c: &Cut) -> T {
    T::count(c.cut) / T::count(c.members.len())
}

/// Result of an edge-expansion computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport<T> {
    pub n: usize,
    /// Degree when the graph is regular, otherwise the largest degree.
    pub d: usize,
    pub regular: bool,
    /// Cluster count of the partition used for the bound.
    pub k: usize,
    /// Cross fraction of that partition.
    pub f: T,
    /// Smallest cut ratio found; exact when `exact` is set.
    pub h_upper: T,
    pub witness: Vec<usize>,
    /// Theorem bound for `(d, k, f)`; absent for non-regular graphs.
    pub theorem1_bound: Option<T>,
    pub exact: bool,
}

impl<T: Scalar> ExpansionReport<T> {
    /// `n d k f h_upper theorem1_bound witness_size`.
    pub fn dump_line(&self) -> String {
        let bound = self.theorem1_bound.map_or_else(|| "NA".to_string(), |b| b.to_string());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            self.n,
            self.d,
            self.k,
            self.f,
            self.h_upper,
            bound,
            self.witness.len()
        );
        out
    }
}

/// Cut ratio of an explicit set, for checking a witness.
pub fn cut_ratio<T: Scalar>(t: &Topology, set: &[usize]) -> T {
    let mut inside = vec![false; t.switch_count()];
    for &u in set {
        inside[u] = true;
    }
    ratio(&Cut::new(t, &inside))
}

fn exact_cut(t: &Topology) -> Cut {
    let n = t.switch_count();
    let adj: Vec<u32> = (0..n)
        .map(|u| t.neighbors(u).iter().fold(0u32, |m, &v| m | 1 << v))
        .collect();
    let (cut, mask) = (1u32..1 << n)
        .into_par_iter()
        .filter(|m| m.count_ones() as usize <= n / 2)
        .map(|m| {
            let mut cut = 0u32;
            let mut rest = m;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                cut += (adj[u] & !m).count_ones();
                rest &= rest - 1;
            }
            (cut as usize, m)
        })
        .reduce_with(|x, y| if mask_better(y, x) { y } else { x })
        .expect("n >= 2");
    Cut {
        cut,
        members: (0..n).filter(|&u| mask >> u & 1 == 1).collect(),
    }
}

/// Same order as [`Cut::better`] on `(cut, mask)` pairs.
fn mask_better((c1, m1): (usize, u32), (c2, m2): (usize, u32)) -> bool {
    let (s1, s2) = (m1.count_ones() as u64, m2.count_ones() as u64);
    match (c1 as u64 * s2).cmp(&(c2 as u64 * s1)).then(s1.cmp(&s2)) {
        Ordering::Equal => {
            // lexicographically smaller member list owns the lowest differing bit
            let low = (m1 ^ m2) & (m1 ^ m2).wrapping_neg();
            m1 & low != 0
        }
        o => o == Ordering::Less,
    }
}

fn degree_info(t: &Topology) -> (usize, bool) {
    let degs: Vec<usize> = (0..t.switch_count()).map(|u| t.degree(u)).collect();
    let max = degs.iter().copied().max().unwrap_or(0);
    (max, degs.iter().all(|&d| d == max))
}

fn check_graph(t: &Topology) -> Result<()> {
    if t.switch_count() < 2 {
        return Err(Error::InvalidArgument("edge expansion needs at least 2 switches".into()));
    }
    if !t.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

fn report<T: Scalar>(t: &Topology, best: Cut, p: &Partition, exact: bool) -> Result<ExpansionReport<T>> {
    let (d, regular) = degree_info(t);
    let f = T::lit(cross_cluster_fraction(t, p));
    Ok(ExpansionReport {
        n: t.switch_count(),
        d,
        regular,
        k: p.k,
        f,
        h_upper: ratio(&best),
        witness: best.members,
        theorem1_bound: if regular && d > 0 {
            Some(theorem1_bound(d, p.k, f)?)
        } else {
            None
        },
        exact,
    })
}

/// Exact edge expansion by enumerating every set of at most `n/2`
/// switches. Only for `n <=` [`EXACT_LIMIT`].
pub fn edge_expansion_exact<T: Scalar>(t: &Topology) -> Result<ExpansionReport<T>> {
    check_graph(t)?;
    if t.switch_count() > EXACT_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "exact edge expansion is limited to {EXACT_LIMIT} switches"
        )));
    }
    let p = partition_graph(t, 2, 0)?;
    report(t, exact_cut(t), &p, true)
}

/// Single-switch toggles that lower the cut ratio, best first, until none
/// helps.
fn local_search(t: &Topology, start: Cut) -> Cut {
    let n = t.switch_count();
    let mut inside = vec![false; n];
    for &u in &start.members {
        inside[u] = true;
    }
    let mut in_nbrs: Vec<usize> = (0..n)
        .map(|u| t.neighbors(u).iter().filter(|&&v| inside[v]).count())
        .collect();
    let (mut cut, mut size) = (start.cut as i64, start.members.len() as i64);
    for _ in 0..4 * n {
        let mut best: Option<(i64, i64, usize)> = None;
        for u in 0..n {
            let deg = t.degree(u) as i64;
            let inn = in_nbrs[u] as i64;
            let (c, s) = if inside[u] {
                (cut + 2 * inn - deg, size - 1)
            } else {
                (cut + deg - 2 * inn, size + 1)
            };
            if s < 1 || s as usize > n / 2 {
                continue;
            }
            // c/s < best ratio so far (or current)
            let (bc, bs) = best.map_or((cut, size), |(bc, bs, _)| (bc, bs));
            if (c as i128) * (bs as i128) < (bc as i128) * (s as i128) {
                best = Some((c, s, u));
            }
        }
        let Some((c, s, u)) = best else { break };
        inside[u] = !inside[u];
        let delta = if inside[u] { 1 } else { usize::MAX };
        for &v in t.neighbors(u) {
            in_nbrs[v] = in_nbrs[v].wrapping_add(delta);
        }
        cut = c;
        size = s;
    }
    Cut::new(t, &inside)
}

/// Edge expansion: exact for small graphs, otherwise the smallest cut
/// ratio among `budget` random sets, every cluster-merge cut of KL
/// partitions with 2 and `k` clusters, and a local search from the best of
/// those. Every reported value is witnessed by `witness`.
pub fn estimate_edge_expansion_with<T: Scalar>(
    t: &Topology,
    budget: usize,
    k: usize,
    seed: u64,
) -> Result<ExpansionReport<T>> {
    check_graph(t)?;
    let n = t.switch_count();
    if k < 2 || !k.is_multiple_of(2) || k > MERGE_LIMIT.min(n) {
        return Err(Error::InvalidArgument(format!("report cluster count must be even and <= {n}")));
    }
    let part = partition_graph(t, k, seed)?;
    if n <= EXACT_LIMIT {
        return report(t, exact_cut(t), &part, true);
    }
    let half = n / 2;
    let random = (0..budget as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(hash_words(&[seed, i]));
            let size = rng.random_range(1..=half);
            let all: Vec<usize> = (0..n).collect();
            let mut inside = vec![false; n];
            for &u in all.choose_multiple(&mut rng, size) {
                inside[u] = true;
            }
            Cut::new(t, &inside)
        })
        .reduce_with(Cut::min);
    let mut best = random;
    for p in [partition_graph(t, 2, seed ^ 1)?, part.clone()] {
        let sizes = p.sizes();
        let fits = |mask: u32| {
            (0..p.k).filter(|&c| mask >> c & 1 == 1).map(|c| sizes[c]).sum::<usize>() <= half
        };
        if let Some(c) = merge_cuts(t, &p, fits) {
            best = Some(best.map_or(c.clone(), |b| b.min(c)));
        }
    }
    let best = best.ok_or_else(|| Error::InvalidArgument("no candidate sets".into()))?;
    let refined = local_search(t, best.clone()).min(best);
    report(t, refined, &part, false)
}

/// [`estimate_edge_expansion_with`] reporting a 2-cluster partition.
pub fn estimate_edge_expansion<T: Scalar>(t: &Topology, budget: usize, seed: u64) -> Result<ExpansionReport<T>> {
    estimate_edge_expansion_with(t, budget, 2, seed)
}
