//! Transient traffic loss after a single link or switch failure, before
//! routing reconverges. Switches bypass failed next hops locally when an
//! alternative exists; source-routed schemes avoid paths whose first link
//! is down.
//!
//! The pair universe is every ordered pair of distinct live servers,
//! same-rack pairs included (they never cross the network and are never
//! lost). Servers attached to a failed switch are excluded.

use std::fmt::{self, Write as _};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hash::hash_words;
use crate::routing::{compute_next_hops, NextHopTable, Path, PathBook, Scheme};
use crate::topology::Topology;

/// Below this many ordered rack pairs, `LossMode::Auto` is exact.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 10_000;
/// Samples drawn by `LossMode::Auto` above the limit.
pub const DEFAULT_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Failure {
    /// Both directions of the link between two switches.
    Link(usize, usize),
    Switch(usize),
}

impl Failure {
    pub fn kind(self) -> FailureKind {
        match self {
            Failure::Link(..) => FailureKind::Link,
            Failure::Switch(_) => FailureKind::Switch,
        }
    }

    fn validate(self, t: &Topology) -> Result<()> {
        match self {
            Failure::Link(a, b) if !t.has_link(a, b) => {
                Err(Error::InvalidArgument(format!("no link between switches {a} and {b}")))
            }
            Failure::Switch(u) if u >= t.switch_count() => {
                Err(Error::InvalidArgument(format!("no switch {u}")))
            }
            _ => Ok(()),
        }
    }

    fn is_switch_down(self, u: usize) -> bool {
        self == Failure::Switch(u)
    }

    /// Whether the directed hop `u -> v` is unusable.
    fn blocks(self, u: usize, v: usize) -> bool {
        match self {
            Failure::Link(a, b) => (u, v) == (a, b) || (u, v) == (b, a),
            Failure::Switch(w) => u == w || v == w,
        }
    }

    fn hits(self, p: &Path) -> bool {
        p.hops().iter().any(|&u| self.is_switch_down(u)) || p.links().any(|(u, v)| self.blocks(u, v))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Link(a, b) => write!(f, "{a}-{b}"),
            Failure::Switch(u) => write!(f, "{u}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureKind {
    Link,
    Switch,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::Link => "link",
            FailureKind::Switch => "switch",
        })
    }
}

impl std::str::FromStr for FailureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "link" => Ok(FailureKind::Link),
            "switch" => Ok(FailureKind::Switch),
            other => Err(Error::InvalidArgument(format!("unknown failure kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Exact: every rack pair, every hash or path outcome, weighted by
    /// server counts.
    Exhaustive,
    /// Monte Carlo over uniformly drawn server pairs and hash outcomes.
    Sampled { samples: usize, seed: u64 },
    /// Exhaustive below [`EXHAUSTIVE_PAIR_LIMIT`] rack pairs, otherwise
    /// [`DEFAULT_SAMPLES`] samples.
    Auto { seed: u64 },
}

/// Routing state shared by every failure evaluated on one topology.
#[derive(Debug, Clone)]
pub struct LossModel<'a> {
    t: &'a Topology,
    table: NextHopTable,
    scheme: Scheme,
    book: Option<PathBook>,
    /// Per destination, switches by increasing distance.
    order: Vec<Vec<usize>>,
    racks: Vec<usize>,
}

impl<'a> LossModel<'a> {
    pub fn new(t: &'a Topology, scheme: Scheme) -> Result<Self> {
        let table = compute_next_hops(t)?;
        let book = match scheme {
            Scheme::Ecmp => None,
            _ => Some(PathBook::for_racks(t, &table, scheme)?),
        };
        let racks: Vec<usize> = t.racks().collect();
        if racks.is_empty() {
            return Err(Error::NoServers);
        }
        let n = t.switch_count();
        let order = (0..n)
            .map(|d| {
                let mut o: Vec<usize> = (0..n).collect();
                o.sort_by_key(|&u| (table.distance(u, d), u));
                o
            })
            .collect();
        Ok(LossModel {
            t,
            table,
            scheme,
            book,
            order,
            racks,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn table(&self) -> &NextHopTable {
        &self.table
    }

    fn live_servers(&self, f: Failure) -> Vec<usize> {
        self.racks
            .iter()
            .map(|&u| if f.is_switch_down(u) { 0 } else { self.t.servers_at(u) })
            .collect()
    }

    /// P[loss | failure] over uniform ordered pairs of distinct live servers.
    pub fn loss_given_failure(&self, f: Failure, mode: LossMode) -> Result<f64> {
        f.validate(self.t)?;
        match mode {
            LossMode::Exhaustive => Ok(self.exhaustive(f)),
            LossMode::Sampled { samples, seed } => Ok(self.sampled(f, samples, seed)),
            LossMode::Auto { seed } => {
                if self.racks.len() * self.racks.len() < EXHAUSTIVE_PAIR_LIMIT {
                    Ok(self.exhaustive(f))
                } else {
                    Ok(self.sampled(f, DEFAULT_SAMPLES, seed))
                }
            }
        }
    }

    /// ECMP loss probability from every switch toward `d`: 1 at a switch
    /// with no surviving next hop, otherwise the mean over survivors.
    fn ecmp_loss_to(&self, f: Failure, d: usize) -> Vec<f64> {
        let mut loss = vec![0.0; self.t.switch_count()];
        for &u in &self.order[d] {
            if u == d {
                continue;
            }
            let alive: Vec<usize> = self
                .table
                .next_hops(u, d)
                .iter()
                .copied()
                .filter(|&v| !f.blocks(u, v))
                .collect();
            loss[u] = if alive.is_empty() {
                1.0
            } else {
                alive.iter().map(|&v| loss[v]).sum::<f64>() / alive.len() as f64
            };
        }
        loss
    }

    fn source_loss(&self, f: Failure, a: usize, b: usize) -> f64 {
        let paths = self.book.as_ref().and_then(|bk| bk.get(a, b)).unwrap_or(&[]);
        let usable: Vec<&Path> = paths
            .iter()
            .filter(|p| p.is_empty() || !f.blocks(p.hops()[0], p.hops()[1]))
            .collect();
        if usable.is_empty() {
            return 1.0;
        }
        usable.iter().filter(|p| f.hits(p)).count() as f64 / usable.len() as f64
    }

    fn exhaustive(&self, f: Failure) -> f64 {
        let live = self.live_servers(f);
        let m: usize = live.iter().sum();
        if m < 2 {
            return 0.0;
        }
        let lost: f64 = (0..self.racks.len())
            .into_par_iter()
            .filter(|&j| live[j] > 0)
            .map(|j| {
                let b = self.racks[j];
                let ecmp = matches!(self.scheme, Scheme::Ecmp).then(|| self.ecmp_loss_to(f, b));
                (0..self.racks.len())
                    .filter(|&i| i != j && live[i] > 0)
                    .map(|i| {
                        let a = self.racks[i];
                        let l = match &ecmp {
                            Some(loss) => loss[a],
                            None => self.source_loss(f, a, b),
                        };
                        l * (live[i] * live[j]) as f64
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        lost / (m * (m - 1)) as f64
    }

    fn sampled(&self, f: Failure, samples: usize, seed: u64) -> f64 {
        let live = self.live_servers(f);
        // rack of every live server
        let servers: Vec<usize> = self
            .racks
            .iter()
            .zip(&live)
            .flat_map(|(&u, &s)| std::iter::repeat_n(u, s))
            .collect();
        let m = servers.len();
        if m < 2 || samples == 0 {
            return 0.0;
        }
        let chunk = 1 << 14;
        let chunks = samples.div_ceil(chunk);
        let lost: usize = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(hash_words(&[seed, c as u64]));
                let n = chunk.min(samples - c * chunk);
                (0..n)
                    .filter(|_| {
                        let x = rng.random_range(0..m);
                        let mut y = rng.random_range(0..m - 1);
                        if y >= x {
                            y += 1;
                        }
                        let (a, b) = (servers[x], servers[y]);
                        a != b && self.sample_lost(f, a, b, &mut rng)
                    })
                    .count()
            })
            .sum();
        lost as f64 / samples as f64
    }

    fn sample_lost(&self, f: Failure, a: usize, b: usize, rng: &mut ChaCha8Rng) -> bool {
        match self.scheme {
            Scheme::Ecmp => {
                let mut u = a;
                while u != b {
                    let alive: Vec<usize> = self
                        .table
                        .next_hops(u, b)
                        .iter()
                        .copied()
                        .filter(|&v| !f.blocks(u, v))
                        .collect();
                    match alive.choose(rng) {
                        Some(&v) => u = v,
                        None => return true,
                    }
                }
                false
            }
            _ => {
                let paths = self.book.as_ref().and_then(|bk| bk.get(a, b)).unwrap_or(&[]);
                let usable: Vec<&Path> = paths
                    .iter()
                    .filter(|p| p.is_empty() || !f.blocks(p.hops()[0], p.hops()[1]))
                    .collect();
                usable.choose(rng).is_none_or(|p| f.hits(p))
            }
        }
    }

    fn elements(&self, kind: FailureKind) -> Vec<Failure> {
        match kind {
            FailureKind::Link => self.t.links().iter().map(|&(a, b)| Failure::Link(a, b)).collect(),
            FailureKind::Switch => (0..self.t.switch_count()).map(Failure::Switch).collect(),
        }
    }

    /// Averages P[loss | failure] over every element of `kind` (or a seeded
    /// sample of `max_elements` of them) and scales by `lambda` times the
    /// element count.
    pub fn expected_transient_loss(
        &self,
        kind: FailureKind,
        lambda: f64,
        mode: LossMode,
        max_elements: Option<usize>,
        seed: u64,
    ) -> Result<LossReport> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("lambda must be in [0, 1], got {lambda}")));
        }
        let all = self.elements(kind);
        let element_count = all.len();
        let chosen: Vec<Failure> = match max_elements {
            Some(cap) if cap < all.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut pick: Vec<Failure> = all.choose_multiple(&mut rng, cap).copied().collect();
                pick.sort_unstable();
                pick
            }
            _ => all,
        };
        let per_element: Vec<(Failure, f64)> = chosen
            .iter()
            .map(|&f| Ok((f, self.loss_given_failure(f, mode)?)))
            .collect::<Result<_>>()?;
        let p = if per_element.is_empty() {
            0.0
        } else {
            per_element.iter().map(|e| e.1).sum::<f64>() / per_element.len() as f64
        };
        Ok(LossReport {
            kind,
            per_element,
            p_loss_given_failure: p,
            lambda,
            element_count,
            expected_loss: p * lambda * element_count as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub kind: FailureKind,
    pub per_element: Vec<(Failure, f64)>,
    /// Mean P[L|F] over the evaluated elements.
    pub p_loss_given_failure: f64,
    pub lambda: f64,
    pub element_count: usize,
    /// P[L|F] x lambda x element count.
    pub expected_loss: f64,
}

/// `kind element_id p_loss` per element, then `kind avg_p_loss expected_loss`.
pub fn write_loss_dump(r: &LossReport) -> String {
    let mut out = String::new();
    for (f, p) in &r.per_element {
        let _ = writeln!(out, "{} {} {}", r.kind, f, p);
    }
    let _ = writeln!(out, "{} {} {}", r.kind, r.p_loss_given_failure, r.expected_loss);
    out
}

pub fn loss_given_failure(t: &Topology, scheme: Scheme, f: Failure, mode: LossMode) -> Result<f64> {
    LossModel::new(t, scheme)?.loss_given_failure(f, mode)
}

pub fn expected_transient_loss(
    t: &Topology,
    scheme: Scheme,
    kind: FailureKind,
    lambda: f64,
    mode: LossMode,
) -> Result<LossReport> {
    LossModel::new(t, scheme)?.expected_transient_loss(kind, lambda, mode, None, 0)
}
