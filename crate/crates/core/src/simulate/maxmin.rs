use std::fmt::Write as _;

use super::{FlowRoute, LinkMap};
use crate::error::{Error, Result};
use crate::topology::Topology;
use crate::Scalar;

/// Slack allowed on link capacities when checking an allocation.
pub const SATURATION_EPS: f64 = 1e-9;

/// Per-flow rates as fractions of the unit link rate, indexed by flow id.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    pub rates: Vec<T>,
}

impl<T: Scalar> Allocation<T> {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn mean(&self) -> T {
        if self.rates.is_empty() {
            return T::zero();
        }
        self.rates.iter().copied().sum::<T>() / T::count(self.rates.len())
    }

    /// Median rate; the lower middle element for even counts.
    pub fn median(&self) -> T {
        if self.rates.is_empty() {
            return T::zero();
        }
        let mut v = self.rates.clone();
        v.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
        v[(v.len() - 1) / 2]
    }

    pub fn jain_index(&self) -> Result<T> {
        jain_index(&self.rates)
    }
}

/// Jain's fairness index `(sum x)^2 / (n sum x^2)`.
pub fn jain_index<T: Scalar>(rates: &[T]) -> Result<T> {
    if rates.is_empty() {
        return Err(Error::InvalidArgument("fairness index of no flows".into()));
    }
    let sum: T = rates.iter().copied().sum();
    let sq: T = rates.iter().map(|&x| x * x).sum();
    if sq <= T::zero() {
        return Err(Error::ZeroAllocation);
    }
    Ok(sum * sum / (T::count(rates.len()) * sq))
}

/// Progressive water-filling. `flow_links[f]` lists the links crossed by
/// flow `f`; the result is the max-min fair rate vector. Links whose fair
/// share ties with the current minimum (within the type's tolerance)
/// saturate in the same round. A flow that crosses no link gets an
/// infinite rate.
pub fn water_fill<T: Scalar>(capacities: &[T], flow_links: &[Vec<usize>]) -> Vec<T> {
    let nl = capacities.len();
    let mut on_link: Vec<Vec<usize>> = vec![Vec::new(); nl];
    for (f, links) in flow_links.iter().enumerate() {
        for &l in links {
            on_link[l].push(f);
        }
    }
    let mut remaining = capacities.to_vec();
    let mut unfrozen: Vec<usize> = on_link.iter().map(Vec::len).collect();
    let mut rate: Vec<Option<T>> = flow_links
        .iter()
        .map(|l| l.is_empty().then(T::infinity))
        .collect();
    let mut active: Vec<usize> = (0..nl).filter(|&l| unfrozen[l] > 0).collect();
    let tol = T::tie_tolerance();

    while !active.is_empty() {
        let share = |l: usize| (remaining[l] / T::count(unfrozen[l])).max(T::zero());
        let level = active.iter().map(|&l| share(l)).fold(T::infinity(), T::min);
        let cut = level + tol * level.max(T::one());
        let saturated: Vec<usize> = active.iter().copied().filter(|&l| share(l) <= cut).collect();
        for l in saturated {
            for &f in &on_link[l] {
                if rate[f].is_some() {
                    continue;
                }
                rate[f] = Some(level);
                for &m in &flow_links[f] {
                    remaining[m] = remaining[m] - level;
                    unfrozen[m] -= 1;
                }
            }
        }
        active.retain(|&l| unfrozen[l] > 0);
    }
    rate.into_iter().map(|r| r.expect("every flow is frozen")).collect()
}

/// Max-min fair rates for fixed single-path routes over unit-capacity
/// directed links, server access links included.
pub fn maxmin_allocate<T: Scalar>(t: &Topology, routes: &[FlowRoute]) -> Allocation<T> {
    let map = LinkMap::new(t);
    let links: Vec<Vec<usize>> = routes.iter().map(|r| map.route_links(r)).collect();
    Allocation {
        rates: water_fill(&map.capacities::<T>(), &links),
    }
}

/// One line per flow: `flow_id rate`.
pub fn write_allocation_dump<T: Scalar>(a: &Allocation<T>) -> String {
    let mut out = String::new();
    for (i, r) in a.rates.iter().enumerate() {
        let _ = writeln!(out, "{i} {r}");
    }
    out
}
