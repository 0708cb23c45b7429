use std::fmt::Write as _;

use super::{water_fill, FlowRoute, LinkMap};
use crate::error::{Error, Result};
use crate::topology::Topology;
use crate::traffic::TrafficPattern;
use crate::Scalar;

/// Bytes per second carried at rate 1.0 (1 Gbps).
pub const BYTES_PER_SECOND: f64 = 1.25e8;

/// Outcome of a fluid run, indexed by flow id.
#[derive(Debug, Clone, PartialEq)]
pub struct FctResult<T> {
    /// Absolute finish time in seconds.
    pub finish: Vec<T>,
    /// Completion time (finish minus start) in seconds.
    pub fct: Vec<T>,
    /// Bytes integrated over the piecewise-constant rate schedule.
    pub delivered: Vec<T>,
    pub p50: T,
    pub p90: T,
    pub p99: T,
}

/// Nearest-rank percentile of `values`; `p` in (0, 100].
pub fn percentile<T: Scalar>(values: &[T], p: f64) -> T {
    if values.is_empty() {
        return T::nan();
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

/// Fluid simulation over explicit links. Rates are recomputed by
/// water-filling whenever a flow arrives or finishes and held constant in
/// between.
pub fn fct_simulate_links<T: Scalar>(
    capacities: &[T],
    flow_links: &[Vec<usize>],
    sizes: &[T],
    starts: &[T],
) -> FctResult<T> {
    let n = flow_links.len();
    assert!(sizes.len() == n && starts.len() == n, "one size and start per flow");
    let bps = T::lit(BYTES_PER_SECOND);
    let tol = T::tie_tolerance();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| starts[a].partial_cmp(&starts[b]).expect("finite start").then(a.cmp(&b)));
    let mut next = 0;
    let mut finish = vec![T::nan(); n];
    let mut delivered = vec![T::zero(); n];
    let mut active: Vec<usize> = Vec::new();
    let mut now = T::zero();

    loop {
        while next < n && starts[order[next]] <= now {
            let f = order[next];
            if sizes[f] <= T::zero() {
                finish[f] = starts[f];
            } else {
                active.push(f);
            }
            next += 1;
        }
        if active.is_empty() {
            if next == n {
                break;
            }
            now = starts[order[next]];
            continue;
        }

        let links: Vec<Vec<usize>> = active.iter().map(|&f| flow_links[f].clone()).collect();
        let rates = water_fill(capacities, &links);
        let mut dt = T::infinity();
        let mut first = 0;
        for (i, &f) in active.iter().enumerate() {
            let left = (sizes[f] - delivered[f]) / (rates[i] * bps);
            if left < dt {
                dt = left;
                first = i;
            }
        }
        let arrival = if next < n { starts[order[next]] - now } else { T::infinity() };
        let arrives_first = arrival < dt;
        if arrives_first {
            dt = arrival;
        }
        now = now + dt;
        let mut still = Vec::with_capacity(active.len());
        for (i, &f) in active.iter().enumerate() {
            delivered[f] = delivered[f] + rates[i] * bps * dt;
            let done = (!arrives_first && i == first) || sizes[f] - delivered[f] <= tol * sizes[f];
            if done {
                finish[f] = now;
            } else {
                still.push(f);
            }
        }
        active = still;
    }

    let fct: Vec<T> = (0..n).map(|f| finish[f] - starts[f]).collect();
    FctResult {
        p50: percentile(&fct, 50.0),
        p90: percentile(&fct, 90.0),
        p99: percentile(&fct, 99.0),
        finish,
        fct,
        delivered,
    }
}

/// Fluid flow-completion times for routed finite flows.
pub fn fct_simulate<T: Scalar>(t: &Topology, routes: &[FlowRoute], pattern: &TrafficPattern) -> Result<FctResult<T>> {
    if routes.len() != pattern.len() {
        return Err(Error::InvalidArgument(format!(
            "{} routes for {} flows",
            routes.len(),
            pattern.len()
        )));
    }
    let mut sizes = Vec::with_capacity(pattern.len());
    for (i, f) in pattern.flows.iter().enumerate() {
        sizes.push(T::lit(f.size.bytes().ok_or(Error::UnboundedFlow(i))?));
    }
    let starts: Vec<T> = pattern.flows.iter().map(|f| T::lit(f.start)).collect();
    let map = LinkMap::new(t);
    let links: Vec<Vec<usize>> = routes.iter().map(|r| map.route_links(r)).collect();
    Ok(fct_simulate_links(&map.capacities::<T>(), &links, &sizes, &starts))
}

/// One line per flow, `flow_id completion_seconds`, then a `p50,p90,p99`
/// footer.
pub fn write_fct_dump<T: Scalar>(r: &FctResult<T>) -> String {
    let mut out = String::new();
    for (i, x) in r.fct.iter().enumerate() {
        let _ = writeln!(out, "{i} {x}");
    }
    let _ = writeln!(out, "p50,p90,p99");
    let _ = writeln!(out, "{},{},{}", r.p50, r.p90, r.p99);
    out
}
