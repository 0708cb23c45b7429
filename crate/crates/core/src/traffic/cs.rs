use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Flow, FlowSize, TrafficPattern};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Size of every flow in the burst presets (100 KB).
pub const BURST_FLOW_BYTES: f64 = 100_000.0;

/// C-S model parameters: `c` clients packed into the fewest racks, `s`
/// servers packed into the fewest other racks, one flow per client-server
/// pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsSpec {
    pub c: usize,
    pub s: usize,
    pub seed: u64,
    pub flow_size: FlowSize,
    /// Flows start uniformly in `[0, start_window)`; 0 starts all at once.
    pub start_window: f64,
}

impl CsSpec {
    /// Long-running flows, all starting at time zero.
    pub fn unbounded(c: usize, s: usize, seed: u64) -> Self {
        CsSpec {
            c,
            s,
            seed,
            flow_size: FlowSize::Unbounded,
            start_window: 0.0,
        }
    }
}

/// Racks in a seeded random order, then stably by descending server count
/// so that filling in this order uses the fewest racks.
fn rack_order(t: &Topology, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut racks: Vec<usize> = t.racks().collect();
    racks.shuffle(rng);
    racks.sort_by_key(|&u| std::cmp::Reverse(t.servers_at(u)));
    racks
}

/// Takes servers rack by rack from `racks` until `want` are collected.
/// Returns the servers and the number of racks consumed.
fn pack(t: &Topology, racks: &[usize], want: usize) -> Option<(Vec<usize>, usize)> {
    let mut chosen = Vec::with_capacity(want);
    for (used, &u) in racks.iter().enumerate() {
        for server in t.server_range(u) {
            if chosen.len() == want {
                break;
            }
            chosen.push(server);
        }
        if chosen.len() == want {
            return Some((chosen, used + 1));
        }
    }
    None
}

/// Generates a C-S pattern: `c * s` flows from every client to every server.
pub fn cs_pattern(t: &Topology, spec: &CsSpec) -> Result<TrafficPattern> {
    if spec.c == 0 || spec.s == 0 {
        return Err(Error::Infeasible("C and S must be nonempty".into()));
    }
    if spec.c + spec.s > t.total_servers() {
        return Err(Error::Infeasible(format!(
            "C+S = {} exceeds {} servers",
            spec.c + spec.s,
            t.total_servers()
        )));
    }
    if let FlowSize::Bytes(b) = spec.flow_size {
        if !(b > 0.0) {
            return Err(Error::Infeasible(format!("flow size must be positive, got {b}")));
        }
    }
    if !(spec.start_window >= 0.0) {
        return Err(Error::Infeasible("start window must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let racks = rack_order(t, &mut rng);
    let (clients, used) = pack(t, &racks, spec.c)
        .ok_or_else(|| Error::Infeasible(format!("cannot place {} clients", spec.c)))?;
    let (servers, _) = pack(t, &racks[used..], spec.s).ok_or_else(|| {
        Error::Infeasible(format!(
            "not enough racks disjoint from the {used} client racks for {} servers",
            spec.s
        ))
    })?;

    let mut flows = Vec::with_capacity(clients.len() * servers.len());
    for &src in &clients {
        for &dst in &servers {
            let start = if spec.start_window > 0.0 {
                rng.random_range(0.0..spec.start_window)
            } else {
                0.0
            };
            flows.push(Flow {
                src,
                dst,
                size: spec.flow_size,
                start,
            });
        }
    }
    Ok(TrafficPattern::new(flows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurstPreset {
    /// 40 senders to 20 receivers.
    Incast40To20,
    /// 20 senders to 40 receivers.
    Outcast20To40,
}

impl BurstPreset {
    pub fn sizes(self) -> (usize, usize) {
        match self {
            BurstPreset::Incast40To20 => (40, 20),
            BurstPreset::Outcast20To40 => (20, 40),
        }
    }
}

impl fmt::Display for BurstPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BurstPreset::Incast40To20 => "incast_40_20",
            BurstPreset::Outcast20To40 => "outcast_20_40",
        })
    }
}

impl FromStr for BurstPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "incast_40_20" => Ok(BurstPreset::Incast40To20),
            "outcast_20_40" => Ok(BurstPreset::Outcast20To40),
            other => Err(Error::InvalidArgument(format!("unknown burst preset `{other}`"))),
        }
    }
}

/// 100 KB flows, all starting at time zero.
pub fn burst_preset(t: &Topology, preset: BurstPreset, seed: u64) -> Result<TrafficPattern> {
    let (c, s) = preset.sizes();
    cs_pattern(
        t,
        &CsSpec {
            c,
            s,
            seed,
            flow_size: FlowSize::Bytes(BURST_FLOW_BYTES),
            start_window: 0.0,
        },
    )
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::topology::{build_fat_tree, build_leaf_spine, rewire_to_rrg};

    fn racks_of(t: &Topology, servers: impl Iterator<Item = usize>) -> BTreeSet<usize> {
        servers.map(|s| t.rack_of_server(s)).collect()
    }

    #[test]
    fn incast_40_20_has_800_flows() {
        let t = build_fat_tree(10, 4).unwrap();
        let p = burst_preset(&t, BurstPreset::Incast40To20, 1).unwrap();
        assert_eq!(p.len(), 800);
        assert!(p.flows.iter().all(|f| f.size == FlowSize::Bytes(100_000.0) && f.start == 0.0));
        // 40 clients fill exactly 2 fat-tree racks of 20
        assert_eq!(racks_of(&t, p.flows.iter().map(|f| f.src)).len(), 2);
        assert_eq!(racks_of(&t, p.flows.iter().map(|f| f.dst)).len(), 1);
    }

    #[test]
    fn outcast_one_rack() {
        let t = build_fat_tree(10, 4).unwrap();
        let p = burst_preset(&t, BurstPreset::Outcast20To40, 1).unwrap();
        assert_eq!(p.len(), 800);
        assert_eq!(racks_of(&t, p.flows.iter().map(|f| f.src)).len(), 1);
    }

    #[test]
    fn packing_arithmetic() {
        let t = build_fat_tree(8, 4).unwrap();
        let p = cs_pattern(&t, &CsSpec::unbounded(40, 5, 3)).unwrap();
        let c_racks = racks_of(&t, p.flows.iter().map(|f| f.src));
        let s_racks = racks_of(&t, p.flows.iter().map(|f| f.dst));
        assert_eq!(c_racks.len(), 3);
        assert!(c_racks.is_disjoint(&s_racks));
        let mut per_rack: Vec<usize> = c_racks
            .iter()
            .map(|&r| {
                p.flows
                    .iter()
                    .filter(|f| t.rack_of_server(f.src) == r)
                    .map(|f| f.src)
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .collect();
        per_rack.sort_unstable();
        assert_eq!(per_rack, vec![8, 16, 16]);
    }

    #[test]
    fn incast_single_server() {
        let t = build_leaf_spine(6, 2).unwrap();
        let p = cs_pattern(&t, &CsSpec::unbounded(10, 1, 0)).unwrap();
        assert_eq!(p.len(), 10);
        assert_eq!(p.flows.iter().map(|f| f.dst).collect::<BTreeSet<_>>().len(), 1);
    }

    #[test]
    fn fewest_racks_on_uneven_rrg() {
        let rrg = rewire_to_rrg(&build_leaf_spine(24, 8).unwrap(), 2).unwrap();
        let p = cs_pattern(&rrg, &CsSpec::unbounded(40, 60, 9)).unwrap();
        assert_eq!(racks_of(&rrg, p.flows.iter().map(|f| f.src)).len(), 2);
        assert_eq!(racks_of(&rrg, p.flows.iter().map(|f| f.dst)).len(), 3);
    }

    #[test]
    fn infeasible() {
        let small = build_leaf_spine(2, 2).unwrap();
        assert!(burst_preset(&small, BurstPreset::Incast40To20, 0).is_err());
        assert!(cs_pattern(&small, &CsSpec::unbounded(0, 1, 0)).is_err());
        // 5 clients take 3 of the 4 racks, leaving one rack of 2 servers
        assert!(cs_pattern(&small, &CsSpec::unbounded(5, 2, 0)).is_ok());
        assert!(cs_pattern(&small, &CsSpec::unbounded(5, 3, 0))
            .unwrap_err()
            .to_string()
            .contains("disjoint"));
    }

    #[test]
    fn jittered_starts() {
        let t = build_leaf_spine(6, 2).unwrap();
        let spec = CsSpec {
            start_window: 0.01,
            flow_size: FlowSize::Bytes(10.0),
            ..CsSpec::unbounded(6, 6, 4)
        };
        let p = cs_pattern(&t, &spec).unwrap();
        assert!(p.flows.iter().all(|f| (0.0..0.01).contains(&f.start)));
        assert_eq!(p, cs_pattern(&t, &spec).unwrap());
    }
}
