use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Topology, TopologyKind};
use crate::error::{Error, Result};

const MAX_ATTEMPTS: usize = 64;

/// Rewires `base` into an equipment-equivalent random graph.
///
/// Total servers and total switch ports are conserved. Servers are spread
/// over all switches with counts differing by at most one, and the pooled
/// network ports are spread the same way; the switches that received a
/// remainder server are the last to receive a remainder network port, so
/// when `base` has a uniform port count every switch keeps it exactly.
pub fn rewire_to_rrg(base: &Topology, seed: u64) -> Result<Topology> {
    if !matches!(
        base.kind(),
        TopologyKind::FatTree { .. } | TopologyKind::LeafSpine { .. }
    ) {
        return Err(Error::InvalidArgument(format!(
            "rewiring expects a fat tree or leaf-spine, got {}",
            base.kind()
        )));
    }
    let n = base.switch_count();
    let total_servers = base.total_servers();
    let total_ports = base.total_ports();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut servers = vec![total_servers / n; n];
    let extra = total_servers % n;
    for &u in &order[..extra] {
        servers[u] += 1;
    }

    // an odd port pool leaves one port dark
    let network = (total_ports - total_servers) & !1;
    let mut degrees = vec![network / n; n];
    let extra_deg = network % n;
    let preferred = order[extra..].iter().chain(&order[..extra]);
    for &u in preferred.take(extra_deg) {
        degrees[u] += 1;
    }

    let ports: Vec<usize> = (0..n).map(|u| servers[u] + degrees[u]).collect();
    let links = random_graph_with_degrees(&degrees, &mut rng)?;
    Topology::new(TopologyKind::Rrg, ports, servers, links)
}

/// Random connected `d`-regular graph on `n` switches without servers.
pub fn random_regular_graph(n: usize, d: usize, seed: u64) -> Result<Topology> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let links = random_graph_with_degrees(&vec![d; n], &mut rng)?;
    Topology::from_links(n, &links).map(|t| t.with_kind(TopologyKind::Rrg))
}

/// Uniformly paired stubs repaired into a simple connected graph by
/// degree-preserving edge swaps. Switches of degree zero are left isolated.
pub fn random_graph_with_degrees<R: Rng>(degrees: &[usize], rng: &mut R) -> Result<Vec<(usize, usize)>> {
    check_realizable(degrees)?;
    if degrees.iter().all(|&d| d == 0) {
        return Ok(Vec::new());
    }
    for _ in 0..MAX_ATTEMPTS {
        if let Some(mut edges) = attempt(degrees, rng) {
            for e in &mut edges {
                *e = (e.0.min(e.1), e.0.max(e.1));
            }
            edges.sort_unstable();
            return Ok(edges);
        }
    }
    Err(Error::Unrealizable(format!(
        "no simple connected graph found after {MAX_ATTEMPTS} attempts"
    )))
}

fn check_realizable(degrees: &[usize]) -> Result<()> {
    let sum: usize = degrees.iter().sum();
    if !sum.is_multiple_of(2) {
        return Err(Error::Unrealizable(format!("odd degree sum {sum}")));
    }
    let active = degrees.iter().filter(|&&d| d > 0).count();
    if active > 0 && sum / 2 < active - 1 {
        return Err(Error::Unrealizable(format!(
            "{} links cannot connect {active} switches",
            sum / 2
        )));
    }
    // Erdős–Gallai
    let mut d: Vec<usize> = degrees.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let n = d.len();
    let mut prefix = 0;
    for k in 1..=n {
        prefix += d[k - 1];
        let tail: usize = d[k..].iter().map(|&x| x.min(k)).sum();
        if prefix > k * (k - 1) + tail {
            return Err(Error::Unrealizable(format!("degree sequence fails Erdős–Gallai at k={k}")));
        }
    }
    Ok(())
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct Multigraph {
    edges: Vec<(usize, usize)>,
    count: HashMap<(usize, usize), usize>,
}

impl Multigraph {
    fn bad(&self, e: (usize, usize)) -> bool {
        e.0 == e.1 || self.count[&key(e.0, e.1)] > 1
    }

    fn replace(&mut self, i: usize, e: (usize, usize)) {
        let old = self.edges[i];
        let c = self.count.get_mut(&key(old.0, old.1)).unwrap();
        *c -= 1;
        if *c == 0 {
            self.count.remove(&key(old.0, old.1));
        }
        *self.count.entry(key(e.0, e.1)).or_insert(0) += 1;
        self.edges[i] = e;
    }

    fn present(&self, a: usize, b: usize) -> bool {
        self.count.contains_key(&key(a, b))
    }
}

fn attempt<R: Rng>(degrees: &[usize], rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(u, &d)| std::iter::repeat_n(u, d))
        .collect();
    stubs.shuffle(rng);
    let edges: Vec<(usize, usize)> = stubs.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let m = edges.len();
    let mut g = Multigraph {
        count: HashMap::with_capacity(m),
        edges,
    };
    for &(a, b) in &g.edges {
        *g.count.entry(key(a, b)).or_insert(0) += 1;
    }

    // remove self-loops and parallel links
    let budget = 200 * m + 1000;
    let mut spent = 0;
    while let Some(i) = (0..m).find(|&i| g.bad(g.edges[i])) {
        loop {
            spent += 1;
            if spent > budget {
                return None;
            }
            let j = rng.random_range(0..m);
            if j == i {
                continue;
            }
            let (a, b) = g.edges[i];
            let (c, d) = g.edges[j];
            let (x, y) = if rng.random_bool(0.5) { ((a, c), (b, d)) } else { ((a, d), (b, c)) };
            if x.0 == x.1 || y.0 == y.1 || key(x.0, x.1) == key(y.0, y.1) {
                continue;
            }
            if g.present(x.0, x.1) || g.present(y.0, y.1) {
                continue;
            }
            g.replace(i, x);
            g.replace(j, y);
            break;
        }
    }

    // merge components with swaps across them
    let n = degrees.len();
    let mut merges = 0;
    loop {
        let comp = components(n, &g.edges);
        let first = comp[g.edges[0].0];
        let Some(j) = (0..m).find(|&j| comp[g.edges[j].0] != first) else {
            break;
        };
        merges += 1;
        if merges > 10 * n + 100 {
            return None;
        }
        let in_first: Vec<usize> = (0..m).filter(|&i| comp[g.edges[i].0] == first).collect();
        let other = comp[g.edges[j].0];
        let in_other: Vec<usize> = (0..m).filter(|&i| comp[g.edges[i].0] == other).collect();
        let i = in_first[rng.random_range(0..in_first.len())];
        let j = in_other[rng.random_range(0..in_other.len())];
        let (a, b) = g.edges[i];
        let (c, d) = g.edges[j];
        g.replace(i, (a, c));
        g.replace(j, (b, d));
    }
    Some(g.edges)
}

fn components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_fat_tree, build_leaf_spine};

    fn spread(v: &[usize]) -> usize {
        v.iter().max().unwrap() - v.iter().min().unwrap()
    }

    #[test]
    fn leaf_spine_24_8() {
        let base = build_leaf_spine(24, 8).unwrap();
        let r = rewire_to_rrg(&base, 7).unwrap();
        assert_eq!(r.switch_count(), 40);
        assert_eq!(r.total_servers(), 768);
        let s19 = (0..40).filter(|&u| r.servers_at(u) == 19).count();
        let s20 = (0..40).filter(|&u| r.servers_at(u) == 20).count();
        assert_eq!((s19, s20), (32, 8));
        for u in 0..40 {
            assert_eq!(r.degree(u), 32 - r.servers_at(u));
            assert_eq!(r.ports(u), 32);
        }
        assert!(r.is_connected());
    }

    #[test]
    fn leaf_spine_2_2_is_a_cycle() {
        let base = build_leaf_spine(2, 2).unwrap();
        for seed in 0..20 {
            let r = rewire_to_rrg(&base, seed).unwrap();
            assert_eq!(r.switch_count(), 6);
            assert_eq!(r.total_servers(), 8);
            assert!(r.is_connected());
            assert_eq!(r.total_ports(), base.total_ports());
        }
    }

    #[test]
    fn fat_tree_16_4() {
        let base = build_fat_tree(16, 4).unwrap();
        let r = rewire_to_rrg(&base, 3).unwrap();
        assert_eq!(r.switch_count(), 320);
        assert_eq!(r.total_servers(), 4096);
        assert!((0..320).all(|u| matches!(r.servers_at(u), 12 | 13)));
        assert_eq!(r.total_ports(), base.total_ports());
        assert!(r.is_connected());
    }

    #[test]
    fn uniform_ports_kept_per_switch() {
        let base = build_fat_tree(8, 1).unwrap();
        let r = rewire_to_rrg(&base, 11).unwrap();
        assert!((0..r.switch_count()).all(|u| r.ports(u) == 8));
        assert!(spread(r.server_counts()) <= 1);
    }

    #[test]
    fn deterministic() {
        let base = build_leaf_spine(6, 2).unwrap();
        assert_eq!(rewire_to_rrg(&base, 5).unwrap(), rewire_to_rrg(&base, 5).unwrap());
        assert_ne!(rewire_to_rrg(&base, 5).unwrap().links(), rewire_to_rrg(&base, 6).unwrap().links());
    }

    #[test]
    fn rejects_non_base() {
        let r = rewire_to_rrg(&build_leaf_spine(2, 2).unwrap(), 1).unwrap();
        assert!(rewire_to_rrg(&r, 1).is_err());
    }

    #[test]
    fn unrealizable_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_graph_with_degrees(&[1, 1, 1], &mut rng).is_err());
        assert!(random_graph_with_degrees(&[3, 1, 1, 1, 0], &mut rng).is_ok());
        assert!(random_graph_with_degrees(&[3, 3, 0, 0], &mut rng).is_err());
        // two disjoint edges cannot be connected
        assert!(random_graph_with_degrees(&[1, 1, 1, 1], &mut rng).is_err());
    }

    #[test]
    fn regular_graphs() {
        for (n, d) in [(12, 3), (16, 5), (20, 8), (50, 4)] {
            let t = random_regular_graph(n, d, n as u64 * 31 + d as u64).unwrap();
            assert!((0..n).all(|u| t.degree(u) == d));
            assert!(t.is_connected());
        }
    }
}
