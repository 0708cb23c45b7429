use std::cmp::Ordering;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Flow, FlowSize, TrafficPattern};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Start-time window for trace-derived flows (10 ms).
pub const TRACE_START_WINDOW: f64 = 0.010;

/// Rack-level traffic matrix restricted to the busiest racks.
#[derive(Debug, Clone, PartialEq)]
pub struct RackMatrix {
    /// Rack ids, busiest first.
    pub racks: Vec<String>,
    /// `volume[i][j]`: bytes from `racks[i]` to `racks[j]`, already scaled.
    pub volume: Vec<Vec<f64>>,
    pub norm_factor: f64,
}

impl RackMatrix {
    pub fn len(&self) -> usize {
        self.racks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.racks.is_empty()
    }

    /// Sum of off-diagonal entries.
    pub fn total(&self) -> f64 {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.volume[i][j])
            .sum()
    }
}

/// Parses `src_rack,dst_rack,bytes` rows; `#` starts a comment. Keeps the
/// `top_n` racks by total outgoing volume (ties by first appearance; all
/// racks when `None`) and scales every entry by `norm`. Diagonal entries
/// are ignored.
pub fn parse_rack_matrix(text: &str, origin: &Path, top_n: Option<usize>, norm: f64) -> Result<RackMatrix> {
    if !(norm >= 0.0) || !norm.is_finite() {
        return Err(Error::InvalidArgument(format!("norm factor must be finite and >= 0, got {norm}")));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [src, dst, bytes] = fields[..] else {
            return Err(Error::parse(origin, i + 1, format!("expected `src,dst,bytes`, got `{line}`")));
        };
        let bytes: f64 = bytes
            .parse()
            .map_err(|_| Error::parse(origin, i + 1, format!("bad byte count `{bytes}`")))?;
        if !(bytes >= 0.0) || !bytes.is_finite() {
            return Err(Error::parse(origin, i + 1, format!("negative or non-finite volume {bytes}")));
        }
        let mut id = |name: &str| {
            *index.entry(name.to_string()).or_insert_with(|| {
                ids.push(name.to_string());
                ids.len() - 1
            })
        };
        let (a, b) = (id(src), id(dst));
        rows.push((a, b, bytes));
    }
    let top_n = top_n.unwrap_or(ids.len());
    if top_n > ids.len() {
        return Err(Error::InvalidArgument(format!(
            "asked for {top_n} racks but the matrix has {}",
            ids.len()
        )));
    }
    let mut out_volume = vec![0.0; ids.len()];
    for &(a, b, v) in &rows {
        if a != b {
            out_volume[a] += v;
        }
    }
    let mut rank: Vec<usize> = (0..ids.len()).collect();
    rank.sort_by(|&a, &b| out_volume[b].partial_cmp(&out_volume[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    rank.truncate(top_n);
    let mut slot = vec![usize::MAX; ids.len()];
    for (i, &r) in rank.iter().enumerate() {
        slot[r] = i;
    }
    let mut volume = vec![vec![0.0; top_n]; top_n];
    for &(a, b, v) in &rows {
        if a != b && slot[a] != usize::MAX && slot[b] != usize::MAX {
            volume[slot[a]][slot[b]] += v * norm;
        }
    }
    Ok(RackMatrix {
        racks: rank.iter().map(|&r| ids[r].clone()).collect(),
        volume,
        norm_factor: norm,
    })
}

pub fn load_rack_matrix(path: &Path, top_n: Option<usize>, norm: f64) -> Result<RackMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_rack_matrix(&text, path, top_n, norm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpandOptions {
    pub seed: u64,
    /// Flows start uniformly in `[0, start_window)`.
    pub start_window: f64,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions {
            seed: 0,
            start_window: TRACE_START_WINDOW,
        }
    }
}

/// Splits each rack-pair volume equally over all server pairs: volume `V`
/// between racks with `a` and `b` servers becomes `a * b` flows of `V/(a*b)`.
/// `assignment[i]` is the switch hosting matrix rack `i`.
pub fn expand_to_servers(
    m: &RackMatrix,
    t: &Topology,
    assignment: &[usize],
    opts: ExpandOptions,
) -> Result<TrafficPattern> {
    if assignment.len() != m.len() {
        return Err(Error::InvalidArgument(format!(
            "{} racks but {} assignments",
            m.len(),
            assignment.len()
        )));
    }
    let mut sorted = assignment.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("two racks mapped to one switch".into()));
    }
    for &u in assignment {
        if u >= t.switch_count() || t.servers_at(u) == 0 {
            return Err(Error::Infeasible(format!("switch {u} hosts no servers")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut flows = Vec::new();
    for i in 0..m.len() {
        for j in 0..m.len() {
            let v = m.volume[i][j];
            if i == j || v <= 0.0 {
                continue;
            }
            let (ra, rb) = (t.server_range(assignment[i]), t.server_range(assignment[j]));
            let each = v / (ra.len() * rb.len()) as f64;
            for src in ra.clone() {
                for dst in rb.clone() {
                    let start = if opts.start_window > 0.0 {
                        rng.random_range(0.0..opts.start_window)
                    } else {
                        0.0
                    };
                    flows.push(Flow {
                        src,
                        dst,
                        size: FlowSize::Bytes(each),
                        start,
                    });
                }
            }
        }
    }
    Ok(TrafficPattern::new(flows))
}

/// Moves a server-level pattern from `from` onto `to`: servers are ranked by
/// bytes sent plus received (ties by index) and packed rack by rack into
/// racks of `to` taken in seeded random order.
pub fn remap_busiest_packed(p: &TrafficPattern, from: &Topology, to: &Topology, seed: u64) -> Result<TrafficPattern> {
    let n_from = from.total_servers();
    let mut volume = vec![0.0f64; n_from];
    let mut referenced = vec![false; n_from];
    for f in &p.flows {
        if f.src >= n_from || f.dst >= n_from {
            return Err(Error::InvalidArgument(format!(
                "flow {}->{} references a server outside the source topology",
                f.src, f.dst
            )));
        }
        volume[f.src] += f.size.volume();
        volume[f.dst] += f.size.volume();
        referenced[f.src] = true;
        referenced[f.dst] = true;
    }
    let mut ranked: Vec<usize> = (0..n_from).filter(|&s| referenced[s]).collect();
    ranked.sort_by(|&a, &b| volume[b].total_cmp(&volume[a]).then(a.cmp(&b)));
    if ranked.len() > to.total_servers() {
        return Err(Error::Infeasible(format!(
            "{} servers referenced but the target has {}",
            ranked.len(),
            to.total_servers()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut racks: Vec<usize> = to.racks().collect();
    racks.shuffle(&mut rng);
    let mut mapping = vec![usize::MAX; n_from];
    let mut slots = racks.iter().flat_map(|&u| to.server_range(u));
    for &s in &ranked {
        mapping[s] = slots.next().expect("capacity checked above");
    }
    Ok(TrafficPattern::new(
        p.flows
            .iter()
            .map(|f| Flow {
                src: mapping[f.src],
                dst: mapping[f.dst],
                ..*f
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_leaf_spine, Topology};

    fn parse(text: &str, top_n: usize, norm: f64) -> Result<RackMatrix> {
        parse_rack_matrix(text, Path::new("test"), Some(top_n), norm)
    }

    #[test]
    fn top_racks_by_outgoing_volume() {
        let m = parse("# three racks\n0,1,6\n0,2,4\n1,2,5\n2,0,1\n", 2, 1.0).unwrap();
        assert_eq!(m.racks, vec!["0", "1"]);
        assert_eq!(m.volume, vec![vec![0.0, 6.0], vec![0.0, 0.0]]);
        let all = parse_rack_matrix("0,1,6\n0,2,4\n", Path::new("t"), None, 1.0).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn norm_zero_gives_zero_matrix() {
        let m = parse("a,b,10\nb,a,3\n", 2, 0.0).unwrap();
        assert_eq!(m.total(), 0.0);
        let m = parse("a,b,10\nb,a,3\n", 2, 2.5).unwrap();
        assert_eq!(m.total(), 32.5);
    }

    #[test]
    fn malformed_rows() {
        assert!(parse("a,b\n", 1, 1.0).is_err());
        assert!(parse("a,b,x\n", 1, 1.0).is_err());
        assert!(parse("a,b,-1\n", 1, 1.0).is_err());
        assert!(parse("a,b,1\n", 3, 1.0).is_err());
        let err = parse("a,b,1\nbad\n", 1, 1.0).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn equal_split() {
        let t = Topology::from_links_with_servers(&[4, 6, 0], &[(0, 1), (1, 2)]).unwrap();
        let m = RackMatrix {
            racks: vec!["a".into(), "b".into()],
            volume: vec![vec![0.0, 120.0], vec![0.0, 0.0]],
            norm_factor: 1.0,
        };
        let p = expand_to_servers(&m, &t, &[0, 1], ExpandOptions::default()).unwrap();
        assert_eq!(p.len(), 24);
        assert!(p.flows.iter().all(|f| f.size == FlowSize::Bytes(5.0)));
        assert!(p.flows.iter().all(|f| (0.0..TRACE_START_WINDOW).contains(&f.start)));
        assert!(expand_to_servers(&m, &t, &[0, 2], ExpandOptions::default()).is_err());
    }

    #[test]
    fn two_by_two() {
        let t = build_leaf_spine(2, 2).unwrap();
        let m = RackMatrix {
            racks: vec!["a".into(), "b".into()],
            volume: vec![vec![0.0, 8.0], vec![0.0, 0.0]],
            norm_factor: 1.0,
        };
        let p = expand_to_servers(&m, &t, &[0, 1], ExpandOptions::default()).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.total_bytes(), 8.0);
    }

    #[test]
    fn busiest_servers_share_racks() {
        // four servers on four racks, busiest first: 0 (9), 1 (7), 2 (3), 3 (1)
        let from = Topology::from_links_with_servers(&[1, 1, 1, 1, 0], &[(0, 4), (1, 4), (2, 4), (3, 4)]).unwrap();
        let to = Topology::from_links_with_servers(&[2, 2], &[(0, 1)]).unwrap();
        let flow = |src, dst, size| Flow {
            src,
            dst,
            size: FlowSize::Bytes(size),
            start: 0.0,
        };
        let p = TrafficPattern::new(vec![flow(0, 3, 1.0), flow(0, 2, 3.0), flow(0, 1, 5.0), flow(1, 3, 0.0001)]);
        // volumes: 0 -> 9, 1 -> 5.0001, 2 -> 3, 3 -> 1.0001
        let q = remap_busiest_packed(&p, &from, &to, 3).unwrap();
        let rack = |s: usize| to.rack_of_server(s);
        let (m0, m1, m2, m3) = (q.flows[2].src, q.flows[2].dst, q.flows[1].dst, q.flows[0].dst);
        assert_eq!(rack(m0), rack(m1));
        assert_eq!(rack(m2), rack(m3));
        assert_ne!(rack(m0), rack(m2));
    }

    #[test]
    fn remap_capacity_shortfall() {
        let from = build_leaf_spine(6, 2).unwrap();
        let to = build_leaf_spine(2, 2).unwrap();
        let p = TrafficPattern::new(
            (0..9)
                .map(|s| Flow {
                    src: s,
                    dst: s + 10,
                    size: FlowSize::Bytes(1.0),
                    start: 0.0,
                })
                .collect(),
        );
        assert!(matches!(remap_busiest_packed(&p, &from, &to, 0), Err(Error::Infeasible(_))));
    }
}
