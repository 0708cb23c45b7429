//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when a criterion outside `KNOWN_RED` fails.

use std::process::ExitCode;
use std::time::Instant;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dcfabric::expansion::{
    cross_cluster_fraction, cut_ratio, edge_expansion_exact, min_cluster_merge_cut, partition_graph,
    partition_graph_best, random_balanced_partition, theorem1_bound,
};
use dcfabric::experiment::{burst_fct, cs_tile, scale_spec, tile_seed, Fabric};
use dcfabric::resilience::{Failure, FailureKind, LossMode, LossModel};
use dcfabric::routing::{bfs_distances, compute_next_hops, expressibility_report, k_disjoint_paths, Path, Scheme};
use dcfabric::simulate::{fct_simulate_links, water_fill};
use dcfabric::topology::{random_regular_graph, rewire_to_rrg, udf, Topology, TopologySpec};
use dcfabric::traffic::BurstPreset;
use dcfabric::Ratio;

/// Criteria that fail under the fluid max-min model at the stated setting.
const KNOWN_RED: &[u32] = &[3, 11];

const SEED: u64 = 1;
const TRIALS: usize = 3;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ratio_range(f: &Fabric, scheme: Scheme, tiles: &[(usize, usize)]) -> Vec<f64> {
    let n = f.base.total_servers();
    tiles
        .iter()
        .map(|&(c, s)| cs_tile(f, scheme, c, s, tile_seed(SEED, c, s, n)).unwrap().expect("tile fits").ratio)
        .collect()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn a1_udf() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    for k in [4, 8, 16] {
        for oversub in [1, 2, 4] {
            ok &= udf(&TopologySpec::FatTree { k, oversub }).unwrap() == Ratio::from_integer(4);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..10 {
        let (x, y) = (rng.random_range(1..=40), rng.random_range(1..=20));
        ok &= udf(&TopologySpec::LeafSpine { x, y }).unwrap() == Ratio::from_integer(2);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(ok && secs < 1.0, format!("identities hold: {ok}, {secs:.3} s"))
}

fn a2_heatmap() -> Outcome {
    let f = Fabric::new(&TopologySpec::FatTree { k: 8, oversub: 4 }, SEED, TRIALS).unwrap();
    let sizes: Vec<usize> = (2..=6).map(|r| r * 16).collect();
    let tiles: Vec<(usize, usize)> = sizes.iter().flat_map(|&c| sizes.iter().map(move |&s| (c, s))).collect();
    let (lo, hi) = min_max(&ratio_range(&f, Scheme::Ecmp, &tiles));
    let f1 = Fabric::new(&TopologySpec::FatTree { k: 8, oversub: 1 }, SEED, TRIALS).unwrap();
    let sizes: Vec<usize> = (2..=6).map(|r| r * 4).collect();
    let tiles: Vec<(usize, usize)> = sizes.iter().flat_map(|&c| sizes.iter().map(move |&s| (c, s))).collect();
    let mut v = ratio_range(&f1, Scheme::Ecmp, &tiles);
    v.sort_by(f64::total_cmp);
    let median = v[v.len() / 2];
    outcome(
        lo >= 2.0 && hi <= 4.4 && (0.8..=1.5).contains(&median),
        format!("oversub 4 ratios [{lo:.3}, {hi:.3}], oversub 1 median {median:.3}"),
    )
}

fn a3_red_patch() -> Outcome {
    let f = Fabric::new(&TopologySpec::LeafSpine { x: 6, y: 2 }, SEED, TRIALS).unwrap();
    let ecmp = ratio_range(&f, Scheme::Ecmp, &[(6, 6)])[0];
    let disjoint = ratio_range(&f, Scheme::KDisjoint(2), &[(6, 6)])[0];
    let big = Fabric::new(&TopologySpec::LeafSpine { x: 24, y: 8 }, SEED, TRIALS).unwrap();
    let big_ecmp = ratio_range(&big, Scheme::Ecmp, &[(24, 24)])[0];
    outcome(
        ecmp < 1.0 && disjoint >= 0.9,
        format!("ecmp {ecmp:.3} (< 1), kdisjoint:2 {disjoint:.3} (>= 0.9); leafspine(24,8) ecmp {big_ecmp:.3}"),
    )
}

fn a4_leafspine() -> Outcome {
    let f = Fabric::new(&TopologySpec::LeafSpine { x: 24, y: 8 }, SEED, TRIALS).unwrap();
    let tiles: Vec<(usize, usize)> =
        [24, 48].iter().flat_map(|&c| [192, 288, 384].iter().map(move |&s| (c, s))).collect();
    let (lo, hi) = min_max(&ratio_range(&f, Scheme::Ecmp, &tiles));
    outcome(lo >= 1.3 && hi <= 2.2, format!("ratios [{lo:.3}, {hi:.3}]"))
}

fn a5_scale() -> Outcome {
    let v: Vec<f64> = (2..=8)
        .map(|y| {
            let f = Fabric::new(&scale_spec(y), SEED, TRIALS).unwrap();
            let r = 3 * y;
            ratio_range(&f, Scheme::Ecmp, &[(r, 4 * r)])[0]
        })
        .collect();
    let (lo, hi) = min_max(&v);
    let spread = (hi - lo) / lo;
    outcome(spread < 0.30, format!("ratios [{lo:.3}, {hi:.3}], relative spread {spread:.3}"))
}

fn a6_expressibility() -> Outcome {
    let base = TopologySpec::LeafSpine { x: 24, y: 8 }.build().unwrap();
    let g = rewire_to_rrg(&base, SEED).unwrap();
    let table = compute_next_hops(&g).unwrap();
    let n = g.switch_count();
    let dist: Vec<Vec<u32>> = (0..n).map(|u| bfs_distances(&g, u)).collect();
    let mut paths: Vec<Path> = Vec::new();
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            paths.extend(k_disjoint_paths(&g, a, b, 4).unwrap().paths);
        }
    }
    let report = expressibility_report(&table, &paths);
    let verified = paths.iter().zip(&report.witnesses).all(|(p, w)| match w {
        Some(w) => {
            let i = p.hops().iter().position(|h| h == w).expect("witness lies on path");
            dist[p.source()][*w] == i as u32 && dist[*w][p.destination()] == (p.len() - i) as u32
        }
        None => true,
    });
    let frac = report.fraction();
    outcome(
        frac <= 0.005 && verified,
        format!("{} of {} paths not expressible ({:.4}%), witnesses verified: {verified}", report.non_expressible, report.total, frac * 100.0),
    )
}

/// Shortest-path next hops toward every destination, from plain BFS.
fn oracle_next_hops(t: &Topology) -> Vec<Vec<Vec<usize>>> {
    let n = t.switch_count();
    let dist: Vec<Vec<u32>> = (0..n).map(|d| bfs_distances(t, d)).collect();
    (0..n)
        .map(|d| {
            (0..n)
                .map(|u| t.neighbors(u).iter().copied().filter(|&v| dist[d][v] + 1 == dist[d][u]).collect())
                .collect()
        })
        .collect()
}

fn blocked(f: Failure, u: usize, v: usize) -> bool {
    match f {
        Failure::Link(a, b) => (u, v) == (a, b) || (u, v) == (b, a),
        Failure::Switch(w) => u == w || v == w,
    }
}

/// Probability that a flow hashed hop by hop from `u` to `d` meets a switch
/// with every shortest next hop failed, by enumerating every hash outcome.
fn ecmp_walk(hops: &[Vec<Vec<usize>>], f: Failure, u: usize, d: usize) -> f64 {
    if u == d {
        return 0.0;
    }
    let alive: Vec<usize> = hops[d][u].iter().copied().filter(|&v| !blocked(f, u, v)).collect();
    if alive.is_empty() {
        return 1.0;
    }
    alive.iter().map(|&v| ecmp_walk(hops, f, v, d)).sum::<f64>() / alive.len() as f64
}

fn source_routed(t: &Topology, k: usize, f: Failure, a: usize, b: usize) -> f64 {
    let paths = k_disjoint_paths(t, a, b, k).unwrap().paths;
    let usable: Vec<&Path> = paths.iter().filter(|p| p.is_empty() || !blocked(f, p.hops()[0], p.hops()[1])).collect();
    if usable.is_empty() {
        return 1.0;
    }
    let hit = |p: &Path| p.hops().iter().any(|&u| f == Failure::Switch(u)) || p.links().any(|(u, v)| blocked(f, u, v));
    usable.iter().filter(|p| hit(p)).count() as f64 / usable.len() as f64
}

/// Loss over every ordered pair of distinct servers on surviving switches.
fn oracle_loss(t: &Topology, scheme: Scheme, f: Failure) -> f64 {
    let hops = oracle_next_hops(t);
    let servers: Vec<usize> = (0..t.total_servers())
        .map(|s| t.rack_of_server(s))
        .filter(|&u| f != Failure::Switch(u))
        .collect();
    let m = servers.len();
    let mut lost = 0.0;
    for (i, &a) in servers.iter().enumerate() {
        for (j, &b) in servers.iter().enumerate() {
            if i == j || a == b {
                continue;
            }
            lost += match scheme {
                Scheme::Ecmp => ecmp_walk(&hops, f, a, b),
                Scheme::KDisjoint(k) => source_routed(t, k, f, a, b),
                Scheme::KShortest(_) => unreachable!("oracle covers ecmp and kdisjoint"),
            };
        }
    }
    lost / (m * (m - 1)) as f64
}

fn a7_failure_loss() -> Outcome {
    let mut worst = 0.0f64;
    let ls = TopologySpec::LeafSpine { x: 2, y: 2 }.build().unwrap();
    let model = LossModel::new(&ls, Scheme::Ecmp).unwrap();
    let down = model.loss_given_failure(Failure::Link(0, 4), LossMode::Exhaustive).unwrap();
    let oracle = oracle_loss(&ls, Scheme::Ecmp, Failure::Link(0, 4));
    let derived_ok = (down - 3.0 / 28.0).abs() < 1e-12 && (oracle - 3.0 / 28.0).abs() < 1e-12;
    let spine = model.loss_given_failure(Failure::Switch(4), LossMode::Exhaustive).unwrap();
    let ft = TopologySpec::FatTree { k: 4, oversub: 1 }.build().unwrap();
    for (t, scheme) in [(&ls, Scheme::Ecmp), (&ft, Scheme::Ecmp), (&ft, Scheme::KDisjoint(2))] {
        let model = LossModel::new(t, scheme).unwrap();
        let failures = t
            .links()
            .iter()
            .map(|&(a, b)| Failure::Link(a, b))
            .chain((0..t.switch_count()).map(Failure::Switch));
        for f in failures {
            let got = model.loss_given_failure(f, LossMode::Exhaustive).unwrap();
            worst = worst.max((got - oracle_loss(t, scheme, f)).abs());
        }
    }
    let rrg = rewire_to_rrg(&TopologySpec::FatTree { k: 8, oversub: 1 }.build().unwrap(), SEED).unwrap();
    let mean_loss = |scheme| {
        LossModel::new(&rrg, scheme)
            .unwrap()
            .expected_transient_loss(FailureKind::Link, 0.0, LossMode::Exhaustive, None, SEED)
            .unwrap()
            .p_loss_given_failure
    };
    let (kd, ks, ec) = (mean_loss(Scheme::KDisjoint(4)), mean_loss(Scheme::KShortest(4)), mean_loss(Scheme::Ecmp));
    outcome(
        derived_ok && spine == 0.0 && worst < 1e-12 && kd >= ks && ks >= ec,
        format!(
            "leafspine(2,2) link 0-4 {down:.6} (3/28), spine failure {spine}, max oracle gap {worst:.1e}, \
             rrg link loss kdisjoint {kd:.5} >= kshortest {ks:.5} >= ecmp {ec:.5}"
        ),
    )
}

fn a8_partition() -> Outcome {
    let g = rewire_to_rrg(&TopologySpec::FatTree { k: 16, oversub: 4 }.build().unwrap(), SEED).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [2usize, 5] {
        let f: f64 = (0..5)
            .map(|s| cross_cluster_fraction(&g, &random_balanced_partition(&g, k, s).unwrap()))
            .sum::<f64>()
            / 5.0;
        let target = (k - 1) as f64 / k as f64;
        ok &= (f - target).abs() <= 0.03;
        parts.push(format!("random k={k} {f:.3} (target {target:.3})"));
    }
    let kl = cross_cluster_fraction(&g, &partition_graph_best(&g, 5, SEED, 4).unwrap());
    ok &= kl <= 0.7;
    outcome(ok, format!("{}, heuristic k=5 {kl:.3}", parts.join(", ")))
}

fn a9_theorem() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0usize;
    let mut violations = 0usize;
    for i in 0..50u64 {
        let n = 2 * rng.random_range(6..=10);
        let d = rng.random_range(3..=8);
        let g = random_regular_graph(n, d, i).unwrap();
        let h = edge_expansion_exact::<f64>(&g).unwrap();
        if (cut_ratio::<f64>(&g, &h.witness) - h.h_upper).abs() > 1e-12 {
            violations += 1;
        }
        for k in [2usize, 4] {
            for p in [random_balanced_partition(&g, k, i).unwrap(), partition_graph(&g, k, i).unwrap()] {
                let bound = theorem1_bound(d, k, cross_cluster_fraction(&g, &p)).unwrap();
                let (merge, _) = min_cluster_merge_cut::<f64>(&g, &p).unwrap();
                checked += 1;
                if merge > bound + 1e-12 || h.h_upper > bound + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && secs < 60.0,
        format!("{checked} partitions on 50 graphs, {violations} violations, {secs:.1} s"),
    )
}

/// Max-min rates by repeated LPs: raise a common floor for unfrozen flows,
/// then freeze every flow that cannot exceed the floor.
fn lp_maxmin(caps: &[f64], flows: &[Vec<usize>]) -> Vec<f64> {
    let n = flows.len();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let solve = |fixed: &[Option<f64>], floor: Option<f64>, target: Option<usize>| -> f64 {
        let mut pb = Problem::new(OptimizationDirection::Maximize);
        let t = pb.add_var(if target.is_none() { 1.0 } else { 0.0 }, (0.0, f64::INFINITY));
        let x: Vec<_> = (0..n)
            .map(|f| {
                let obj = if target == Some(f) { 1.0 } else { 0.0 };
                match fixed[f] {
                    Some(v) => pb.add_var(obj, (v, v)),
                    None => pb.add_var(obj, (0.0, f64::INFINITY)),
                }
            })
            .collect();
        for (l, &c) in caps.iter().enumerate() {
            let row: Vec<_> = (0..n).filter(|&f| flows[f].contains(&l)).map(|f| (x[f], 1.0)).collect();
            if !row.is_empty() {
                pb.add_constraint(row.as_slice(), ComparisonOp::Le, c);
            }
        }
        for f in (0..n).filter(|&f| fixed[f].is_none()) {
            match floor {
                Some(v) => pb.add_constraint([(x[f], 1.0)], ComparisonOp::Ge, v),
                None => pb.add_constraint([(x[f], 1.0), (t, -1.0)], ComparisonOp::Ge, 0.0),
            }
        }
        pb.solve().expect("feasible LP").objective()
    };
    while fixed.iter().any(Option::is_none) {
        let level = solve(&fixed, None, None);
        let open: Vec<usize> = (0..n).filter(|&f| fixed[f].is_none()).collect();
        let mut froze = false;
        for &f in &open {
            if solve(&fixed, Some(level), Some(f)) <= level + 1e-9 {
                fixed[f] = Some(level);
                froze = true;
            }
        }
        if !froze {
            for &f in &open {
                fixed[f] = Some(level);
            }
        }
    }
    fixed.into_iter().map(Option::unwrap).collect()
}

fn a10_maxmin() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut worst_conservation = 0.0f64;
    for _ in 0..200 {
        let nl = rng.random_range(1..=6);
        let caps: Vec<f64> = (0..nl).map(|_| rng.random_range(0.1..1.0)).collect();
        let nf = rng.random_range(1..=6);
        let flows: Vec<Vec<usize>> = (0..nf)
            .map(|_| {
                let mut links: Vec<usize> = (0..nl).filter(|_| rng.random_bool(0.5)).collect();
                if links.is_empty() {
                    links.push(rng.random_range(0..nl));
                }
                links
            })
            .collect();
        let wf = water_fill(&caps, &flows);
        let lp = lp_maxmin(&caps, &flows);
        for (a, b) in wf.iter().zip(&lp) {
            worst = worst.max((a - b).abs());
        }
        let sizes: Vec<f64> = (0..nf).map(|_| rng.random_range(1e3..1e6)).collect();
        let starts: Vec<f64> = (0..nf).map(|_| rng.random_range(0.0..1e-3)).collect();
        let r = fct_simulate_links(&caps, &flows, &sizes, &starts);
        for (d, s) in r.delivered.iter().zip(&sizes) {
            worst_conservation = worst_conservation.max((d - s).abs() / s);
        }
    }
    outcome(
        worst <= 1e-6 && worst_conservation <= 1e-6,
        format!("max |water-fill - LP| {worst:.1e}, max relative byte error {worst_conservation:.1e}"),
    )
}

fn a11_fairness() -> Outcome {
    let f = Fabric::new(&TopologySpec::FatTree { k: 8, oversub: 4 }, SEED, TRIALS).unwrap();
    let n = f.base.total_servers();
    let mut ok = true;
    let mut parts = Vec::new();
    for scheme in [Scheme::KDisjoint(4), Scheme::Ecmp] {
        let t = cs_tile(&f, scheme, 64, 64, tile_seed(SEED, 64, 64, n)).unwrap().expect("tile fits");
        ok &= t.jain_rrg >= t.jain_base - 0.05;
        parts.push(format!("{scheme} rrg {:.3} vs fat tree {:.3}", t.jain_rrg, t.jain_base));
    }
    let t = cs_tile(&f, Scheme::Ecmp, 200, 200, tile_seed(SEED, 200, 200, n)).unwrap().expect("tile fits");
    parts.push(format!("at 200x200 ecmp rrg {:.3} vs fat tree {:.3}", t.jain_rrg, t.jain_base));
    outcome(ok, parts.join("; "))
}

fn a12_bursts() -> Outcome {
    let f = Fabric::new(&TopologySpec::FatTree { k: 10, oversub: 4 }, SEED, TRIALS).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for scheme in [Scheme::Ecmp, Scheme::KDisjoint(4)] {
        for preset in [BurstPreset::Incast40To20, BurstPreset::Outcast20To40] {
            let (base, rrgs) = burst_fct(&f, scheme, preset, SEED).unwrap();
            let p50 = rrgs.iter().map(|r| r.p50).fold(0.0, f64::max);
            let p99 = rrgs.iter().map(|r| r.p99).fold(0.0, f64::max);
            ok &= p50 <= base.p50 && p99 <= base.p99;
            parts.push(format!(
                "{scheme} {preset} p50 {:.2}/{:.2} ms p99 {:.2}/{:.2} ms",
                p50 * 1e3,
                base.p50 * 1e3,
                p99 * 1e3,
                base.p99 * 1e3
            ));
        }
    }
    outcome(ok, format!("rrg/fat tree worst trial: {}", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "udf identities", a1_udf),
        (2, "heatmap ratio ceiling", a2_heatmap),
        (3, "red patch and its elimination", a3_red_patch),
        (4, "leaf-spine ratio ceiling", a4_leafspine),
        (5, "scale flatness", a5_scale),
        (6, "expressibility", a6_expressibility),
        (7, "failure-loss oracle", a7_failure_loss),
        (8, "partition", a8_partition),
        (9, "expansion bound", a9_theorem),
        (10, "max-min oracle", a10_maxmin),
        (11, "fairness", a11_fairness),
        (12, "burst direction", a12_bursts),
    ];
    let mut unexpected = Vec::new();
    let mut failed = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {id:>2} {name}: {} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
            if !KNOWN_RED.contains(&id) {
                unexpected.push(id);
            }
        }
    }
    println!("{} of 12 criteria pass", 12 - failed);
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
