//! Experiment runners behind the `dcfabric` binary. Each runner returns
//! CSV files whose first lines echo the full config as `#` comments; rows
//! are sorted by key so output does not depend on worker scheduling.
//!
//! The base fabric is always routed with ECMP; the configured scheme
//! applies to the equipment-equivalent random graph.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentName, FailureLossConfig};
use crate::error::{Error, Result};
use crate::expansion::{cross_cluster_fraction, partition_graph_best, random_balanced_partition};
use crate::hash::hash_words;
use crate::resilience::{FailureKind, LossMode, LossModel, LossReport};
use crate::routing::{compute_next_hops, expressibility_report, k_disjoint_paths, ExpressibilityReport, NextHopTable, Scheme};
use crate::simulate::{assign_paths, fct_simulate, maxmin_allocate, Allocation, FctResult};
use crate::topology::{ideal_rrg_nsr, nsr, rewire_to_rrg, udf, Topology, TopologySpec};
use crate::traffic::{
    burst_preset, cs_pattern, expand_to_servers, load_rack_matrix, remap_busiest_packed, BurstPreset, CsSpec,
    ExpandOptions, TrafficPattern,
};

/// A generated output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// A base fabric with its random-graph counterparts, one per trial.
#[derive(Debug, Clone)]
pub struct Fabric {
    pub base: Topology,
    pub base_table: NextHopTable,
    pub rrgs: Vec<(Topology, NextHopTable)>,
}

/// Seed of the random graph used in trial `trial`.
pub fn rrg_seed(seed: u64, trial: usize) -> u64 {
    hash_words(&[seed, 0x72_72_67, trial as u64])
}

/// Per-data-point seed: the base seed XOR a stable hash of the point.
pub fn tile_seed(seed: u64, c: usize, s: usize, size: usize) -> u64 {
    seed ^ hash_words(&[c as u64, s as u64, size as u64])
}

impl Fabric {
    pub fn new(spec: &TopologySpec, seed: u64, trials: usize) -> Result<Self> {
        let base = spec.build()?;
        Fabric::from_base(base, seed, trials)
    }

    pub fn from_base(base: Topology, seed: u64, trials: usize) -> Result<Self> {
        let base_table = compute_next_hops(&base)?;
        let rrgs = (0..trials.max(1))
            .into_par_iter()
            .map(|i| {
                let g = rewire_to_rrg(&base, rrg_seed(seed, i))?;
                let table = compute_next_hops(&g)?;
                Ok((g, table))
            })
            .collect::<Result<_>>()?;
        Ok(Fabric { base, base_table, rrgs })
    }

    pub fn trials(&self) -> usize {
        self.rrgs.len()
    }
}

/// Throughput comparison for one C-S point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileStats {
    /// Summed mean RRG rate over summed mean base rate.
    pub ratio: f64,
    pub mean_rrg: f64,
    pub mean_base: f64,
    pub median_rrg: f64,
    pub median_base: f64,
    pub jain_rrg: f64,
    pub jain_base: f64,
}

fn allocate(t: &Topology, table: &NextHopTable, p: &TrafficPattern, scheme: Scheme, seed: u64) -> Result<Allocation<f64>> {
    let routes = assign_paths(t, table, p, scheme, seed)?;
    Ok(maxmin_allocate(t, &routes))
}

/// Runs the C-S pattern with `c` clients and `s` servers on the base and on
/// every trial's random graph. Returns `None` when the pattern does not fit
/// either topology. Statistics other than the ratio are trial means.
pub fn cs_tile(fabric: &Fabric, scheme: Scheme, c: usize, s: usize, seed: u64) -> Result<Option<TileStats>> {
    let mut acc = [0.0f64; 6];
    for (i, (g, table)) in fabric.rrgs.iter().enumerate() {
        let on_base = cs_pattern(&fabric.base, &CsSpec::unbounded(c, s, hash_words(&[seed, i as u64, 1])));
        let on_rrg = cs_pattern(g, &CsSpec::unbounded(c, s, hash_words(&[seed, i as u64, 2])));
        let (pb, pr) = match (on_base, on_rrg) {
            (Ok(pb), Ok(pr)) => (pb, pr),
            (Err(Error::Infeasible(_)), _) | (_, Err(Error::Infeasible(_))) => return Ok(None),
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let route_seed = hash_words(&[seed, i as u64, 3]);
        let ab = allocate(&fabric.base, &fabric.base_table, &pb, Scheme::Ecmp, route_seed)?;
        let ar = allocate(g, table, &pr, scheme, route_seed)?;
        for (slot, v) in acc.iter_mut().zip([
            ar.mean(),
            ab.mean(),
            ar.median(),
            ab.median(),
            ar.jain_index()?,
            ab.jain_index()?,
        ]) {
            *slot += v;
        }
    }
    let n = fabric.trials() as f64;
    Ok(Some(TileStats {
        ratio: acc[0] / acc[1],
        mean_rrg: acc[0] / n,
        mean_base: acc[1] / n,
        median_rrg: acc[2] / n,
        median_base: acc[3] / n,
        jain_rrg: acc[4] / n,
        jain_base: acc[5] / n,
    }))
}

fn header(cfg: &ExperimentConfig, name: &str) -> String {
    let mut out = format!("# dcfabric {name}\n# seed = {}\n", cfg.seed);
    for line in cfg.to_toml().lines() {
        let _ = writeln!(out, "# {line}");
    }
    out
}

fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        "NA".into()
    }
}

fn tile_columns(stats: Option<TileStats>) -> String {
    match stats {
        Some(t) => [t.ratio, t.mean_rrg, t.mean_base, t.median_rrg, t.median_base, t.jain_rrg, t.jain_base]
            .map(num)
            .join(","),
        None => ["NA"; 7].join(","),
    }
}

const TILE_HEADER: &str = "ratio,mean_rrg,mean_base,median_rrg,median_base,jain_rrg,jain_base";

pub fn run_cs_heatmap(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let h = cfg
        .cs_heatmap
        .as_ref()
        .ok_or_else(|| Error::Config("missing [cs_heatmap] table".into()))?;
    let scheme = cfg.scheme()?;
    let fabric = Fabric::new(&cfg.topology.spec(), cfg.seed, cfg.trials)?;
    let size = fabric.base.total_servers();
    let mut tiles: Vec<(usize, usize)> =
        h.c_values.iter().flat_map(|&c| h.s_values.iter().map(move |&s| (c, s))).collect();
    tiles.sort_unstable();
    tiles.dedup();
    let rows: Vec<String> = tiles
        .par_iter()
        .map(|&(c, s)| {
            let stats = cs_tile(&fabric, scheme, c, s, tile_seed(cfg.seed, c, s, size))?;
            Ok(format!("{c},{s},{}", tile_columns(stats)))
        })
        .collect::<Result<_>>()?;
    let mut out = header(cfg, "cs_heatmap");
    let _ = writeln!(out, "C,S,{TILE_HEADER}");
    for r in rows {
        let _ = writeln!(out, "{r}");
    }
    Ok(vec![OutputFile {
        name: "cs_heatmap.csv".into(),
        contents: out,
    }])
}

/// Leaf-spine with three times as many servers per leaf as spines.
pub fn scale_spec(y: usize) -> TopologySpec {
    TopologySpec::LeafSpine { x: 3 * y, y }
}

pub fn run_scale(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let sc = cfg.scale.as_ref().ok_or_else(|| Error::Config("missing [scale] table".into()))?;
    let scheme = cfg.scheme()?;
    let mut sizes = sc.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let fabrics: Vec<Fabric> = sizes
        .iter()
        .map(|&y| Fabric::new(&scale_spec(y), cfg.seed, cfg.trials))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for (fi, &y) in sizes.iter().enumerate() {
        for &[cr, sr] in &sc.cs_points {
            jobs.push((fi, cr * 3 * y, sr * 3 * y));
        }
    }
    let mut rows: Vec<(usize, usize, usize, String)> = jobs
        .par_iter()
        .map(|&(fi, c, s)| {
            let f = &fabrics[fi];
            let servers = f.base.total_servers();
            let stats = cs_tile(f, scheme, c, s, tile_seed(cfg.seed, c, s, servers))?;
            Ok((servers, c, s, tile_columns(stats)))
        })
        .collect::<Result<_>>()?;
    rows.sort();
    rows.dedup();
    let mut out = header(cfg, "scale");
    let _ = writeln!(out, "servers,C,S,{TILE_HEADER}");
    for (servers, c, s, cols) in rows {
        let _ = writeln!(out, "{servers},{c},{s},{cols}");
    }
    Ok(vec![OutputFile {
        name: "scale.csv".into(),
        contents: out,
    }])
}

/// Flow completion times of a burst preset on the base (trial-independent)
/// and on every trial's random graph.
pub fn burst_fct(
    fabric: &Fabric,
    scheme: Scheme,
    preset: BurstPreset,
    seed: u64,
) -> Result<(FctResult<f64>, Vec<FctResult<f64>>)> {
    let run = |t: &Topology, table: &NextHopTable, scheme: Scheme, salt: u64| -> Result<FctResult<f64>> {
        let p = burst_preset(t, preset, hash_words(&[seed, salt]))?;
        let routes = assign_paths(t, table, &p, scheme, hash_words(&[seed, salt, 1]))?;
        fct_simulate(t, &routes, &p)
    };
    let base = run(&fabric.base, &fabric.base_table, Scheme::Ecmp, 0)?;
    let rrg = fabric
        .rrgs
        .par_iter()
        .enumerate()
        .map(|(i, (g, table))| run(g, table, scheme, i as u64 + 1))
        .collect::<Result<_>>()?;
    Ok((base, rrg))
}

pub fn run_burst(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let b = cfg.burst.as_ref().ok_or_else(|| Error::Config("missing [burst] table".into()))?;
    let scheme = cfg.scheme()?;
    let fabric = Fabric::new(&cfg.topology.spec(), cfg.seed, cfg.trials)?;
    let mut presets: Vec<BurstPreset> = b.presets.iter().map(|p| p.parse()).collect::<Result<_>>()?;
    presets.sort_by_key(|p| p.to_string());
    presets.dedup();
    let mut summary = header(cfg, "burst");
    let _ = writeln!(summary, "preset,topology,trial,flows,p50,p90,p99");
    let mut flows = header(cfg, "burst flows");
    let _ = writeln!(flows, "preset,topology,trial,flow_id,fct_seconds");
    for preset in presets {
        let (c, s) = preset.sizes();
        let seed = tile_seed(cfg.seed, c, s, fabric.base.total_servers());
        let (base, rrgs) = burst_fct(&fabric, scheme, preset, seed)?;
        let runs = std::iter::once(("base", 0, &base)).chain(rrgs.iter().enumerate().map(|(i, r)| ("rrg", i, r)));
        for (name, trial, r) in runs {
            let _ = writeln!(
                summary,
                "{preset},{name},{trial},{},{},{},{}",
                r.fct.len(),
                num(r.p50),
                num(r.p90),
                num(r.p99)
            );
            for (id, x) in r.fct.iter().enumerate() {
                let _ = writeln!(flows, "{preset},{name},{trial},{id},{x}");
            }
        }
    }
    Ok(vec![
        OutputFile {
            name: "burst.csv".into(),
            contents: summary,
        },
        OutputFile {
            name: "burst_flows.csv".into(),
            contents: flows,
        },
    ])
}

/// Places a trace matrix on seeded-random base racks and returns the
/// server-level pattern at unit norm.
pub fn trace_pattern(base: &Topology, matrix_path: &Path, top_racks: Option<usize>, window: f64, seed: u64) -> Result<TrafficPattern> {
    let m = load_rack_matrix(matrix_path, top_racks, 1.0)?;
    let mut racks: Vec<usize> = base.racks().collect();
    if m.len() > racks.len() {
        return Err(Error::Infeasible(format!(
            "matrix has {} racks but the topology has {}",
            m.len(),
            racks.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    racks.shuffle(&mut rng);
    racks.truncate(m.len());
    expand_to_servers(
        &m,
        base,
        &racks,
        ExpandOptions {
            seed: hash_words(&[seed, 1]),
            start_window: window,
        },
    )
}

pub fn run_trace_sweep(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let ts = cfg
        .trace_sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [trace_sweep] table".into()))?;
    let scheme = cfg.scheme()?;
    let fabric = Fabric::new(&cfg.topology.spec(), cfg.seed, cfg.trials)?;
    let base_pattern = trace_pattern(&fabric.base, &ts.matrix_path, ts.top_racks, ts.start_window, cfg.seed)?;
    let rrg_patterns: Vec<TrafficPattern> = fabric
        .rrgs
        .iter()
        .enumerate()
        .map(|(i, (g, _))| remap_busiest_packed(&base_pattern, &fabric.base, g, hash_words(&[cfg.seed, i as u64, 2])))
        .collect::<Result<_>>()?;
    let mut norms = ts.norm_values.clone();
    norms.sort_by(f64::total_cmp);
    norms.dedup();

    let rows: Vec<String> = norms
        .par_iter()
        .map(|&norm| {
            let mut lines = String::new();
            let mut emit = |name: &str, trial: usize, t: &Topology, table: &NextHopTable, p: &TrafficPattern, scheme: Scheme| -> Result<()> {
                let p = p.scaled(norm);
                let routes = assign_paths(t, table, &p, scheme, hash_words(&[cfg.seed, trial as u64, 3]))?;
                let r = fct_simulate::<f64>(t, &routes, &p)?;
                let _ = writeln!(
                    lines,
                    "{norm},{name},{trial},{},{},{},{}",
                    p.len(),
                    num(r.p50),
                    num(r.p90),
                    num(r.p99)
                );
                Ok(())
            };
            emit("base", 0, &fabric.base, &fabric.base_table, &base_pattern, Scheme::Ecmp)?;
            for (i, ((g, table), p)) in fabric.rrgs.iter().zip(&rrg_patterns).enumerate() {
                emit("rrg", i, g, table, p, scheme)?;
            }
            Ok(lines)
        })
        .collect::<Result<_>>()?;
    let mut out = header(cfg, "trace_sweep");
    let _ = writeln!(out, "norm_factor,topology,trial,flows,p50,p90,p99");
    for r in rows {
        out.push_str(&r);
    }
    Ok(vec![OutputFile {
        name: "trace_sweep.csv".into(),
        contents: out,
    }])
}

fn loss_mode(f: &FailureLossConfig, seed: u64) -> LossMode {
    match f.mode.as_str() {
        "exhaustive" => LossMode::Exhaustive,
        "sampled" => LossMode::Sampled {
            samples: f.samples,
            seed,
        },
        _ => LossMode::Auto { seed },
    }
}

pub fn run_failure_loss(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let f = cfg
        .failure_loss
        .as_ref()
        .ok_or_else(|| Error::Config("missing [failure_loss] table".into()))?;
    let kind: FailureKind = f.kind.parse()?;
    let mut schemes: Vec<Scheme> = if f.schemes.is_empty() {
        vec![cfg.scheme()?]
    } else {
        f.schemes.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    schemes.dedup();
    let fabric = Fabric::new(&cfg.topology.spec(), cfg.seed, cfg.trials)?;
    let mode = loss_mode(f, cfg.seed);
    let eval = |t: &Topology, scheme: Scheme| -> Result<LossReport> {
        LossModel::new(t, scheme)?.expected_transient_loss(kind, f.lambda, mode, f.max_elements, cfg.seed)
    };
    let base = eval(&fabric.base, Scheme::Ecmp)?;
    let mut reports = vec![("base".to_string(), 0, Scheme::Ecmp, base.clone())];
    for (i, (g, _)) in fabric.rrgs.iter().enumerate() {
        for &s in &schemes {
            reports.push(("rrg".into(), i, s, eval(g, s)?));
        }
    }
    let mut summary = header(cfg, "failure_loss");
    let _ = writeln!(summary, "topology,trial,scheme,kind,elements,evaluated,avg_p_loss,expected_loss,normalized");
    let mut elements = header(cfg, "failure_loss elements");
    let _ = writeln!(elements, "topology,trial,scheme,kind,element,p_loss");
    for (name, trial, scheme, r) in &reports {
        let normalized = r.p_loss_given_failure * r.element_count as f64
            / (base.p_loss_given_failure * base.element_count as f64);
        let _ = writeln!(
            summary,
            "{name},{trial},{scheme},{kind},{},{},{},{},{}",
            r.element_count,
            r.per_element.len(),
            r.p_loss_given_failure,
            r.expected_loss,
            num(normalized)
        );
        for (e, p) in &r.per_element {
            let _ = writeln!(elements, "{name},{trial},{scheme},{kind},{e},{p}");
        }
    }
    Ok(vec![
        OutputFile {
            name: "failure_loss.csv".into(),
            contents: summary,
        },
        OutputFile {
            name: "failure_loss_elements.csv".into(),
            contents: elements,
        },
    ])
}

/// K edge-disjoint path sets for every ordered switch pair, checked for a
/// single-waypoint encoding. Returns the pair count and the report.
pub fn expressibility_sweep(t: &Topology, table: &NextHopTable, k: usize) -> Result<(usize, ExpressibilityReport)> {
    let n = t.switch_count();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let reports: Vec<ExpressibilityReport> = pairs
        .par_iter()
        .map(|&(a, b)| Ok(expressibility_report(table, &k_disjoint_paths(t, a, b, k)?.paths)))
        .collect::<Result<_>>()?;
    let total = reports
        .into_iter()
        .reduce(ExpressibilityReport::merge)
        .unwrap_or(ExpressibilityReport {
            witnesses: Vec::new(),
            non_expressible: 0,
            total: 0,
        });
    Ok((pairs.len(), total))
}

pub fn run_expressibility(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let e = cfg
        .expressibility
        .as_ref()
        .ok_or_else(|| Error::Config("missing [expressibility] table".into()))?;
    let fabric = Fabric::new(&cfg.topology.spec(), cfg.seed, cfg.trials)?;
    let mut ks = e.k_values.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut out = header(cfg, "expressibility");
    let _ = writeln!(out, "trial,K,pairs,paths,non_expressible,fraction");
    for (i, (g, table)) in fabric.rrgs.iter().enumerate() {
        for &k in &ks {
            let (pairs, r) = expressibility_sweep(g, table, k)?;
            let _ = writeln!(out, "{i},{k},{pairs},{},{},{}", r.total, r.non_expressible, r.fraction());
        }
    }
    Ok(vec![OutputFile {
        name: "expressibility.csv".into(),
        contents: out,
    }])
}

pub fn run_partition(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let pc = cfg
        .partition
        .as_ref()
        .ok_or_else(|| Error::Config("missing [partition] table".into()))?;
    let fabric = Fabric::new(&cfg.topology.spec(), cfg.seed, cfg.trials)?;
    let mut ks = pc.k_values.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut out = header(cfg, "partition");
    let _ = writeln!(out, "topology,trial,k,random_fraction,kl_fraction,expected_random");
    let graphs = std::iter::once(("base", 0, &fabric.base))
        .chain(fabric.rrgs.iter().enumerate().map(|(i, (g, _))| ("rrg", i, g)));
    for (name, trial, t) in graphs {
        for &k in &ks {
            let seed = hash_words(&[cfg.seed, trial as u64, k as u64]);
            let random = random_balanced_partition(t, k, seed)?;
            let kl = partition_graph_best(t, k, seed, pc.restarts)?;
            let _ = writeln!(
                out,
                "{name},{trial},{k},{},{},{}",
                cross_cluster_fraction(t, &random),
                cross_cluster_fraction(t, &kl),
                (k - 1) as f64 / k as f64
            );
        }
    }
    Ok(vec![OutputFile {
        name: "partition.csv".into(),
        contents: out,
    }])
}

pub fn run_topology(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let spec = cfg.topology.spec();
    let fabric = Fabric::new(&spec, cfg.seed, cfg.trials)?;
    let mut out = header(cfg, "topology");
    let _ = writeln!(out, "topology,trial,switches,servers,links,nsr_min,nsr_mean,udf");
    let base_nsr = nsr(&fabric.base)?;
    let _ = writeln!(
        out,
        "base,0,{},{},{},{},{},{}",
        fabric.base.switch_count(),
        fabric.base.total_servers(),
        fabric.base.link_count(),
        base_nsr.min,
        base_nsr.mean,
        udf(&spec)?
    );
    let _ = writeln!(out, "ideal_rrg,0,,,,{},,", ideal_rrg_nsr(&fabric.base)?);
    for (i, (g, _)) in fabric.rrgs.iter().enumerate() {
        let r = nsr(g)?;
        let _ = writeln!(
            out,
            "rrg,{i},{},{},{},{},{},{}",
            g.switch_count(),
            g.total_servers(),
            g.link_count(),
            r.min,
            r.mean,
            r.min / base_nsr.min
        );
    }
    Ok(vec![OutputFile {
        name: "topology.csv".into(),
        contents: out,
    }])
}

pub fn run_experiment(cfg: &ExperimentConfig, name: ExperimentName) -> Result<Vec<OutputFile>> {
    match name {
        ExperimentName::Topology => run_topology(cfg),
        ExperimentName::CsHeatmap => run_cs_heatmap(cfg),
        ExperimentName::Scale => run_scale(cfg),
        ExperimentName::Burst => run_burst(cfg),
        ExperimentName::TraceSweep => run_trace_sweep(cfg),
        ExperimentName::FailureLoss => run_failure_loss(cfg),
        ExperimentName::Expressibility => run_expressibility(cfg),
        ExperimentName::Partition => run_partition(cfg),
    }
}

/// Writes files into `dir`, creating it if needed, and returns their paths.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents)?;
            Ok(path)
        })
        .collect()
}
