//! Traffic patterns: the C-S model and its incast/outcast presets, plus
//! rack-level traffic matrices expanded to server-level flows.

mod cs;
mod matrix;

use std::fmt::{self, Write as _};

pub use cs::{burst_preset, cs_pattern, BurstPreset, CsSpec, BURST_FLOW_BYTES};
pub use matrix::{
    expand_to_servers, load_rack_matrix, parse_rack_matrix, remap_busiest_packed, ExpandOptions, RackMatrix,
    TRACE_START_WINDOW,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowSize {
    Bytes(f64),
    /// Long-running flow with infinite data.
    Unbounded,
}

impl FlowSize {
    pub fn bytes(self) -> Option<f64> {
        match self {
            FlowSize::Bytes(b) => Some(b),
            FlowSize::Unbounded => None,
        }
    }

    /// Size for ranking; unbounded sorts above every finite size.
    pub fn volume(self) -> f64 {
        self.bytes().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for FlowSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowSize::Bytes(b) => write!(f, "{b}"),
            FlowSize::Unbounded => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub src: usize,
    pub dst: usize,
    pub size: FlowSize,
    /// Start time in seconds.
    pub start: f64,
}

/// Flows in a fixed order; a flow's id is its index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrafficPattern {
    pub flows: Vec<Flow>,
}

impl TrafficPattern {
    pub fn new(flows: Vec<Flow>) -> Self {
        TrafficPattern { flows }
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Sum of finite flow sizes.
    pub fn total_bytes(&self) -> f64 {
        self.flows.iter().filter_map(|f| f.size.bytes()).sum()
    }

    /// Returns a copy with every finite size multiplied by `factor`;
    /// flows that become zero-sized are dropped.
    pub fn scaled(&self, factor: f64) -> TrafficPattern {
        TrafficPattern {
            flows: self
                .flows
                .iter()
                .filter_map(|f| match f.size {
                    FlowSize::Bytes(b) if b * factor > 0.0 => Some(Flow {
                        size: FlowSize::Bytes(b * factor),
                        ..*f
                    }),
                    FlowSize::Bytes(_) => None,
                    FlowSize::Unbounded => Some(*f),
                })
                .collect(),
        }
    }
}

/// One line per flow: `src_server dst_server size_bytes|inf start_seconds`.
pub fn write_pattern_dump(p: &TrafficPattern) -> String {
    let mut out = String::new();
    for f in &p.flows {
        let _ = writeln!(out, "{} {} {} {}", f.src, f.dst, f.size, f.start);
    }
    out
}
