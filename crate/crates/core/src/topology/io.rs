use std::fmt::Write as _;

use super::{Topology, TopologyKind};
use crate::error::{Error, Result};

/// Text form:
///
/// ```text
/// switches=<N>
/// <id> ports=<p> servers=<s>     (N lines)
/// <id_a> <id_b>                  (one line per link)
/// ```
pub fn export_topology(t: &Topology) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "switches={}", t.switch_count());
    for u in 0..t.switch_count() {
        let _ = writeln!(out, "{u} ports={} servers={}", t.ports(u), t.servers_at(u));
    }
    for &(a, b) in t.links() {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

/// Parses the [`export_topology`] format. The result has kind `Custom`.
pub fn import_topology(text: &str) -> Result<Topology> {
    let err = |line: usize, msg: String| Error::parse("<topology>", line, msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
    let n: usize = header
        .strip_prefix("switches=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(ln, format!("expected `switches=<N>`, got `{header}`")))?;

    let mut ports = Vec::with_capacity(n);
    let mut servers = Vec::with_capacity(n);
    for expect in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| err(ln + expect + 1, "missing switch line".into()))?;
        let mut it = line.split_whitespace();
        let id: Option<usize> = it.next().and_then(|v| v.parse().ok());
        let p = it.next().and_then(|v| v.strip_prefix("ports=")).and_then(|v| v.parse().ok());
        let s = it.next().and_then(|v| v.strip_prefix("servers=")).and_then(|v| v.parse().ok());
        match (id, p, s, it.next()) {
            (Some(id), Some(p), Some(s), None) if id == expect => {
                ports.push(p);
                servers.push(s);
            }
            _ => return Err(err(ln, format!("expected `{expect} ports=<p> servers=<s>`, got `{line}`"))),
        }
    }

    let mut links = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let a = it.next().and_then(|v| v.parse::<usize>().ok());
        let b = it.next().and_then(|v| v.parse::<usize>().ok());
        match (a, b, it.next()) {
            (Some(a), Some(b), None) => links.push((a, b)),
            _ => return Err(err(ln, format!("expected `<a> <b>`, got `{line}`"))),
        }
    }
    Topology::new(TopologyKind::Custom, ports, servers, links)
}
