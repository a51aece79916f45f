//! Edge-list files: a header line `n d model seed`, then one line `i j mult`
//! per distinct edge with `i <= j` (0-based). A loop is listed once with its
//! loop count.

use regg_core::graph_models::{ModelKind, MultiGraph};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeListHeader {
    pub n: usize,
    pub d: usize,
    pub model: ModelKind,
    pub seed: u64,
}

pub fn write_edge_list(g: &MultiGraph, model: ModelKind, seed: u64) -> String {
    let mut out = format!("{} {} {} {}\n", g.n(), g.degree(), model.name(), seed);
    for (i, j, mult) in g.edges() {
        out.push_str(&format!("{i} {j} {mult}\n"));
    }
    out
}

fn bad(line: usize, what: &str) -> CliError {
    CliError::Format(format!("edge list line {line}: {what}"))
}

pub fn read_edge_list(text: &str) -> Result<(EdgeListHeader, MultiGraph), CliError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let h: Vec<&str> = head.split_whitespace().collect();
    if h.len() != 4 {
        return Err(bad(1, "header must be `n d model seed`"));
    }
    let num = |s: &str| s.parse::<u64>().map_err(|_| bad(1, "header field is not an integer"));
    let header = EdgeListHeader {
        n: num(h[0])? as usize,
        d: num(h[1])? as usize,
        model: ModelKind::parse(h[2]).ok_or_else(|| bad(1, "unknown model"))?,
        seed: num(h[3])?,
    };
    let n = header.n;
    let mut adj = vec![0u32; n * n];
    for (k, line) in lines {
        let f: Vec<u64> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(k + 1, "not an integer")))
            .collect::<Result<_, _>>()?;
        let [i, j, mult] = f[..] else { return Err(bad(k + 1, "expected `i j mult`")) };
        let (i, j, mult) = (i as usize, j as usize, mult as u32);
        if i >= n || j >= n {
            return Err(bad(k + 1, "vertex out of range"));
        }
        if i == j {
            adj[i * n + i] += 2 * mult;
        } else {
            adj[i * n + j] += mult;
            adj[j * n + i] += mult;
        }
    }
    let g = MultiGraph::from_adjacency(n, adj)?;
    if g.degree() != header.d {
        return Err(CliError::Format(format!("edge list is {}-regular, header says {}", g.degree(), header.d)));
    }
    Ok((header, g))
}
