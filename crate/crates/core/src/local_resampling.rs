//! Switching operators and the local resampling maps around vertex 0.
//!
//! The distinguished vertex is `0` (vertex "1" in one-based notation), and
//! `1` plays the role of vertex "2" in the permutation-model map.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{bail, Error, Result};
use crate::graph_models::{matching_model_graph, Matching, MultiGraph, Permutation};
use crate::linalg::ComplexLu;
use crate::spectral_core::Hamiltonian;

/// A signed symmetric integer matrix, the increment `Δ_ij` and sums of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyDelta {
    n: usize,
    entries: Vec<i32>,
}

impl AdjacencyDelta {
    pub fn zero(n: usize) -> AdjacencyDelta {
        AdjacencyDelta { n, entries: vec![0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, l: usize) -> i32 {
        self.entries[k * self.n + l]
    }

    pub fn add_scaled(&mut self, other: &AdjacencyDelta, c: i32) {
        for (x, y) in self.entries.iter_mut().zip(&other.entries) {
            *x += c * y;
        }
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|&&x| x != 0).count()
    }

    /// `A + self`, failing if an entry would become negative.
    pub fn apply(&self, a: &MultiGraph) -> Result<MultiGraph> {
        if a.n() != self.n {
            return Err(Error::DimensionMismatch { expected: a.n(), got: self.n });
        }
        let mut adj = Vec::with_capacity(self.n * self.n);
        for (&x, &dx) in a.adjacency().iter().zip(&self.entries) {
            let y = x as i64 + dx as i64;
            if y < 0 {
                bail!(InvalidMove, "increment removes a missing edge");
            }
            adj.push(y as u32);
        }
        MultiGraph::from_adjacency(self.n, adj)
    }
}

/// `(Δ_ij)_kl = δ_ik δ_jl + δ_il δ_jk`.
pub fn delta(i: usize, j: usize, n: usize) -> Result<AdjacencyDelta> {
    if i >= n || j >= n {
        bail!(InvalidParameter, "delta({i},{j}) out of range for n={n}");
    }
    let mut d = AdjacencyDelta::zero(n);
    d.entries[i * n + j] += 1;
    d.entries[j * n + i] += 1;
    Ok(d)
}

/// Difference `after - before` of two adjacency matrices.
pub fn adjacency_difference(before: &MultiGraph, after: &MultiGraph) -> Result<AdjacencyDelta> {
    if before.n() != after.n() {
        return Err(Error::DimensionMismatch { expected: before.n(), got: after.n() });
    }
    let entries = before
        .adjacency()
        .iter()
        .zip(after.adjacency())
        .map(|(&x, &y)| y as i32 - x as i32)
        .collect();
    Ok(AdjacencyDelta { n: before.n(), entries })
}

/// Number of nonzero entries of `Ã - A`.
pub fn switch_footprint(before: &MultiGraph, after: &MultiGraph) -> Result<usize> {
    Ok(adjacency_difference(before, after)?.nonzero_count())
}

fn require_edge(a: &MultiGraph, (u, v): (usize, usize)) -> Result<()> {
    if u >= a.n() || v >= a.n() || !a.has_edge(u, v) {
        bail!(InvalidMove, "({u},{v}) is not an edge");
    }
    Ok(())
}

fn all_distinct(vs: &[usize]) -> bool {
    (0..vs.len()).all(|x| (x + 1..vs.len()).all(|y| vs[x] != vs[y]))
}

/// Single switching `τ_{rr̄,aā}`: replaces `{r,r̄},{a,ā}` by `{r̄,a},{r,ā}`.
pub fn single_switch(
    a: &MultiGraph,
    (r, rb): (usize, usize),
    (x, xb): (usize, usize),
) -> Result<MultiGraph> {
    require_edge(a, (r, rb))?;
    require_edge(a, (x, xb))?;
    let mut out = a.clone();
    if all_distinct(&[r, rb, x, xb]) {
        out.remove_pair(r, rb);
        out.remove_pair(x, xb);
        out.add_pair(rb, x);
        out.add_pair(r, xb);
    }
    Ok(out)
}

/// Double switching `τ_{rr̄,aā,bb̄}`: replaces `{r,r̄},{a,ā},{b,b̄}` by
/// `{r̄,a},{ā,b},{b̄,r}`.
pub fn double_switch(
    g: &MultiGraph,
    (r, rb): (usize, usize),
    (a, ab): (usize, usize),
    (b, bb): (usize, usize),
) -> Result<MultiGraph> {
    require_edge(g, (r, rb))?;
    require_edge(g, (a, ab))?;
    require_edge(g, (b, bb))?;
    let mut out = g.clone();
    if all_distinct(&[r, rb, a, ab, b, bb]) {
        out.remove_pair(r, rb);
        out.remove_pair(a, ab);
        out.remove_pair(b, bb);
        out.add_pair(rb, a);
        out.add_pair(ab, b);
        out.add_pair(bb, r);
    }
    Ok(out)
}

/// `T_ijk(π)`, defined by `M(T(π)) = τ_{π(i)i, jπ(j), kπ(k)}(M(π))`.
pub fn mm_switch(pi: &Matching, i: usize, j: usize, k: usize) -> Result<Matching> {
    let n = pi.n();
    if i >= n || j >= n || k >= n {
        bail!(InvalidParameter, "mm_switch index out of range for n={n}");
    }
    let (pi_i, pi_j, pi_k) = (pi.partner(i), pi.partner(j), pi.partner(k));
    let mut out = pi.clone();
    if all_distinct(&[i, j, k, pi_i, pi_j, pi_k]) {
        out.set_pair(i, j);
        out.set_pair(pi_j, k);
        out.set_pair(pi_k, pi_i);
    }
    Ok(out)
}

/// Draws `a, b` uniformly from `1..n` and returns `(T_{0ab}(π), a, b)`.
pub fn mm_resample<R: Rng + ?Sized>(pi: &Matching, rng: &mut R) -> Result<(Matching, usize, usize)> {
    let n = pi.n();
    if n < 2 {
        bail!(InvalidParameter, "mm_resample needs n >= 2");
    }
    let a = rng.gen_range(1..n);
    let b = rng.gen_range(1..n);
    Ok((mm_switch(pi, 0, a, b)?, a, b))
}

/// Per-coordinate result of resampling the neighbourhood of vertex 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleOutcome {
    pub graph: MultiGraph,
    /// Target neighbour `a_μ`.
    pub a: Vec<usize>,
    /// Realized neighbour `α_μ`.
    pub alpha: Vec<usize>,
    pub switched: Vec<bool>,
}

/// Resamples every matching of a matching-model sample with `mm_resample`.
pub fn mm_resample_all<R: Rng + ?Sized>(
    matchings: &[Matching],
    rng: &mut R,
) -> Result<(Vec<Matching>, ResampleOutcome)> {
    let n = matchings.first().map_or(0, Matching::n);
    let mut next = Vec::with_capacity(matchings.len());
    let (mut a_out, mut alpha, mut switched) = (Vec::new(), Vec::new(), Vec::new());
    for pi in matchings {
        let (t, a, b) = mm_resample(pi, rng)?;
        switched.push(all_distinct(&[0, a, b, pi.partner(0), pi.partner(a), pi.partner(b)]));
        a_out.push(a);
        alpha.push(t.partner(0));
        next.push(t);
    }
    let graph = matching_model_graph(n, &next)?;
    Ok((next, ResampleOutcome { graph, a: a_out, alpha, switched }))
}

/// Exact one-step law of `mm_resample` from the uniform distribution on
/// perfect matchings: counts over all `(π, a, b)`, keyed by the output.
pub fn mm_exact_step_counts(n: usize) -> Result<BTreeMap<Matching, u64>> {
    let all = crate::graph_models::enumerate_matchings(n)?;
    let mut counts = BTreeMap::new();
    for pi in &all {
        for a in 1..n {
            for b in 1..n {
                *counts.entry(mm_switch(pi, 0, a, b)?).or_insert(0) += 1;
            }
        }
    }
    Ok(counts)
}

/// `γ_{2b+} γ_{2a+} π γ_{2a−} γ_{2b−}` (one-based), for `π` fixing the
/// transposition of vertices 0 and 1.
pub fn pm_switch(
    pi: &Permutation,
    a_plus: usize,
    a_minus: usize,
    b_plus: usize,
    b_minus: usize,
) -> Result<Permutation> {
    let n = pi.n();
    if n < 2 || pi.apply(0) != 1 || pi.apply(1) != 0 {
        bail!(InvalidMove, "pm_switch needs π(0) = 1 and π(1) = 0");
    }
    if a_plus >= n || [a_minus, b_plus, b_minus].iter().any(|&x| x == 0 || x >= n) {
        bail!(InvalidParameter, "pm_switch index out of range");
    }
    let g = |x| Permutation::transposition(n, 1, x);
    Ok(g(b_plus)
        .compose(&g(a_plus))
        .compose(pi)
        .compose(&g(a_minus))
        .compose(&g(b_minus)))
}

/// Exact law of `pm_switch` over all admissible inputs, keyed by the output.
pub fn pm_exact_step_counts(n: usize) -> Result<BTreeMap<Permutation, u64>> {
    if n < 2 {
        bail!(InvalidParameter, "pm_switch needs n >= 2");
    }
    let rest = crate::graph_models::enumerate_permutations(n - 2)?;
    let mut counts = BTreeMap::new();
    for p in &rest {
        let mut map = vec![1, 0];
        map.extend(p.as_slice().iter().map(|&x| x + 2));
        let pi = Permutation::new(map)?;
        for ap in 0..n {
            for am in 1..n {
                for bp in 1..n {
                    for bm in 1..n {
                        *counts.entry(pm_switch(&pi, ap, am, bp, bm)?).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    Ok(counts)
}

/// An undirected edge, smaller endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(u: usize, v: usize) -> Edge {
        if u <= v { Edge(u, v) } else { Edge(v, u) }
    }

    fn touches(self, x: usize) -> bool {
        self.0 == x || self.1 == x
    }

    fn other(self, x: usize) -> usize {
        if self.0 == x { self.1 } else { self.0 }
    }
}

/// Edges at vertex 0 sorted by the neighbour, `e_1, …, e_d`.
pub fn edges_at_root(e: &MultiGraph) -> Vec<Edge> {
    e.neighbours(0).into_iter().map(|r| Edge::new(0, r)).collect()
}

/// Edges of `E` not incident to vertex 0; the pool for `p, q` in `S_μ`.
pub fn edges_off_root(e: &MultiGraph) -> Vec<Edge> {
    e.edges()
        .into_iter()
        .filter(|&(u, _, _)| u != 0)
        .map(|(u, v, _)| Edge(u, v))
        .collect()
}

/// Per-μ triples `S_μ = {e_μ, p_μ, q_μ}` and switch indices `s_μ ∈ 1..=8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSelection {
    pub pq: Vec<(Edge, Edge)>,
    pub s: Vec<u8>,
}

impl TripleSelection {
    /// The `(a, b)` pair of switch index `s` for the ordered edges `p, q`.
    pub fn ab_for(p: Edge, q: Edge, s: u8) -> (usize, usize) {
        let (p, q) = order_pq(p, q);
        match s {
            1 => (p.0, q.0),
            2 => (p.0, q.1),
            3 => (p.1, q.0),
            4 => (p.1, q.1),
            5 => (q.0, p.0),
            6 => (q.0, p.1),
            7 => (q.1, p.0),
            _ => (q.1, p.1),
        }
    }
}

fn order_pq(p: Edge, q: Edge) -> (Edge, Edge) {
    if p <= q { (p, q) } else { (q, p) }
}

/// `I(E, S)`: `[S]` has six vertices and `E` restricted to `[S]` is `S`.
pub fn um_switchable(e: &MultiGraph, s: [Edge; 3]) -> Result<bool> {
    for x in s {
        require_edge(e, (x.0, x.1))?;
    }
    let vs = [s[0].0, s[0].1, s[1].0, s[1].1, s[2].0, s[2].1];
    if !all_distinct(&vs) {
        return Ok(false);
    }
    let mut inside = 0;
    for x in 0..6 {
        for y in x + 1..6 {
            inside += e.get(vs[x], vs[y]);
        }
    }
    Ok(inside == 3)
}

/// What a selection does to `E`, before choosing the switch indices.
struct SwitchPlan {
    roots: Vec<Edge>,
    pq: Vec<(Edge, Edge)>,
    in_w: Vec<bool>,
}

fn plan(e: &MultiGraph, pq: &[(Edge, Edge)]) -> Result<SwitchPlan> {
    let roots = edges_at_root(e);
    let d = roots.len();
    if pq.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: pq.len() });
    }
    let mut switchable = Vec::with_capacity(d);
    for (mu, &(p, q)) in pq.iter().enumerate() {
        let (p, q) = (Edge::new(p.0, p.1), Edge::new(q.0, q.1));
        if p == q || p.touches(0) || q.touches(0) {
            bail!(InvalidMove, "S_{mu} must hold e_{mu} and two other edges off vertex 0");
        }
        switchable.push(um_switchable(e, [roots[mu], p, q])?);
    }
    let verts = |mu: usize| {
        let (p, q) = pq[mu];
        [roots[mu].1, p.0, p.1, q.0, q.1]
    };
    let in_w = (0..d)
        .map(|mu| {
            switchable[mu]
                && (0..d).all(|nu| {
                    nu == mu || {
                        let vn = verts(nu);
                        verts(mu).iter().all(|x| !vn.contains(x))
                    }
                })
        })
        .collect();
    Ok(SwitchPlan { roots, pq: pq.to_vec(), in_w })
}

/// The three removed and three added edges of `T_{S,s}`.
fn switch_edges(root: Edge, p: Edge, q: Edge, s: u8) -> ([Edge; 3], [Edge; 3]) {
    let r = root.other(0);
    let (a, b) = TripleSelection::ab_for(p, q, s);
    let edge_of = |x: usize| if p.touches(x) { p } else { q };
    let (ab, bb) = (edge_of(a).other(a), edge_of(b).other(b));
    ([root, p, q], [Edge::new(0, a), Edge::new(ab, b), Edge::new(bb, r)])
}

/// Applies `T_{S_μ, s_μ}` for every `μ ∈ W`.
pub fn um_simultaneous_switch(e: &MultiGraph, sel: &TripleSelection) -> Result<ResampleOutcome> {
    if !e.is_simple() {
        bail!(InvalidParameter, "uniform-model switching needs a simple graph");
    }
    if sel.s.len() != sel.pq.len() || sel.s.iter().any(|&s| !(1..=8).contains(&s)) {
        bail!(InvalidSelection, "switch indices must lie in 1..=8, one per edge at vertex 0");
    }
    let pl = plan(e, &sel.pq)?;
    let mut graph = e.clone();
    let (mut a_out, mut alpha) = (Vec::new(), Vec::new());
    for (mu, &(p, q)) in pl.pq.iter().enumerate() {
        let (a, _) = TripleSelection::ab_for(p, q, sel.s[mu]);
        a_out.push(a);
        if pl.in_w[mu] {
            let (old, new) = switch_edges(pl.roots[mu], p, q, sel.s[mu]);
            for x in old {
                graph.remove_pair(x.0, x.1);
            }
            for x in new {
                graph.add_pair(x.0, x.1);
            }
            alpha.push(a);
        } else {
            alpha.push(pl.roots[mu].1);
        }
    }
    Ok(ResampleOutcome { graph, a: a_out, alpha, switched: pl.in_w })
}

/// Draws `(S, s)` uniformly from `𝒮_1(E) × … × 𝒮_d(E) × [1,8]^d`.
pub fn um_draw_selection<R: Rng + ?Sized>(e: &MultiGraph, rng: &mut R) -> Result<TripleSelection> {
    let pool = edges_off_root(e);
    if pool.len() < 2 {
        bail!(InvalidParameter, "too few edges off vertex 0");
    }
    let d = e.degree();
    let mut pq = Vec::with_capacity(d);
    let mut s = Vec::with_capacity(d);
    for _ in 0..d {
        let i = rng.gen_range(0..pool.len());
        let mut j = rng.gen_range(0..pool.len() - 1);
        if j >= i {
            j += 1;
        }
        pq.push(order_pq(pool[i], pool[j]));
        s.push(rng.gen_range(1..=8u8));
    }
    Ok(TripleSelection { pq, s })
}

pub fn um_resample<R: Rng + ?Sized>(e: &MultiGraph, rng: &mut R) -> Result<ResampleOutcome> {
    let sel = um_draw_selection(e, rng)?;
    um_simultaneous_switch(e, &sel)
}

/// Bit set of the edges of a simple graph on at most 11 vertices.
pub fn edge_key(e: &MultiGraph) -> Result<u128> {
    let n = e.n();
    if n > 11 {
        bail!(TooLarge, "edge keys limited to n <= 11 (n={n})");
    }
    let mut key = 0u128;
    for (u, v, _) in e.edges() {
        key |= 1u128 << (u * n + v);
    }
    Ok(key)
}

/// Exact one-step law of `um_resample` from `E`: integer weights over all
/// `(S, s)` keyed by [`edge_key`] of the result. Weights sum to
/// `(|𝒮_μ(E)|·8)^d`.
pub fn um_exact_transitions(e: &MultiGraph) -> Result<BTreeMap<u128, u64>> {
    let n = e.n();
    let d = e.degree();
    let base = edge_key(e)?;
    let pool = edges_off_root(e);
    let mut pairs = Vec::new();
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            pairs.push((pool[i], pool[j]));
        }
    }
    if pairs.is_empty() {
        bail!(InvalidParameter, "need at least two edges off the root");
    }
    let bit = |x: Edge| 1u128 << (x.0 * n + x.1);
    let mut out = BTreeMap::new();
    let mut idx = vec![0usize; d];
    let mut pq = vec![pairs[0]; d];
    loop {
        for mu in 0..d {
            pq[mu] = pairs[idx[mu]];
        }
        let pl = plan(e, &pq)?;
        // toggle masks of the 8 switches for each μ in W
        let mut toggles: Vec<[u128; 8]> = Vec::new();
        for mu in 0..d {
            if pl.in_w[mu] {
                let mut t = [0u128; 8];
                for s in 1..=8u8 {
                    let (old, new) = switch_edges(pl.roots[mu], pq[mu].0, pq[mu].1, s);
                    for x in old.iter().chain(&new) {
                        t[s as usize - 1] ^= bit(*x);
                    }
                }
                toggles.push(t);
            }
        }
        let weight = 8u64.pow((d - toggles.len()) as u32);
        let combos = 8usize.pow(toggles.len() as u32);
        for c in 0..combos {
            let mut key = base;
            let mut rest = c;
            for t in &toggles {
                key ^= t[rest % 8];
                rest /= 8;
            }
            *out.entry(key).or_insert(0) += weight;
        }
        // odometer over the selection tuples
        let mut mu = 0;
        loop {
            if mu == d {
                return Ok(out);
            }
            idx[mu] += 1;
            if idx[mu] < pairs.len() {
                break;
            }
            idx[mu] = 0;
            mu += 1;
        }
    }
}

/// Rebuilds a graph from an [`edge_key`].
pub fn graph_from_key(n: usize, key: u128) -> Result<MultiGraph> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if key >> (u * n + v) & 1 == 1 {
                edges.push((u, v));
            }
        }
    }
    MultiGraph::from_edges(n, &edges)
}

/// `max |G̃_ij − G_ij|` over `pairs`, with both resolvents from LU solves.
pub fn resolvent_switch_delta(
    before: &Hamiltonian,
    after: &Hamiltonian,
    z: Complex64,
    pairs: &[(usize, usize)],
) -> Result<f64> {
    let n = before.n();
    if after.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: after.n() });
    }
    if z.im <= 0.0 {
        bail!(InvalidParameter, "resolvent needs Im z > 0");
    }
    if before.data() == after.data() {
        return Ok(0.0);
    }
    let lu0 = ComplexLu::shifted(before.data(), n, z)?;
    let lu1 = ComplexLu::shifted(after.data(), n, z)?;
    let mut cols: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut worst: f64 = 0.0;
    for &j in &cols {
        let g0 = lu0.column(j)?;
        let g1 = lu1.column(j)?;
        for &(i, jj) in pairs {
            if jj == j {
                worst = worst.max((g1[i] - g0[i]).norm());
            }
        }
    }
    Ok(worst)
}
