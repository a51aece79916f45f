//! Random d-regular multigraph models and small-instance enumeration.
//!
//! Vertices are 0-based. Adjacency matrices are dense and row-major; a loop at
//! `i` contributes 2 to `A[i][i]`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // inherent float methods shadow it once std is linked
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{bail, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Uniform,
    Permutation,
    Matching,
    Configuration,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Uniform,
        ModelKind::Permutation,
        ModelKind::Matching,
        ModelKind::Configuration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Uniform => "uniform",
            ModelKind::Permutation => "permutation",
            ModelKind::Matching => "matching",
            ModelKind::Configuration => "configuration",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Parity and range constraints on `(n, d)`.
    pub fn check_parameters(self, n: usize, d: usize) -> Result<()> {
        if n == 0 || d == 0 {
            bail!(InvalidParameter, "n and d must be positive (n={n}, d={d})");
        }
        match self {
            ModelKind::Permutation if !d.is_multiple_of(2) => {
                bail!(Parity, "permutation model needs even d (d={d})")
            }
            ModelKind::Matching if !n.is_multiple_of(2) => {
                bail!(Parity, "matching model needs even n (n={n})")
            }
            ModelKind::Configuration | ModelKind::Uniform if !(n * d).is_multiple_of(2) => {
                bail!(Parity, "n*d must be even (n={n}, d={d})")
            }
            ModelKind::Uniform if d >= n => {
                bail!(InvalidParameter, "simple d-regular graphs need d < n (n={n}, d={d})")
            }
            _ => Ok(()),
        }
    }

    /// The regime parameter `D`.
    pub fn regime_d(self, n: usize, d: usize) -> f64 {
        let (n, d) = (n as f64, d as f64);
        match self {
            ModelKind::Uniform => d.min(n * n / (d * d * d)),
            _ => d.min(n * n / d),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dense symmetric adjacency matrix of a d-regular multigraph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiGraph {
    n: usize,
    degree: usize,
    adj: Vec<u32>,
}

impl fmt::Debug for MultiGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiGraph")
            .field("n", &self.n)
            .field("degree", &self.degree)
            .field("edges", &self.edges())
            .finish()
    }
}

impl MultiGraph {
    /// Validates symmetry, even diagonal and regularity.
    pub fn from_adjacency(n: usize, adj: Vec<u32>) -> Result<MultiGraph> {
        if adj.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: adj.len() });
        }
        let mut degree = None;
        for i in 0..n {
            if !adj[i * n + i].is_multiple_of(2) {
                bail!(InvalidParameter, "odd diagonal entry at vertex {i}");
            }
            let mut row = 0usize;
            for j in 0..n {
                if adj[i * n + j] != adj[j * n + i] {
                    bail!(InvalidParameter, "adjacency not symmetric at ({i},{j})");
                }
                row += adj[i * n + j] as usize;
            }
            match degree {
                None => degree = Some(row),
                Some(d) if d != row => {
                    bail!(InvalidParameter, "vertex {i} has degree {row}, expected {d}")
                }
                _ => {}
            }
        }
        Ok(MultiGraph { n, degree: degree.unwrap_or(0), adj })
    }

    /// Builds from an edge list; a loop `(i, i)` adds 2 to the diagonal.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<MultiGraph> {
        let mut adj = vec![0u32; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                bail!(InvalidParameter, "edge ({i},{j}) out of range for n={n}");
            }
            adj[i * n + j] += 1;
            adj[j * n + i] += 1;
        }
        MultiGraph::from_adjacency(n, adj)
    }

    pub(crate) fn from_parts_unchecked(n: usize, degree: usize, adj: Vec<u32>) -> MultiGraph {
        MultiGraph { n, degree, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.adj[i * self.n + j]
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.adj
    }

    /// Whether `{i, j}` is present; a loop needs `A[i][i] >= 2`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            self.get(i, i) >= 2
        } else {
            self.get(i, j) >= 1
        }
    }

    pub fn is_simple(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i) == 0 && (0..self.n).all(|j| self.get(i, j) <= 1)
        })
    }

    /// `(i, j, multiplicity)` with `i <= j`; loops report `A[i][i] / 2`.
    pub fn edges(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let m = if i == j { self.get(i, i) / 2 } else { self.get(i, j) };
                if m > 0 {
                    out.push((i, j, m));
                }
            }
        }
        out
    }

    /// Neighbours of `i` in increasing order, without multiplicity.
    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.get(i, j) > 0).collect()
    }

    pub(crate) fn add_pair(&mut self, i: usize, j: usize) {
        let n = self.n;
        self.adj[i * n + j] += 1;
        self.adj[j * n + i] += 1;
    }

    pub(crate) fn remove_pair(&mut self, i: usize, j: usize) {
        let n = self.n;
        self.adj[i * n + j] -= 1;
        self.adj[j * n + i] -= 1;
    }
}

/// A perfect matching, stored as a fixed-point-free involution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    partner: Vec<usize>,
}

impl Matching {
    pub fn new(partner: Vec<usize>) -> Result<Matching> {
        let n = partner.len();
        for (i, &p) in partner.iter().enumerate() {
            if p >= n || p == i || partner[p] != i {
                bail!(InvalidParameter, "not a fixed-point-free involution at {i}");
            }
        }
        Ok(Matching { partner })
    }

    /// Builds from disjoint pairs covering `0..n`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Matching> {
        let mut partner = vec![usize::MAX; n];
        for &(a, b) in pairs {
            if a >= n || b >= n || partner[a] != usize::MAX || partner[b] != usize::MAX {
                bail!(InvalidParameter, "pairs do not form a matching");
            }
            partner[a] = b;
            partner[b] = a;
        }
        Matching::new(partner)
    }

    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Matching> {
        if !n.is_multiple_of(2) {
            bail!(Parity, "perfect matchings need even n (n={n})");
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut partner = vec![0; n];
        for pair in order.chunks_exact(2) {
            partner[pair[0]] = pair[1];
            partner[pair[1]] = pair[0];
        }
        Ok(Matching { partner })
    }

    pub fn n(&self) -> usize {
        self.partner.len()
    }

    #[inline]
    pub fn partner(&self, i: usize) -> usize {
        self.partner[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.partner
    }

    /// Pairs `(i, partner)` with `i < partner`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .filter(|&i| i < self.partner[i])
            .map(|i| (i, self.partner[i]))
            .collect()
    }

    pub(crate) fn set_pair(&mut self, a: usize, b: usize) {
        self.partner[a] = b;
        self.partner[b] = a;
    }
}

/// All perfect matchings of `0..n` in lexicographic order of their pair lists.
pub fn enumerate_matchings(n: usize) -> Result<Vec<Matching>> {
    if !n.is_multiple_of(2) {
        bail!(Parity, "perfect matchings need even n (n={n})");
    }
    if n > 12 {
        bail!(TooLarge, "matching enumeration limited to n <= 12 (n={n})");
    }
    fn rec(partner: &mut Vec<usize>, out: &mut Vec<Matching>) {
        let Some(i) = partner.iter().position(|&p| p == usize::MAX) else {
            out.push(Matching { partner: partner.clone() });
            return;
        };
        for j in i + 1..partner.len() {
            if partner[j] == usize::MAX {
                partner[i] = j;
                partner[j] = i;
                rec(partner, out);
                partner[i] = usize::MAX;
                partner[j] = usize::MAX;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![usize::MAX; n], &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Permutation> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &x in &map {
            if x >= n || seen[x] {
                bail!(InvalidParameter, "not a permutation of 0..{n}");
            }
            seen[x] = true;
        }
        Ok(Permutation { map })
    }

    pub fn identity(n: usize) -> Permutation {
        Permutation { map: (0..n).collect() }
    }

    /// The transposition of `a` and `b` (identity when `a == b`).
    pub fn transposition(n: usize, a: usize, b: usize) -> Permutation {
        let mut p = Permutation::identity(n);
        p.map.swap(a, b);
        p
    }

    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { map: inv }
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { map: other.map.iter().map(|&x| self.map[x]).collect() }
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn enumerate_permutations(n: usize) -> Result<Vec<Permutation>> {
    if n > 9 {
        bail!(TooLarge, "permutation enumeration limited to n <= 9 (n={n})");
    }
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![Permutation { map: cur.clone() }];
    // next lexicographic permutation
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return Ok(out);
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(Permutation { map: cur.clone() });
    }
}

/// Sum of `P(σ) + P(σ)ᵀ` style contributions for the permutation model.
pub fn permutation_model_graph(n: usize, perms: &[Permutation]) -> Result<MultiGraph> {
    let mut adj = vec![0u32; n * n];
    for p in perms {
        if p.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.n() });
        }
        for i in 0..n {
            let j = p.apply(i);
            adj[i * n + j] += 1;
            adj[j * n + i] += 1;
        }
    }
    Ok(MultiGraph::from_parts_unchecked(n, 2 * perms.len(), adj))
}

pub fn matching_model_graph(n: usize, matchings: &[Matching]) -> Result<MultiGraph> {
    let mut adj = vec![0u32; n * n];
    for m in matchings {
        if m.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.n() });
        }
        for i in 0..n {
            adj[i * n + m.partner(i)] += 1;
        }
    }
    Ok(MultiGraph::from_parts_unchecked(n, matchings.len(), adj))
}

pub fn sample_permutation_model<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<MultiGraph> {
    ModelKind::Permutation.check_parameters(n, d)?;
    let perms: Vec<Permutation> = (0..d / 2).map(|_| Permutation::uniform(n, rng)).collect();
    permutation_model_graph(n, &perms)
}

pub fn sample_matching_model<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<MultiGraph> {
    ModelKind::Matching.check_parameters(n, d)?;
    let ms = (0..d).map(|_| Matching::uniform(n, rng)).collect::<Result<Vec<_>>>()?;
    matching_model_graph(n, &ms)
}

pub fn sample_configuration_model<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<MultiGraph> {
    ModelKind::Configuration.check_parameters(n, d)?;
    let mut half: Vec<usize> = (0..n * d).map(|h| h / d).collect();
    half.shuffle(rng);
    let mut adj = vec![0u32; n * n];
    for pair in half.chunks_exact(2) {
        adj[pair[0] * n + pair[1]] += 1;
        adj[pair[1] * n + pair[0]] += 1;
    }
    Ok(MultiGraph::from_parts_unchecked(n, d, adj))
}

/// How to draw from the uniform simple d-regular model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UniformMethod {
    /// Rejection when it is cheap, switching chain otherwise.
    Auto,
    /// Configuration model conditioned on simplicity.
    Rejection { max_tries: u64 },
    /// Double-switching Markov chain from a circulant start; `None` means
    /// the default burn-in of `10·n·d` proposals.
    SwitchingChain { moves: Option<u64> },
}

pub const DEFAULT_REJECTION_BUDGET: u64 = 100_000;

impl UniformMethod {
    /// Resolves `Auto`: rejection when `d <= 2 ln n` and the expected number
    /// of tries `exp((d²-1)/4)` fits the budget.
    pub fn resolve(self, n: usize, d: usize) -> UniformMethod {
        match self {
            UniformMethod::Auto => {
                let df = d as f64;
                let cheap = (df * df - 1.0) / 4.0 <= (DEFAULT_REJECTION_BUDGET as f64).ln();
                if df <= 2.0 * (n as f64).ln() && cheap {
                    UniformMethod::Rejection { max_tries: DEFAULT_REJECTION_BUDGET }
                } else {
                    UniformMethod::SwitchingChain { moves: None }
                }
            }
            m => m,
        }
    }
}

pub fn sample_uniform<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    method: UniformMethod,
    rng: &mut R,
) -> Result<MultiGraph> {
    ModelKind::Uniform.check_parameters(n, d)?;
    match method.resolve(n, d) {
        UniformMethod::Rejection { max_tries } => sample_uniform_rejection(n, d, max_tries, rng),
        UniformMethod::SwitchingChain { moves } => {
            let moves = moves.unwrap_or(10 * (n as u64) * (d as u64));
            let mut chain = SwitchingChain::circulant(n, d)?;
            for _ in 0..moves {
                chain.step(rng);
            }
            Ok(chain.into_graph())
        }
        UniformMethod::Auto => unreachable!(),
    }
}

fn sample_uniform_rejection<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    max_tries: u64,
    rng: &mut R,
) -> Result<MultiGraph> {
    let mut half: Vec<usize> = (0..n * d).map(|h| h / d).collect();
    let mut nbr = vec![0usize; n * d];
    let mut fill = vec![0usize; n];
    'tries: for _ in 0..max_tries {
        half.shuffle(rng);
        fill.iter_mut().for_each(|f| *f = 0);
        for pair in half.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || nbr[u * d..u * d + fill[u]].contains(&v) {
                continue 'tries;
            }
            nbr[u * d + fill[u]] = v;
            fill[u] += 1;
            nbr[v * d + fill[v]] = u;
            fill[v] += 1;
        }
        let mut adj = vec![0u32; n * n];
        for u in 0..n {
            for &v in &nbr[u * d..u * d + d] {
                adj[u * n + v] = 1;
            }
        }
        return Ok(MultiGraph::from_parts_unchecked(n, d, adj));
    }
    Err(Error::BudgetExceeded { tries: max_tries })
}

/// Simple d-regular circulant graph: offsets `1..=d/2`, plus `n/2` when `d` is odd.
pub fn circulant(n: usize, d: usize) -> Result<MultiGraph> {
    ModelKind::Uniform.check_parameters(n, d)?;
    let mut edges = Vec::with_capacity(n * d / 2);
    for i in 0..n {
        for k in 1..=d / 2 {
            edges.push((i, (i + k) % n));
        }
        if d % 2 == 1 && i < n / 2 {
            edges.push((i, i + n / 2));
        }
    }
    MultiGraph::from_edges(n, &edges)
}

/// Double-switching chain on simple d-regular graphs.
///
/// A proposal picks three edges uniformly with replacement and an orientation
/// for each, giving `(r, r̄), (a, ā), (b, b̄)`. It replaces them by
/// `{r̄, a}, {ā, b}, {b̄, r}` when the six endpoints are distinct and the new
/// graph is simple. The proposal is symmetric, so the uniform law is stationary.
#[derive(Debug, Clone)]
pub struct SwitchingChain {
    graph: MultiGraph,
    edges: Vec<(usize, usize)>,
}

impl SwitchingChain {
    pub fn new(graph: MultiGraph) -> Result<SwitchingChain> {
        if !graph.is_simple() {
            bail!(InvalidParameter, "switching chain needs a simple start");
        }
        let edges = graph.edges().into_iter().map(|(i, j, _)| (i, j)).collect();
        Ok(SwitchingChain { graph, edges })
    }

    pub fn circulant(n: usize, d: usize) -> Result<SwitchingChain> {
        SwitchingChain::new(circulant(n, d)?)
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn into_graph(self) -> MultiGraph {
        self.graph
    }

    /// Number of distinct proposals, `m³·8` for `m` edges.
    pub fn proposal_count(&self) -> u64 {
        let m = self.edges.len() as u64;
        m * m * m * 8
    }

    /// Applies proposal `(k, orient)` with `k` the three edge slots and bit `t`
    /// of `orient` flipping edge `t`. Returns whether the move was accepted.
    pub fn apply_proposal(&mut self, k: [usize; 3], orient: u8) -> bool {
        let pick = |t: usize| {
            let (u, v) = self.edges[k[t]];
            if orient >> t & 1 == 1 { (v, u) } else { (u, v) }
        };
        let (r, rb) = pick(0);
        let (a, ab) = pick(1);
        let (b, bb) = pick(2);
        let vs = [r, rb, a, ab, b, bb];
        for x in 0..6 {
            for y in x + 1..6 {
                if vs[x] == vs[y] {
                    return false;
                }
            }
        }
        let g = &self.graph;
        if g.get(rb, a) > 0 || g.get(ab, b) > 0 || g.get(bb, r) > 0 {
            return false;
        }
        let g = &mut self.graph;
        g.remove_pair(r, rb);
        g.remove_pair(a, ab);
        g.remove_pair(b, bb);
        g.add_pair(rb, a);
        g.add_pair(ab, b);
        g.add_pair(bb, r);
        self.edges[k[0]] = (a, rb);
        self.edges[k[1]] = (r, bb);
        self.edges[k[2]] = (b, ab);
        true
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let m = self.edges.len();
        let k = [rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m)];
        let orient = rng.gen_range(0..8u8);
        self.apply_proposal(k, orient)
    }
}

/// Draws from `model` with default settings.
pub fn sample<R: Rng + ?Sized>(model: ModelKind, n: usize, d: usize, rng: &mut R) -> Result<MultiGraph> {
    match model {
        ModelKind::Uniform => sample_uniform(n, d, UniformMethod::Auto, rng),
        ModelKind::Permutation => sample_permutation_model(n, d, rng),
        ModelKind::Matching => sample_matching_model(n, d, rng),
        ModelKind::Configuration => sample_configuration_model(n, d, rng),
    }
}

/// Every simple d-regular graph on `0..n` (n <= 10), lexicographic by
/// neighbourhood choice.
pub fn enumerate_simple_regular(n: usize, d: usize) -> Result<Vec<MultiGraph>> {
    ModelKind::Uniform.check_parameters(n, d)?;
    if n > 10 {
        bail!(TooLarge, "enumeration limited to n <= 10 (n={n})");
    }
    struct Ctx {
        n: usize,
        d: usize,
        deg: Vec<usize>,
        adj: Vec<u32>,
        out: Vec<MultiGraph>,
    }
    // fill vertex i's remaining neighbours from candidates j > i
    fn vertex(c: &mut Ctx, i: usize) {
        if i == c.n {
            c.out.push(MultiGraph::from_parts_unchecked(c.n, c.d, c.adj.clone()));
            return;
        }
        let need = c.d - c.deg[i];
        pick(c, i, i + 1, need);
    }
    fn pick(c: &mut Ctx, i: usize, from: usize, need: usize) {
        if need == 0 {
            vertex(c, i + 1);
            return;
        }
        for j in from..c.n {
            if c.n - j < need {
                break;
            }
            if c.deg[j] < c.d {
                c.deg[i] += 1;
                c.deg[j] += 1;
                c.adj[i * c.n + j] = 1;
                c.adj[j * c.n + i] = 1;
                pick(c, i, j + 1, need - 1);
                c.deg[i] -= 1;
                c.deg[j] -= 1;
                c.adj[i * c.n + j] = 0;
                c.adj[j * c.n + i] = 0;
            }
        }
    }
    let mut c = Ctx { n, d, deg: vec![0; n], adj: vec![0; n * n], out: Vec::new() };
    vertex(&mut c, 0);
    Ok(c.out)
}
