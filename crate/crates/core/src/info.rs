//! Information layer: homophilous partner choice inside a mixed
//! neighbour/global interaction set, followed by single-trait copying.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::AgentState;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Slack for the floor/ceil of `(1 - γ)·k` and `γ·k`, so that grid values such
/// as γ = 0.3 do not pick up a spurious extra slot from rounding error.
const SIZE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoParams {
    /// Digital-media influence: share of the interaction set drawn globally.
    pub gamma: f64,
    /// Partisanship weight in the similarity.
    pub c: f64,
    /// Homophily exponent.
    pub h: f64,
    /// Opinion dimension, awareness included.
    pub n: usize,
    /// Stances per topic.
    pub m: usize,
    /// Number of parties.
    pub k: usize,
    /// Whether the awareness component counts towards similarity.
    pub similarity_includes_awareness: bool,
}

impl Default for InfoParams {
    fn default() -> Self {
        InfoParams {
            gamma: 0.5,
            c: 2.0,
            h: 32.0,
            n: 5,
            m: 3,
            k: 2,
            similarity_includes_awareness: true,
        }
    }
}

impl InfoParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("info.gamma", "must lie in [0, 1]"));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::config("info.c", "must be a nonnegative number"));
        }
        if !(self.h.is_finite() && self.h >= 0.0) {
            return Err(Error::config("info.h", "must be a nonnegative number"));
        }
        if !(2..=255).contains(&self.n) {
            return Err(Error::config("info.n", "must lie in 2..=255"));
        }
        if !(2..=255).contains(&self.m) {
            return Err(Error::config("info.m", "must lie in 2..=255"));
        }
        if !(2..=255).contains(&self.k) {
            return Err(Error::config("info.k", "must lie in 2..=255"));
        }
        Ok(())
    }

    /// Number of components that enter the similarity.
    #[inline]
    pub fn similarity_dims(&self) -> usize {
        if self.similarity_includes_awareness {
            self.n
        } else {
            self.n - 1
        }
    }
}

#[inline]
pub fn partisan_match(a: &AgentState, b: &AgentState) -> u8 {
    u8::from(a.party == b.party)
}

/// Whether component `l` (0-based, `l = n - 1` is awareness) agrees.
pub fn opinion_match(a: &AgentState, b: &AgentState, l: usize) -> Result<u8> {
    let n = a.opinion.len();
    if l >= n || b.opinion.len() != n {
        return Err(Error::Usage(format!("component index {l} out of range 0..{n}")));
    }
    Ok(u8::from(a.opinion.component(l) == b.opinion.component(l)))
}

/// Absolute similarity `(c·[same party] + #equal components) / (c + dims)`.
pub fn similarity(a: &AgentState, b: &AgentState, p: &InfoParams) -> f64 {
    let dims = p.similarity_dims();
    let matches = a.opinion.matches(&b.opinion, dims);
    let party = f64::from(partisan_match(a, b));
    (p.c * party + matches as f64) / (p.c + dims as f64)
}

/// Precomputed selection weights `similarity^h`.
///
/// The similarity takes only `2 (dims + 1)` distinct values, so the
/// exponentiation is done once per run instead of once per candidate.
#[derive(Debug, Clone)]
pub struct SimilarityKernel {
    dims: usize,
    /// Indexed by `same_party * (dims + 1) + matches`.
    weights: Vec<f64>,
}

impl SimilarityKernel {
    pub fn new(p: &InfoParams) -> Self {
        let dims = p.similarity_dims();
        let denom = p.c + dims as f64;
        let mut weights = Vec::with_capacity(2 * (dims + 1));
        for same in 0..2u8 {
            for matches in 0..=dims {
                let s = (p.c * f64::from(same) + matches as f64) / denom;
                // powf gives 0^0 = 1, so h = 0 weights every candidate equally.
                weights.push(s.powf(p.h));
            }
        }
        SimilarityKernel { dims, weights }
    }

    #[inline]
    pub fn weight(&self, a: &AgentState, b: &AgentState) -> f64 {
        let matches = a.opinion.matches(&b.opinion, self.dims);
        let same = usize::from(a.party == b.party);
        self.weights[same * (self.dims + 1) + matches]
    }
}

/// Sizes `(⌊(1-γ)k⌋, ⌈γk⌉)` of the neighbour and global draws.
pub fn interaction_set_sizes(degree: usize, gamma: f64) -> (usize, usize) {
    let k = degree as f64;
    let local = ((1.0 - gamma) * k + SIZE_SLACK).floor() as usize;
    let global = (gamma * k - SIZE_SLACK).ceil().max(0.0) as usize;
    (local.min(degree), global)
}

/// Fills `out` with the interaction set of node `i`: `⌊(1-γ)k_i⌋` distinct
/// neighbours followed by `⌈γk_i⌉` distinct nodes from `V \ {i}`. The two draws
/// are independent, so a node may appear twice. Returns `false` (and leaves
/// `out` empty) for an isolated node.
pub fn fill_interaction_set<R: Rng + ?Sized>(
    g: &Graph,
    i: usize,
    gamma: f64,
    rng: &mut R,
    out: &mut Vec<NodeId>,
) -> bool {
    out.clear();
    let neighbours = g.neighbors(i);
    let degree = neighbours.len();
    if degree == 0 {
        return false;
    }
    let (local, global) = interaction_set_sizes(degree, gamma);
    if local == degree {
        out.extend_from_slice(neighbours);
    } else if local > 0 {
        out.extend(index::sample(rng, degree, local).iter().map(|x| neighbours[x]));
    }
    if global > 0 {
        let others = g.node_count() - 1;
        let global = global.min(others);
        out.extend(index::sample(rng, others, global).iter().map(|x| {
            let x = if x >= i { x + 1 } else { x };
            x as NodeId
        }));
    }
    true
}

pub fn build_interaction_set<R: Rng + ?Sized>(
    g: &Graph,
    i: usize,
    gamma: f64,
    rng: &mut R,
) -> Option<Vec<NodeId>> {
    let mut out = Vec::new();
    fill_interaction_set(g, i, gamma, rng, &mut out).then_some(out)
}

/// Exact selection probabilities `δ_ij^h / Σ δ_ik^h` over `candidates`, or
/// `None` when every weight vanishes.
pub fn partner_probabilities(
    i: usize,
    candidates: &[NodeId],
    states: &[AgentState],
    kernel: &SimilarityKernel,
) -> Option<Vec<f64>> {
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&j| kernel.weight(&states[i], &states[j as usize]))
        .collect();
    let total: f64 = weights.iter().sum();
    (total > 0.0).then(|| weights.iter().map(|w| w / total).collect())
}

/// Draws an interaction partner for `i` with probability proportional to
/// `similarity^h`. Returns `None` when all candidate weights are zero.
pub fn select_partner<R: Rng + ?Sized>(
    i: usize,
    candidates: &[NodeId],
    states: &[AgentState],
    kernel: &SimilarityKernel,
    rng: &mut R,
) -> Option<usize> {
    let me = &states[i];
    let mut total = 0.0;
    for &j in candidates {
        total += kernel.weight(me, &states[j as usize]);
    }
    if total <= 0.0 {
        return None;
    }
    let mut target = rng.gen::<f64>() * total;
    let mut last_positive = None;
    for &j in candidates {
        let w = kernel.weight(me, &states[j as usize]);
        if w > 0.0 {
            if target < w {
                return Some(j as usize);
            }
            target -= w;
            last_positive = Some(j as usize);
        }
    }
    // rounding left a sliver past the final bucket
    last_positive
}

/// Copies one uniformly chosen differing component (awareness included) of
/// `j`'s opinion vector into `i`'s. Returns whether anything changed.
pub fn adopt_opinion<R: Rng + ?Sized>(i: usize, j: usize, states: &mut [AgentState], rng: &mut R) -> bool {
    debug_assert_ne!(i, j);
    let (src, dst) = (&states[j].opinion, &states[i].opinion);
    let n = dst.len();
    let differing = n - dst.matches(src, n);
    if differing == 0 {
        return false;
    }
    let pick = rng.gen_range(0..differing);
    let l = (0..n)
        .filter(|&l| dst.component(l) != src.component(l))
        .nth(pick)
        .expect("pick < differing");
    let value = src.component(l);
    states[i].opinion.set_component(l, value);
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoOutcome {
    Adopted,
    /// Partner already identical.
    Unchanged,
    /// All candidate similarities were zero.
    NoPartner,
    Isolated,
}

/// Reusable buffers and precomputed weights for [`info_step`].
#[derive(Debug, Clone)]
pub struct InfoWorkspace {
    pub kernel: SimilarityKernel,
    candidates: Vec<NodeId>,
}

impl InfoWorkspace {
    pub fn new(p: &InfoParams) -> Self {
        InfoWorkspace {
            kernel: SimilarityKernel::new(p),
            candidates: Vec::new(),
        }
    }
}

/// One information-layer update on a uniformly chosen node.
///
/// Draw order: node, neighbour sample, global sample, partner, trait.
pub fn info_step<R: Rng + ?Sized>(
    g: &Graph,
    states: &mut [AgentState],
    p: &InfoParams,
    ws: &mut InfoWorkspace,
    rng: &mut R,
) -> InfoOutcome {
    let i = rng.gen_range(0..g.node_count());
    if !fill_interaction_set(g, i, p.gamma, rng, &mut ws.candidates) {
        return InfoOutcome::Isolated;
    }
    match select_partner(i, &ws.candidates, states, &ws.kernel, rng) {
        None => InfoOutcome::NoPartner,
        Some(j) if j == i => InfoOutcome::Unchanged,
        Some(j) => {
            if adopt_opinion(i, j, states, rng) {
                InfoOutcome::Adopted
            } else {
                InfoOutcome::Unchanged
            }
        }
    }
}
