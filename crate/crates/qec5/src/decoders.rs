//! Decoders over the detector error model: q-ary matching, q-ary belief
//! propagation, belief matching, and the flag lookup table.
//!
//! Matching runs on a directed requirement graph. State `(d, a)` means
//! "detector `d` still needs value `a`". An edge mechanism lighting
//! `(X, a), (Y, b)` moves `(X, a)` to `(Y, -b)` and `(Y, b)` to `(X, -a)`;
//! one lighting only `(X, a)` moves `(X, a)` to the boundary. An event
//! `(D, v)` is explained by a path from `(D, v)` to the boundary or to
//! `(C, -u)` for a partner event `(C, u)`. Pairwise path costs feed an exact
//! minimum-weight perfect matching by dynamic programming over subsets.

use crate::code5::{CheckMatrix, N};
use crate::detector_graph::{Dem, DetEffect, DetectorModel};
use crate::error::{Error, Result};
use crate::field::Dim;
use crate::pauli::{PauliString, SymplecticVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

/// Largest event count matched exactly; larger instances pair greedily.
pub const EXACT_MATCH_LIMIT: usize = 20;

/// True iff `residual` lies in the stabilizer group (phases ignored).
pub fn check_success(residual: &PauliString, code: &CheckMatrix) -> bool {
    code.row_space().contains(&residual.symplectic().v)
}

fn correction_from(q: Dim, explained: &[u32]) -> PauliString {
    let v: Vec<u32> = explained.iter().map(|&x| q.neg(x)).collect();
    PauliString::from_symplectic(&SymplecticVector { dim: q, v })
}

#[derive(Clone, Debug)]
struct MEdge {
    from: usize,
    to: usize,
    mech: usize,
    power: u32,
    /// Hyperedge powers decomposed onto this edge.
    extra: Vec<(usize, u32)>,
}

type Part = (usize, u32);

/// Splits `dets` into graph-like mechanism powers whose data sums to `data`.
/// Returns the most probable split.
fn decompose(
    q: Dim,
    dem: &Dem,
    index: &HashMap<Vec<(usize, u32)>, Vec<Part>>,
    dets: &[(usize, u32)],
    data: &[u32],
) -> Option<Vec<Part>> {
    fn go(
        q: Dim,
        dem: &Dem,
        index: &HashMap<Vec<(usize, u32)>, Vec<Part>>,
        left: &[(usize, u32)],
        need: Vec<u32>,
        parts: &mut Vec<Part>,
        best: &mut Option<(f64, Vec<Part>)>,
    ) {
        if left.is_empty() {
            if need.iter().all(|&x| x == 0) {
                let score: f64 = parts.iter().map(|&(m, k)| dem.mechanisms[m].probs[k as usize].ln()).sum();
                if best.as_ref().is_none_or(|b| score > b.0) {
                    *best = Some((score, parts.clone()));
                }
            }
            return;
        }
        let first = left[0];
        let mut groups = vec![vec![first]];
        for &other in &left[1..] {
            groups.push(vec![first, other]);
        }
        for g in groups {
            let Some(cands) = index.get(&g) else { continue };
            let rest: Vec<(usize, u32)> = left.iter().copied().filter(|x| !g.contains(x)).collect();
            for &(m, k) in cands {
                let mut n = need.clone();
                for (a, &b) in n.iter_mut().zip(&dem.mechanisms[m].data) {
                    *a = q.sub(*a, q.mul(k, b));
                }
                parts.push((m, k));
                go(q, dem, index, &rest, n, parts, best);
                parts.pop();
            }
        }
    }
    let mut best = None;
    go(q, dem, index, dets, data.to_vec(), &mut Vec::new(), &mut best);
    best.map(|b| b.1)
}

/// Edge mechanisms of a [`Dem`] arranged for q-ary matching.
#[derive(Clone, Debug)]
pub struct MatchingGraph {
    pub dim: Dim,
    pub n_det: usize,
    dem: Dem,
    edges: Vec<MEdge>,
    adj: Vec<Vec<usize>>,
}

impl MatchingGraph {
    /// Uses every mechanism that lights at most two detectors; hyperedges
    /// are left out.
    pub fn from_dem(dem: &Dem) -> MatchingGraph {
        MatchingGraph::build(dem, false)
    }

    /// As [`MatchingGraph::from_dem`], but a mechanism lighting more than two
    /// detectors is folded onto graph-like mechanisms that reproduce both its
    /// detectors and its logical class, when such a split exists.
    pub fn with_hyperedges(dem: &Dem) -> MatchingGraph {
        MatchingGraph::build(dem, true)
    }

    fn build(dem: &Dem, fold: bool) -> MatchingGraph {
        let q = dem.dim;
        let qm = (q.q() - 1) as usize;
        let n_states = dem.n_det * qm + 1;
        let boundary = n_states - 1;
        let state = |d: usize, v: u32| d * qm + v as usize - 1;
        let mut index: HashMap<Vec<(usize, u32)>, Vec<Part>> = HashMap::new();
        for (mi, m) in dem.mechanisms.iter().enumerate() {
            if m.dets.is_empty() || m.dets.len() > 2 {
                continue;
            }
            for k in 1..q.q() {
                if m.probs[k as usize] > 0.0 {
                    let lit = m.dets.iter().map(|&(d, v)| (d, q.mul(k, v))).collect();
                    index.entry(lit).or_default().push((mi, k));
                }
            }
        }
        let mut folded: HashMap<Part, Vec<Part>> = HashMap::new();
        for (mi, m) in dem.mechanisms.iter().enumerate() {
            if !fold || m.dets.len() <= 2 || m.dets.len() > 6 {
                continue;
            }
            for k in 1..q.q() {
                if m.probs[k as usize] <= 0.0 {
                    continue;
                }
                let lit: Vec<(usize, u32)> = m.dets.iter().map(|&(d, v)| (d, q.mul(k, v))).collect();
                let data: Vec<u32> = m.data.iter().map(|&x| q.mul(k, x)).collect();
                if let Some(parts) = decompose(q, dem, &index, &lit, &data) {
                    for p in parts {
                        folded.entry(p).or_default().push((mi, k));
                    }
                }
            }
        }
        let mut edges = Vec::new();
        for (mi, m) in dem.mechanisms.iter().enumerate() {
            if m.dets.is_empty() || m.dets.len() > 2 {
                continue;
            }
            for k in 1..q.q() {
                if m.probs[k as usize] <= 0.0 {
                    continue;
                }
                let lit: Vec<(usize, u32)> = m.dets.iter().map(|&(d, v)| (d, q.mul(k, v))).collect();
                let extra = folded.get(&(mi, k)).cloned().unwrap_or_default();
                let edge = |from, to| MEdge { from, to, mech: mi, power: k, extra: extra.clone() };
                if lit.len() == 1 {
                    edges.push(edge(state(lit[0].0, lit[0].1), boundary));
                } else {
                    let ((x, a), (y, b)) = (lit[0], lit[1]);
                    edges.push(edge(state(x, a), state(y, q.neg(b))));
                    edges.push(edge(state(y, b), state(x, q.neg(a))));
                }
            }
        }
        let mut adj = vec![Vec::new(); n_states];
        for (i, e) in edges.iter().enumerate() {
            adj[e.from].push(i);
        }
        MatchingGraph { dim: q, n_det: dem.n_det, dem: dem.clone(), edges, adj }
    }

    /// Prior weights `ln((1 - p) / p)` per directed edge.
    pub fn prior_weights(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|e| {
                let mut p = self.dem.mechanisms[e.mech].probs[e.power as usize];
                for &(m, k) in &e.extra {
                    p += self.dem.mechanisms[m].probs[k as usize];
                }
                ((1.0 - p) / p).ln().max(0.0)
            })
            .collect()
    }

    /// Weights `-ln(posterior)` from a BP run.
    pub fn posterior_weights(&self, bp: &BpState) -> Vec<f64> {
        self.edges
            .iter()
            .map(|e| {
                let mut p = bp.posteriors[e.mech][e.power as usize];
                for &(m, k) in &e.extra {
                    p += bp.posteriors[m][k as usize];
                }
                let p = p.clamp(1e-300, 1.0 - 1e-12);
                ((1.0 - p) / p).ln().max(0.0)
            })
            .collect()
    }

    fn state(&self, d: usize, v: u32) -> usize {
        d * (self.dim.q() - 1) as usize + v as usize - 1
    }

    fn boundary(&self) -> usize {
        self.adj.len() - 1
    }

    fn dijkstra(&self, src: usize, w: &[f64]) -> (Vec<f64>, Vec<Option<usize>>) {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
            }
        }
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Item(0.0, src));
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] || u == self.boundary() {
                continue;
            }
            for &ei in &self.adj[u] {
                let e = &self.edges[ei];
                let nd = d + w[ei];
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    pred[e.to] = Some(ei);
                    heap.push(Item(nd, e.to));
                }
            }
        }
        (dist, pred)
    }

    fn add_path(&self, pred: &[Option<usize>], src: usize, mut at: usize, acc: &mut [u32]) {
        let q = self.dim;
        while at != src {
            let ei = pred[at].expect("reachable");
            let e = &self.edges[ei];
            for (a, &b) in acc.iter_mut().zip(&self.dem.mechanisms[e.mech].data) {
                *a = q.add(*a, q.mul(e.power, b));
            }
            at = e.from;
        }
    }
}

/// Minimum-weight q-ary matching of `events` (detector, value).
///
/// Weights are jittered by a relative `1e-9` so that exact ties between
/// degenerate solutions are broken at random.
pub fn decode_mwpm<R: Rng + ?Sized>(
    g: &MatchingGraph,
    events: &[(usize, u32)],
    weights: &[f64],
    rng: &mut R,
) -> Result<PauliString> {
    let q = g.dim;
    let mut explained = vec![0u32; 2 * N];
    if events.is_empty() {
        return Ok(correction_from(q, &explained));
    }
    let w: Vec<f64> = weights.iter().map(|&x| x * (1.0 + 1e-9 * rng.gen::<f64>()) + 1e-12).collect();
    let k = events.len();
    let runs: Vec<_> = events.iter().map(|&(d, v)| g.dijkstra(g.state(d, v), &w)).collect();
    let pair = |i: usize, j: usize| runs[i].0[g.state(events[j].0, q.neg(events[j].1))];
    let bnd = |i: usize| runs[i].0[g.boundary()];
    let choice = min_weight_matching(k, pair, bnd).ok_or(Error::Degenerate)?;
    let mut done = vec![false; k];
    for i in 0..k {
        if done[i] {
            continue;
        }
        done[i] = true;
        let src = g.state(events[i].0, events[i].1);
        let target = match choice[i] {
            Some(j) => {
                done[j] = true;
                g.state(events[j].0, q.neg(events[j].1))
            }
            None => g.boundary(),
        };
        g.add_path(&runs[i].1, src, target, &mut explained);
    }
    Ok(correction_from(q, &explained))
}

/// Minimum-weight perfect matching of `k` events where each event pairs with
/// another (cost `pair(i, j)`, `i < j`) or with the boundary (`bnd(i)`).
/// Exact up to [`EXACT_MATCH_LIMIT`] events, greedy beyond. Entry `i` of the
/// result is the partner of `i`, or `None` for the boundary.
pub fn min_weight_matching(
    k: usize,
    pair: impl Fn(usize, usize) -> f64,
    bnd: impl Fn(usize) -> f64,
) -> Option<Vec<Option<usize>>> {
    let mut choice: Vec<Option<usize>> = vec![None; k];
    if k <= EXACT_MATCH_LIMIT {
        let full = (1usize << k) - 1;
        let mut f = vec![f64::INFINITY; 1 << k];
        let mut how = vec![(usize::MAX, usize::MAX); 1 << k];
        f[0] = 0.0;
        for mask in 1..=full {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let b = bnd(i) + f[rest];
            if b < f[mask] {
                f[mask] = b;
                how[mask] = (i, usize::MAX);
            }
            let mut m = rest;
            while m != 0 {
                let j = m.trailing_zeros() as usize;
                m &= m - 1;
                let c = pair(i, j) + f[rest & !(1 << j)];
                if c < f[mask] {
                    f[mask] = c;
                    how[mask] = (i, j);
                }
            }
        }
        if !f[full].is_finite() {
            return None;
        }
        let mut mask = full;
        while mask != 0 {
            let (i, j) = how[mask];
            if j == usize::MAX {
                mask &= !(1 << i);
            } else {
                choice[i] = Some(j);
                choice[j] = Some(i);
                mask &= !((1 << i) | (1 << j));
            }
        }
    } else {
        let mut left: Vec<usize> = (0..k).collect();
        while let Some(i) = left.pop() {
            let best = left
                .iter()
                .enumerate()
                .map(|(pos, &j)| (pair(j.min(i), j.max(i)), pos))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((c, pos)) if c <= bnd(i) => {
                    let j = left.swap_remove(pos);
                    choice[i] = Some(j);
                    choice[j] = Some(i);
                }
                _ if bnd(i).is_finite() => {}
                _ => return None,
            }
        }
    }
    Some(choice)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpConfig {
    pub max_iters: usize,
    pub damping: f64,
}

impl Default for BpConfig {
    fn default() -> BpConfig {
        BpConfig { max_iters: 50, damping: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpState {
    /// Per-mechanism distribution over powers `0..q`.
    pub posteriors: Vec<Vec<f64>>,
    pub assignment: Vec<u32>,
    pub iterations: usize,
    pub converged: bool,
}

/// Tanner graph of a [`Dem`] for q-ary sum-product.
#[derive(Clone, Debug)]
pub struct Tanner {
    dim: Dim,
    priors: Vec<Vec<f64>>,
    /// `(var, check, coefficient)` per Tanner edge.
    edges: Vec<(usize, usize, u32)>,
    var_edges: Vec<Vec<usize>>,
    check_edges: Vec<Vec<usize>>,
}

impl Tanner {
    pub fn new(dem: &Dem) -> Tanner {
        let q = dem.dim.q() as usize;
        let mut edges = Vec::new();
        let mut var_edges = vec![Vec::new(); dem.mechanisms.len()];
        let mut check_edges = vec![Vec::new(); dem.n_det];
        let mut priors = Vec::with_capacity(dem.mechanisms.len());
        for (e, m) in dem.mechanisms.iter().enumerate() {
            let mut p = m.probs.clone();
            p[0] = (1.0 - m.probs[1..].iter().sum::<f64>()).max(0.0);
            priors.push(p);
            for &(d, c) in &m.dets {
                var_edges[e].push(edges.len());
                check_edges[d].push(edges.len());
                edges.push((e, d, c));
            }
        }
        debug_assert!(priors.iter().all(|p| p.len() == q));
        Tanner { dim: dem.dim, priors, edges, var_edges, check_edges }
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

fn convolve(a: &[f64], b: &[f64], out: &mut [f64]) {
    let q = a.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[(i + j) % q] += x * y;
        }
    }
}

/// Flooding q-ary sum-product; stops once the argmax explains `syndrome`.
pub fn decode_bp(t: &Tanner, syndrome: &[u32], cfg: &BpConfig) -> BpState {
    run_bp(t, syndrome, cfg, true)
}

/// Posteriors after exactly `cfg.max_iters` flooding rounds.
pub fn bp_marginals(t: &Tanner, syndrome: &[u32], cfg: &BpConfig) -> Vec<Vec<f64>> {
    run_bp(t, syndrome, cfg, false).posteriors
}

fn run_bp(t: &Tanner, syndrome: &[u32], cfg: &BpConfig, early: bool) -> BpState {
    let q = t.dim;
    let qq = q.q() as usize;
    let nv = t.priors.len();
    let mut to_check: Vec<Vec<f64>> = t.edges.iter().map(|&(v, _, _)| t.priors[v].clone()).collect();
    let mut to_var: Vec<Vec<f64>> = vec![vec![1.0 / qq as f64; qq]; t.edges.len()];
    let satisfied = |assign: &[u32]| {
        t.check_edges.iter().enumerate().all(|(d, es)| {
            let s = es.iter().fold(0, |acc, &ei| {
                let (v, _, c) = t.edges[ei];
                q.add(acc, q.mul(c, assign[v]))
            });
            s == syndrome[d]
        })
    };
    let argmax = |p: &[f64]| {
        let mut best = 0;
        for k in 1..p.len() {
            if p[k] > p[best] {
                best = k;
            }
        }
        best as u32
    };
    let mut posteriors = t.priors.clone();
    let mut assignment: Vec<u32> = posteriors.iter().map(|p| argmax(p)).collect();
    if early && satisfied(&assignment) {
        return BpState { posteriors, assignment, iterations: 0, converged: true };
    }
    let mut tmp = vec![0.0; qq];
    for it in 1..=cfg.max_iters {
        // check to variable
        for (d, es) in t.check_edges.iter().enumerate() {
            let n = es.len();
            // distribution of c * x for each incoming message
            let rho: Vec<Vec<f64>> = es
                .iter()
                .map(|&ei| {
                    let c = t.edges[ei].2;
                    let mut r = vec![0.0; qq];
                    for (k, &m) in to_check[ei].iter().enumerate() {
                        r[q.mul(c, k as u32) as usize] += m;
                    }
                    r
                })
                .collect();
            let mut delta = vec![0.0; qq];
            delta[0] = 1.0;
            let mut prefix = vec![delta.clone()];
            for r in &rho {
                convolve(prefix.last().unwrap(), r, &mut tmp);
                prefix.push(tmp.clone());
            }
            let mut suffix = delta;
            for i in (0..n).rev() {
                let ei = es[i];
                let c = t.edges[ei].2;
                convolve(&prefix[i], &suffix, &mut tmp);
                let mut msg = vec![0.0; qq];
                for (k, m) in msg.iter_mut().enumerate() {
                    let need = q.sub(syndrome[d], q.mul(c, k as u32));
                    *m = tmp[need as usize];
                }
                normalize(&mut msg);
                for (old, new) in to_var[ei].iter_mut().zip(&msg) {
                    *old = cfg.damping * *old + (1.0 - cfg.damping) * new;
                }
                let mut next = vec![0.0; qq];
                convolve(&suffix, &rho[i], &mut next);
                suffix = next;
            }
        }
        // variable to check, posteriors
        for v in 0..nv {
            let es = &t.var_edges[v];
            let mut post = t.priors[v].clone();
            for &ei in es {
                for (p, m) in post.iter_mut().zip(&to_var[ei]) {
                    *p *= m;
                }
            }
            normalize(&mut post);
            for &ei in es {
                let mut msg = t.priors[v].clone();
                for &ej in es {
                    if ej != ei {
                        for (p, m) in msg.iter_mut().zip(&to_var[ej]) {
                            *p *= m;
                        }
                    }
                }
                normalize(&mut msg);
                to_check[ei] = msg;
            }
            posteriors[v] = post;
        }
        assignment = posteriors.iter().map(|p| argmax(p)).collect();
        if early && satisfied(&assignment) {
            return BpState { posteriors, assignment, iterations: it, converged: true };
        }
    }
    let converged = satisfied(&assignment);
    BpState { posteriors, assignment, iterations: cfg.max_iters, converged }
}

/// Correction implied by a BP assignment.
pub fn bp_correction(dem: &Dem, bp: &BpState) -> PauliString {
    let q = dem.dim;
    let mut explained = vec![0u32; 2 * N];
    for (m, &k) in dem.mechanisms.iter().zip(&bp.assignment) {
        if k != 0 {
            for (a, &b) in explained.iter_mut().zip(&m.data) {
                *a = q.add(*a, q.mul(k, b));
            }
        }
    }
    correction_from(q, &explained)
}

/// Most probable single mechanism power for each detector signature.
#[derive(Clone, Debug, Default)]
pub struct SingleLookup {
    best: HashMap<Vec<(usize, u32)>, (usize, u32, f64)>,
}

impl SingleLookup {
    pub fn new(dem: &Dem) -> SingleLookup {
        let q = dem.dim;
        let mut best: HashMap<Vec<(usize, u32)>, (usize, u32, f64)> = HashMap::new();
        for (mi, m) in dem.mechanisms.iter().enumerate() {
            if m.dets.is_empty() {
                continue;
            }
            for k in 1..q.q() {
                let p = m.probs[k as usize];
                if p <= 0.0 {
                    continue;
                }
                let lit = m.dets.iter().map(|&(d, v)| (d, q.mul(k, v))).collect();
                let slot = best.entry(lit).or_insert((mi, k, p));
                if p > slot.2 {
                    *slot = (mi, k, p);
                }
            }
        }
        SingleLookup { best }
    }

    /// Data effect of the best single mechanism explaining `events` exactly.
    pub fn explain(&self, dem: &Dem, events: &[(usize, u32)]) -> Option<Vec<u32>> {
        let q = dem.dim;
        self.best
            .get(events)
            .map(|&(m, k, _)| dem.mechanisms[m].data.iter().map(|&x| q.mul(k, x)).collect())
    }
}

/// Belief matching: BP; if BP fails to explain the syndrome, an exact
/// single-mechanism explanation when one exists, else matching reweighted by
/// the posteriors.
pub fn decode_bm<R: Rng + ?Sized>(
    dem: &Dem,
    tanner: &Tanner,
    g: &MatchingGraph,
    single: &SingleLookup,
    syndrome: &[u32],
    cfg: &BpConfig,
    rng: &mut R,
) -> Result<PauliString> {
    let bp = decode_bp(tanner, syndrome, cfg);
    if bp.converged {
        return Ok(bp_correction(dem, &bp));
    }
    let events: Vec<(usize, u32)> =
        syndrome.iter().enumerate().filter(|(_, &v)| v != 0).map(|(d, &v)| (d, v)).collect();
    if let Some(data) = single.explain(dem, &events) {
        return Ok(correction_from(dem.dim, &data));
    }
    decode_mwpm(g, &events, &g.posterior_weights(&bp), rng)
}

/// Decoder selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Mwpm,
    Bp,
    Bm,
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<DecoderKind> {
        match s {
            "mwpm" => Ok(DecoderKind::Mwpm),
            "bp" => Ok(DecoderKind::Bp),
            "bm" => Ok(DecoderKind::Bm),
            _ => Err(Error::Config(format!("unknown decoder {s:?} (expected mwpm, bp or bm)"))),
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecoderKind::Mwpm => "mwpm",
            DecoderKind::Bp => "bp",
            DecoderKind::Bm => "bm",
        })
    }
}

/// A decoder bound to one detector error model.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub kind: DecoderKind,
    pub dem: Dem,
    pub tanner: Tanner,
    pub graph: MatchingGraph,
    pub prior_weights: Vec<f64>,
    pub single: SingleLookup,
    pub bp: BpConfig,
}

impl Decoder {
    pub fn new(kind: DecoderKind, dem: Dem) -> Decoder {
        let tanner = Tanner::new(&dem);
        let graph = match kind {
            DecoderKind::Bm => MatchingGraph::with_hyperedges(&dem),
            _ => MatchingGraph::from_dem(&dem),
        };
        let prior_weights = graph.prior_weights();
        let single = if kind == DecoderKind::Bm { SingleLookup::new(&dem) } else { SingleLookup::default() };
        Decoder { kind, dem, tanner, graph, prior_weights, single, bp: BpConfig::default() }
    }

    /// Correction for a dense detector vector.
    pub fn decode<R: Rng + ?Sized>(&self, syndrome: &[u32], rng: &mut R) -> Result<PauliString> {
        if syndrome.iter().all(|&v| v == 0) {
            return Ok(PauliString::identity(self.dem.dim, N));
        }
        match self.kind {
            DecoderKind::Mwpm => {
                let events: Vec<(usize, u32)> =
                    syndrome.iter().enumerate().filter(|(_, &v)| v != 0).map(|(d, &v)| (d, v)).collect();
                decode_mwpm(&self.graph, &events, &self.prior_weights, rng)
            }
            DecoderKind::Bp => Ok(bp_correction(&self.dem, &decode_bp(&self.tanner, syndrome, &self.bp))),
            DecoderKind::Bm => decode_bm(&self.dem, &self.tanner, &self.graph, &self.single, syndrome, &self.bp, rng),
        }
    }
}

/// Key of a flag-table entry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlagKey {
    pub check: usize,
    pub flag: u32,
    /// Per-check event sum over the flag's cycle and the next.
    pub syndrome: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagEntry {
    pub key: FlagKey,
    /// Data correction `(xs | zs)` canceling the hook.
    pub correction: Vec<u32>,
    /// Detector signature of the generating fault, relative to its cycle.
    pub signature: Vec<(usize, u32)>,
    pub prior: f64,
    pub ambiguous: bool,
}

/// Hook-error lookup built from every single fault that raises one flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagTable {
    pub version: u32,
    pub q: u32,
    pub entries: Vec<FlagEntry>,
}

pub const FLAG_TABLE_VERSION: u32 = 1;

fn key_syndrome(dets: &[(usize, u32)], cycle: usize, q: Dim) -> Vec<u32> {
    let mut s = vec![0u32; 4];
    for &(d, v) in dets {
        let c = d / 4;
        if c == cycle || c == cycle + 1 {
            s[d % 4] = q.add(s[d % 4], v);
        }
    }
    s
}

impl FlagTable {
    /// Builds the table from a flagged circuit model with one noisy cycle.
    pub fn build(model: &DetectorModel, code: &CheckMatrix) -> FlagTable {
        let q = model.dim;
        let stabs = code.row_space();
        let mut by_key: BTreeMap<FlagKey, FlagEntry> = BTreeMap::new();
        for (li, p, w) in model.single_faults() {
            let e: DetEffect = model.effect(li, &p);
            if e.flags.len() != 1 {
                continue;
            }
            let (fi, f) = e.flags[0];
            let (check, cycle) = (fi % 4, fi / 4);
            let key = FlagKey { check, flag: f, syndrome: key_syndrome(&e.dets, cycle, q) };
            let correction: Vec<u32> = e.data.iter().map(|&x| q.neg(x)).collect();
            let signature: Vec<(usize, u32)> = e.dets.iter().map(|&(d, v)| (d - 4 * cycle, v)).collect();
            match by_key.get_mut(&key) {
                None => {
                    by_key.insert(key.clone(), FlagEntry { key, correction, signature, prior: w, ambiguous: false });
                }
                Some(ent) => {
                    let mut diff = ent.correction.clone();
                    for (a, &b) in diff.iter_mut().zip(&correction) {
                        *a = q.sub(*a, b);
                    }
                    let same_class = stabs.contains(&diff);
                    let lighter = weight(&correction) < weight(&ent.correction);
                    if !same_class {
                        ent.ambiguous = true;
                    }
                    if (!same_class && (w > ent.prior || (w == ent.prior && lighter))) || (same_class && lighter) {
                        ent.correction = correction;
                        ent.signature = signature;
                    }
                    ent.prior += w;
                }
            }
        }
        FlagTable { version: FLAG_TABLE_VERSION, q: q.q(), entries: by_key.into_values().collect() }
    }

    pub fn lookup(&self, key: &FlagKey) -> Option<&FlagEntry> {
        self.entries.binary_search_by(|e| e.key.cmp(key)).ok().map(|i| &self.entries[i])
    }

    pub fn ambiguous(&self) -> impl Iterator<Item = &FlagEntry> {
        self.entries.iter().filter(|e| e.ambiguous)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<FlagTable> {
        let t: FlagTable = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if t.version != FLAG_TABLE_VERSION {
            return Err(Error::Config(format!("flag table version {} (expected {FLAG_TABLE_VERSION})", t.version)));
        }
        Ok(t)
    }

    /// Applies flagged corrections in place; returns the summed correction.
    ///
    /// `dets` and `flags` are dense, indexed `cycle * 4 + check`. Each raised
    /// flag whose key matches subtracts its fault signature from `dets`.
    pub fn apply(&self, dets: &mut [u32], flags: &[u32]) -> Vec<u32> {
        let q = Dim::new(self.q).expect("prime");
        let mut corr = vec![0u32; 2 * N];
        for (fi, &f) in flags.iter().enumerate() {
            if f == 0 {
                continue;
            }
            let (check, cycle) = (fi % 4, fi / 4);
            let sparse: Vec<(usize, u32)> =
                dets.iter().enumerate().filter(|(_, &v)| v != 0).map(|(d, &v)| (d, v)).collect();
            let key = FlagKey { check, flag: f, syndrome: key_syndrome(&sparse, cycle, q) };
            if let Some(ent) = self.lookup(&key) {
                if ent.signature.iter().any(|&(d, _)| d + 4 * cycle >= dets.len()) {
                    continue;
                }
                for &(d, v) in &ent.signature {
                    let at = d + 4 * cycle;
                    dets[at] = q.sub(dets[at], v);
                }
                for (a, &b) in corr.iter_mut().zip(&ent.correction) {
                    *a = q.add(*a, b);
                }
            }
        }
        corr
    }
}

fn weight(v: &[u32]) -> usize {
    (0..N).filter(|&j| v[j] != 0 || v[N + j] != 0).count()
}

/// Full shot decoding: flag lookups first, then the main decoder on what
/// remains.
#[derive(Clone, Debug)]
pub struct ShotDecoder {
    pub decoder: Decoder,
    pub flags: Option<FlagTable>,
}

impl ShotDecoder {
    /// Builds the decoder for `model`. With a flag table, flagged faults are
    /// left to the table and kept out of the main error model.
    pub fn new(kind: DecoderKind, model: &DetectorModel, flags: Option<FlagTable>) -> ShotDecoder {
        let dem = if flags.is_some() { model.dem_where(|e| e.flags.is_empty()) } else { model.dem() };
        ShotDecoder { decoder: Decoder::new(kind, dem), flags }
    }

    /// Data correction `(xs | zs)` for one shot.
    pub fn correction<R: Rng + ?Sized>(&self, dets: &[u32], flags: &[u32], rng: &mut R) -> Result<Vec<u32>> {
        let q = self.decoder.dem.dim;
        let mut dets = dets.to_vec();
        let mut corr = match &self.flags {
            Some(t) => t.apply(&mut dets, flags),
            None => vec![0u32; 2 * N],
        };
        let main = self.decoder.decode(&dets, rng)?.symplectic().v;
        for (a, b) in corr.iter_mut().zip(main) {
            *a = q.add(*a, b);
        }
        Ok(corr)
    }

    /// True iff the corrected data frame is a stabilizer.
    pub fn succeeds<R: Rng + ?Sized>(
        &self,
        code: &CheckMatrix,
        dets: &[u32],
        flags: &[u32],
        data: &[u32],
        rng: &mut R,
    ) -> Result<bool> {
        let q = self.decoder.dem.dim;
        let corr = self.correction(dets, flags, rng)?;
        let residual: Vec<u32> = data.iter().zip(&corr).map(|(&a, &b)| q.add(a, b)).collect();
        Ok(code.row_space().contains(&residual))
    }
}

/// One single fault that the decoder fails to correct.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditFailure {
    pub location: usize,
    pub moment: usize,
    pub targets: Vec<usize>,
    pub pauli: String,
}

/// Decodes every single fault of `model` and lists the failures.
pub fn audit_single_faults<R: Rng + ?Sized>(
    model: &DetectorModel,
    code: &CheckMatrix,
    dec: &ShotDecoder,
    rng: &mut R,
) -> Result<(usize, Vec<AuditFailure>)> {
    let mut failures = Vec::new();
    let faults = model.single_faults();
    for (li, p, _) in &faults {
        let (mut dets, mut flags, mut data) = (vec![0; model.n_det], vec![0; model.n_det], vec![0; 2 * N]);
        model.accumulate(*li, p, &mut dets, &mut flags, &mut data);
        if !dec.succeeds(code, &dets, &flags, &data, rng)? {
            let loc = &model.locations[*li];
            failures.push(AuditFailure {
                location: *li,
                moment: loc.moment,
                targets: loc.targets.clone(),
                pauli: p.to_string(),
            });
        }
    }
    Ok((faults.len(), failures))
}
