//! Expanded q-ary detector graph, detection events, and the detector error
//! model compiled from a noisy circuit.
//!
//! Nodes are `(check, value, cycle)` with `value` in `1..q`. A single-qudit
//! error `E` in cycle `c` lights node `(i, v, c)` for every check `i` with
//! `v = comm(S_i, E) != 0`. Pure `X^t` or `Z^u` errors touch at most two
//! nodes and become edges (one node means a boundary edge); errors with both
//! parts touch three or four nodes and are hyperedges.

use crate::backends::EffectTable;
use crate::circuit::Circuit;
use crate::code5::{readout_layout, CheckMatrix, Readout, N, N_CHECKS};
use crate::error::{Error, Result};
use crate::field::{Dim, RowSpace};
use crate::noise::{fault_locations, FaultLocation, NoiseModel};
use crate::pauli::{commutation_phase, PauliString};
use rand::Rng;
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

/// Per-cycle outcomes, indexed `[cycle][check]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeRecord {
    pub syndromes: Vec<Vec<u32>>,
    pub flags: Vec<Vec<u32>>,
}

impl SyndromeRecord {
    /// Sorts a flat measurement record by its readout layout.
    pub fn from_record(layout: &[Readout], record: &[u32], cycles: usize) -> SyndromeRecord {
        let mut syndromes = vec![vec![0; N_CHECKS]; cycles];
        let mut flags = vec![vec![0; N_CHECKS]; cycles];
        for (r, &v) in layout.iter().zip(record) {
            match *r {
                Readout::Syndrome { check, cycle } => syndromes[cycle][check] = v,
                Readout::Flag { check, cycle } => flags[cycle][check] = v,
            }
        }
        SyndromeRecord { syndromes, flags }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectionEvent {
    pub check: usize,
    pub cycle: usize,
    pub value: u32,
}

impl DetectionEvent {
    pub fn detector(&self) -> usize {
        self.cycle * N_CHECKS + self.check
    }
}

/// Events `m_c - m_{c-1} != 0`, with `m_{-1} = 0`.
pub fn detection_events(record: &SyndromeRecord, q: Dim) -> Vec<DetectionEvent> {
    let mut out = Vec::new();
    for (c, row) in record.syndromes.iter().enumerate() {
        for (i, &m) in row.iter().enumerate() {
            let prev = if c == 0 { 0 } else { record.syndromes[c - 1][i] };
            let value = q.sub(m, prev);
            if value != 0 {
                out.push(DetectionEvent { check: i, cycle: c, value });
            }
        }
    }
    out
}

/// Events from a dense detector vector indexed `cycle * 4 + check`.
pub fn events_from_detectors(dets: &[u32]) -> Vec<DetectionEvent> {
    dets.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(d, &value)| DetectionEvent { check: d % N_CHECKS, cycle: d / N_CHECKS, value })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorNode {
    pub check: usize,
    pub value: u32,
    pub cycle: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeLabel {
    Data { cycle: usize, error: PauliString },
    Measurement { check: usize, cycle: usize },
}

impl std::fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeLabel::Data { error, .. } => {
                let site = error.support()[0];
                let (x, z) = (error.x(site), error.z(site));
                match (x, z) {
                    (0, z) => write!(f, "Z{site}^{z}"),
                    (x, 0) => write!(f, "X{site}^{x}"),
                    (x, z) => write!(f, "X{site}^{x}Z{site}^{z}"),
                }
            }
            EdgeLabel::Measurement { check, cycle } => write!(f, "M(A{check},c{cycle})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    /// Node ids; a single node means the other end is the boundary.
    pub nodes: Vec<usize>,
    pub label: EdgeLabel,
    pub weight: f64,
}

impl GraphEdge {
    pub fn is_hyper(&self) -> bool {
        self.nodes.len() > 2
    }
}

#[derive(Clone, Debug)]
pub struct DetectorGraph {
    pub dim: Dim,
    pub cycles: usize,
    pub nodes: Vec<DetectorNode>,
    /// Edges and boundary edges; hyperedges are listed by [`hyperedges`].
    pub edges: Vec<GraphEdge>,
}

impl DetectorGraph {
    pub fn node_id(&self, check: usize, value: u32, cycle: usize) -> usize {
        let qm = (self.dim.q() - 1) as usize;
        (cycle * N_CHECKS + check) * qm + value as usize - 1
    }

    /// Connected components over internal edges; the boundary does not join.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            if e.nodes.len() == 2 {
                let (a, b) = (find(&mut parent, e.nodes[0]), find(&mut parent, e.nodes[1]));
                parent[a] = b;
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for n in 0..self.nodes.len() {
            let r = find(&mut parent, n);
            groups.entry(r).or_default().push(n);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort();
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph detectors {\n  node [shape=circle];\n  boundary [shape=box];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "  n{i} [label=\"(S_{}, w^{}, {})\"];", n.check, n.value, n.cycle);
        }
        for e in &self.edges {
            let b = if e.nodes.len() == 1 { "boundary".to_string() } else { format!("n{}", e.nodes[1]) };
            let _ = writeln!(s, "  n{} -- {} [label=\"{}\"];", e.nodes[0], b, e.label);
        }
        s.push_str("}\n");
        s
    }
}

fn lit_nodes(h: &CheckMatrix, e: &PauliString) -> Vec<(usize, u32)> {
    h.stabilizers()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let v = commutation_phase(s, e).expect("five sites");
            (v != 0).then_some((i, v))
        })
        .collect()
}

/// Expanded graph over `cycles` rounds with uniform unit weights.
pub fn build_graph(h: &CheckMatrix, cycles: usize) -> DetectorGraph {
    let q = h.dim;
    let mut g = DetectorGraph { dim: q, cycles, nodes: Vec::new(), edges: Vec::new() };
    for cycle in 0..cycles {
        for check in 0..N_CHECKS {
            for value in 1..q.q() {
                g.nodes.push(DetectorNode { check, value, cycle });
            }
        }
    }
    for cycle in 0..cycles {
        for site in 0..N {
            for (x, z) in (1..q.q()).map(|t| (t, 0)).chain((1..q.q()).map(|u| (0, u))) {
                let error = PauliString::single(q, N, site, x, z);
                let nodes = lit_nodes(h, &error).iter().map(|&(i, v)| g.node_id(i, v, cycle)).collect();
                g.edges.push(GraphEdge { nodes, label: EdgeLabel::Data { cycle, error }, weight: 1.0 });
            }
        }
        if cycle + 1 < cycles {
            for check in 0..N_CHECKS {
                for v in 1..q.q() {
                    let nodes = vec![g.node_id(check, v, cycle), g.node_id(check, q.neg(v), cycle + 1)];
                    g.edges.push(GraphEdge { nodes, label: EdgeLabel::Measurement { check, cycle }, weight: 1.0 });
                }
            }
        }
    }
    g
}

/// Maps events to node ids.
pub fn activate(graph: &DetectorGraph, events: &[DetectionEvent]) -> Result<BTreeSet<usize>> {
    events
        .iter()
        .map(|e| {
            if e.value == 0 || e.value >= graph.dim.q() || e.cycle >= graph.cycles || e.check >= N_CHECKS {
                Err(Error::EventValue(e.value))
            } else {
                Ok(graph.node_id(e.check, e.value, e.cycle))
            }
        })
        .collect()
}

/// A single-qudit error touching more than two nodes of a one-cycle graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperedge {
    pub error: PauliString,
    pub nodes: Vec<usize>,
    /// Unordered pairs of edge errors whose combined signature equals this one.
    pub decompositions: Vec<(PauliString, PauliString)>,
    pub cross_component: bool,
}

/// Every `X^r Z^s` error with `r, s != 0`, with its two-edge decompositions.
pub fn hyperedges(h: &CheckMatrix) -> Vec<Hyperedge> {
    let q = h.dim;
    let g = build_graph(h, 1);
    let comps = g.components();
    let comp_of = |n: usize| comps.iter().position(|c| c.contains(&n)).unwrap();
    let sig = |e: &PauliString| {
        let mut v = vec![0u32; N_CHECKS];
        for (i, val) in lit_nodes(h, e) {
            v[i] = val;
        }
        v
    };
    let edge_errors: Vec<&PauliString> = g
        .edges
        .iter()
        .map(|e| match &e.label {
            EdgeLabel::Data { error, .. } => error,
            EdgeLabel::Measurement { .. } => unreachable!("single cycle"),
        })
        .collect();
    let edge_sigs: Vec<Vec<u32>> = edge_errors.iter().map(|e| sig(e)).collect();
    let mut out = Vec::new();
    for site in 0..N {
        for x in 1..q.q() {
            for z in 1..q.q() {
                let error = PauliString::single(q, N, site, x, z);
                let target = sig(&error);
                let lit = lit_nodes(h, &error);
                if lit.len() <= 2 {
                    continue;
                }
                let nodes: Vec<usize> = lit.iter().map(|&(i, v)| g.node_id(i, v, 0)).collect();
                let mut decompositions = Vec::new();
                for a in 0..edge_sigs.len() {
                    for b in a + 1..edge_sigs.len() {
                        if (0..N_CHECKS).all(|i| q.add(edge_sigs[a][i], edge_sigs[b][i]) == target[i]) {
                            decompositions.push((edge_errors[a].clone(), edge_errors[b].clone()));
                        }
                    }
                }
                let cross_component = nodes.iter().any(|&n| comp_of(n) != comp_of(nodes[0]));
                out.push(Hyperedge { error, nodes, decompositions, cross_component });
            }
        }
    }
    out
}

/// Effect of one fault on detectors, flags and the final data frame.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DetEffect {
    pub dets: Vec<(usize, u32)>,
    pub flags: Vec<(usize, u32)>,
    /// Data-qudit symplectic vector `(xs | zs)`.
    pub data: Vec<u32>,
}

/// A q-ary error mechanism: the line `{k * effect}` with power priors.
#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    /// Detector signature of power 1.
    pub dets: Vec<(usize, u32)>,
    /// Data effect of power 1, reduced modulo the stabilizers.
    pub data: Vec<u32>,
    /// `probs[k]` is the prior of power `k`; `probs[0]` is unused.
    pub probs: Vec<f64>,
}

/// Detector error model: mechanisms merged by signature and logical class.
#[derive(Clone, Debug)]
pub struct Dem {
    pub dim: Dim,
    pub n_det: usize,
    pub mechanisms: Vec<Mechanism>,
}

/// A noisy circuit compiled to linear fault effects.
#[derive(Clone, Debug)]
pub struct DetectorModel {
    pub dim: Dim,
    pub cycles: usize,
    pub n_det: usize,
    pub locations: Vec<FaultLocation>,
    /// `gens[loc][2 * j]` is unit `X` on target `j`, `[2 * j + 1]` unit `Z`.
    pub gens: Vec<Vec<DetEffect>>,
    stabs: RowSpace,
}

fn sparse(v: &[u32]) -> Vec<(usize, u32)> {
    v.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, &x)| (i, x)).collect()
}

impl DetectorModel {
    pub fn build(circuit: &Circuit, model: &NoiseModel, h: &CheckMatrix) -> Result<DetectorModel> {
        let q = circuit.dim;
        let cycles = circuit.cycle_starts.len();
        let layout = readout_layout(circuit);
        let locations = fault_locations(circuit, model)?;
        let table = EffectTable::build(circuit, &locations);
        let n_det = cycles * N_CHECKS;
        let gens = table
            .effects
            .iter()
            .map(|gs| {
                gs.iter()
                    .map(|e| {
                        let rec = SyndromeRecord::from_record(&layout, &e.shifts, cycles);
                        let mut dets = vec![0u32; n_det];
                        for ev in detection_events(&rec, q) {
                            dets[ev.detector()] = ev.value;
                        }
                        let flags: Vec<u32> = rec.flags.concat();
                        let mut data = e.frame_x[..N].to_vec();
                        data.extend_from_slice(&e.frame_z[..N]);
                        DetEffect { dets: sparse(&dets), flags: sparse(&flags), data }
                    })
                    .collect()
            })
            .collect();
        Ok(DetectorModel { dim: q, cycles, n_det, locations, gens, stabs: h.row_space() })
    }

    /// Effect of `pauli` (over the location's targets) at location `loc`.
    pub fn effect(&self, loc: usize, pauli: &PauliString) -> DetEffect {
        let q = self.dim;
        let mut dets = vec![0u32; self.n_det];
        let mut flags = vec![0u32; self.n_det];
        let mut data = vec![0u32; 2 * N];
        self.accumulate(loc, pauli, &mut dets, &mut flags, &mut data);
        let _ = q;
        DetEffect { dets: sparse(&dets), flags: sparse(&flags), data }
    }

    /// Adds the effect of `pauli` at `loc` into dense accumulators.
    pub fn accumulate(&self, loc: usize, pauli: &PauliString, dets: &mut [u32], flags: &mut [u32], data: &mut [u32]) {
        let q = self.dim;
        for j in 0..pauli.len() {
            for (g, pow) in [(2 * j, pauli.x(j)), (2 * j + 1, pauli.z(j))] {
                if pow == 0 {
                    continue;
                }
                let e = &self.gens[loc][g];
                for &(i, v) in &e.dets {
                    dets[i] = q.add(dets[i], q.mul(pow, v));
                }
                for &(i, v) in &e.flags {
                    flags[i] = q.add(flags[i], q.mul(pow, v));
                }
                for (a, &b) in data.iter_mut().zip(&e.data) {
                    *a = q.add(*a, q.mul(pow, b));
                }
            }
        }
    }

    /// Samples one shot: dense detectors, flags and final data frame.
    ///
    /// Every channel fires with its trigger probability and then draws
    /// uniformly, so the firing locations are found by geometric skipping.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Shot {
        let q = self.dim;
        let mut shot =
            Shot { dets: vec![0; self.n_det], flags: vec![0; self.n_det], data: vec![0; 2 * N], faults: 0 };
        let p = match self.locations.first() {
            Some(l) => match l.channel {
                crate::noise::Channel::Depol1(p)
                | crate::noise::Channel::Depol2(p)
                | crate::noise::Channel::MeasureFlip(p) => p,
            },
            None => return shot,
        };
        if p <= 0.0 {
            return shot;
        }
        let log1m = (1.0 - p).ln();
        let mut i = 0usize;
        loop {
            if p < 1.0 {
                let u: f64 = rng.gen::<f64>();
                let skip = ((1.0 - u).ln() / log1m).floor();
                if !skip.is_finite() || skip >= (self.locations.len() - i) as f64 {
                    break;
                }
                i += skip as usize;
            }
            if i >= self.locations.len() {
                break;
            }
            let loc = &self.locations[i];
            let pauli = loc.channel.sample_fired(q, rng);
            if !pauli.is_trivial() {
                shot.faults += 1;
                self.accumulate(i, &pauli, &mut shot.dets, &mut shot.flags, &mut shot.data);
            }
            i += 1;
        }
        shot
    }

    /// Enumerates every single nontrivial fault with its prior.
    pub fn single_faults(&self) -> Vec<(usize, PauliString, f64)> {
        let q = self.dim;
        let mut out = Vec::new();
        for (li, l) in self.locations.iter().enumerate() {
            for (p, w) in l.channel.outcomes(q) {
                out.push((li, p, w));
            }
        }
        out
    }

    /// Merges all single faults into q-ary mechanisms.
    pub fn dem(&self) -> Dem {
        self.dem_where(|_| true)
    }

    /// Error model restricted to single faults whose effect passes `keep`.
    pub fn dem_where(&self, keep: impl Fn(&DetEffect) -> bool) -> Dem {
        let q = self.dim;
        let mut index: HashMap<(Vec<(usize, u32)>, Vec<u32>), usize> = HashMap::new();
        let mut mechanisms: Vec<Mechanism> = Vec::new();
        for (li, p, w) in self.single_faults() {
            let e = self.effect(li, &p);
            if !keep(&e) {
                continue;
            }
            let data = self.stabs.reduce(&e.data);
            if e.dets.is_empty() && data.iter().all(|&x| x == 0) {
                continue;
            }
            // canonical line representative: first nonzero coordinate is 1
            let lead = e.dets.first().map(|d| d.1).unwrap_or_else(|| *data.iter().find(|&&x| x != 0).unwrap());
            let inv = q.inv(lead).expect("nonzero");
            let dets: Vec<(usize, u32)> = e.dets.iter().map(|&(i, v)| (i, q.mul(v, inv))).collect();
            let data: Vec<u32> = data.iter().map(|&x| q.mul(x, inv)).collect();
            let id = *index.entry((dets.clone(), data.clone())).or_insert_with(|| {
                mechanisms.push(Mechanism { dets, data, probs: vec![0.0; q.q() as usize] });
                mechanisms.len() - 1
            });
            mechanisms[id].probs[lead as usize] += w;
        }
        Dem { dim: q, n_det: self.n_det, mechanisms }
    }
}

/// One sampled trajectory in detector space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shot {
    pub dets: Vec<u32>,
    pub flags: Vec<u32>,
    pub data: Vec<u32>,
    pub faults: usize,
}
