//! Simulation engines: a dense state vector (exact, small scale) and a Pauli
//! frame (linear cost, production scale).

use crate::circuit::{Circuit, Op};
use crate::error::{Error, Result};
use crate::field::Dim;
use crate::gates::{gate_unitary, GateAction, GateKind};
use crate::matrix::CMatrix;
use crate::noise::{sample_depol1, sample_depol2, sample_measure_flip, FaultLocation};
use crate::pauli::PauliString;
use num_complex::Complex64;
use rand::Rng;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Largest state vector the dense engine will allocate.
pub const MAX_AMPLITUDES: u128 = 10_000_000;

#[derive(Clone, Debug)]
pub struct StateVector {
    pub dim: Dim,
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qudits.
    pub fn zero(dim: Dim, n: usize) -> Result<StateVector> {
        let size = (dim.q() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if size > MAX_AMPLITUDES {
            return Err(Error::MemoryBudget(size));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); size as usize];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { dim, n, amps })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn stride(&self, site: usize) -> usize {
        (self.dim.q() as usize).pow(site as u32)
    }

    /// Applies a `q^k` unitary; `targets[0]` is its low-order digit.
    pub fn apply_unitary(&mut self, u: &CMatrix, targets: &[usize]) {
        let q = self.dim.q() as usize;
        let k = targets.len();
        let strides: Vec<usize> = targets.iter().map(|&t| self.stride(t)).collect();
        let offsets: Vec<usize> = (0..u.n)
            .map(|local| {
                let mut rem = local;
                let mut off = 0;
                for s in &strides {
                    off += (rem % q) * s;
                    rem /= q;
                }
                off
            })
            .collect();
        // monomial gates (SUM, S, Paulis) need one product per amplitude
        let monomial: Option<Vec<(usize, Complex64)>> = (0..u.n)
            .map(|r| {
                let mut nz = (0..u.n).filter(|&c| u.get(r, c).norm_sqr() > 1e-24);
                match (nz.next(), nz.next()) {
                    (Some(c), None) => Some((c, u.get(r, c))),
                    _ => None,
                }
            })
            .collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); u.n];
        let mut sorted = strides.clone();
        sorted.sort_unstable();
        let groups = self.amps.len() / q.pow(k as u32);
        for g in 0..groups {
            // spread `g` around zero digits at the target positions
            let base = sorted.iter().fold(g, |i, &s| (i / s) * s * q + i % s);
            for (b, &o) in buf.iter_mut().zip(&offsets) {
                *b = self.amps[base + o];
            }
            for (r, &o) in offsets.iter().enumerate() {
                self.amps[base + o] = match &monomial {
                    Some(m) => m[r].1 * buf[m[r].0],
                    None => (0..u.n).map(|c| u.get(r, c) * buf[c]).sum(),
                };
            }
        }
        debug_assert!(k == 0 || (self.norm_sqr() - 1.0).abs() < 1e-9);
    }

    /// Applies `X^r Z^s` (Z first) on one site.
    pub fn apply_pauli(&mut self, site: usize, r: u32, s: u32) {
        let q = self.dim.q() as usize;
        let st = self.stride(site);
        let phases: Vec<Complex64> =
            (0..q).map(|d| Complex64::from_polar(1.0, 2.0 * PI * ((s as usize * d) % q) as f64 / q as f64)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let d = (i / st) % q;
            let nd = (d + r as usize) % q;
            out[i + nd * st - d * st] = a * phases[d];
        }
        self.amps = out;
    }

    /// Born probabilities of each computational value on `site`.
    pub fn probabilities(&self, site: usize) -> Vec<f64> {
        let q = self.dim.q() as usize;
        let st = self.stride(site);
        let mut p = vec![0.0; q];
        for (i, a) in self.amps.iter().enumerate() {
            p[(i / st) % q] += a.norm_sqr();
        }
        p
    }

    /// Projective computational-basis measurement with Born sampling.
    pub fn measure<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> u32 {
        let probs = self.probabilities(site);
        let mut u = rng.gen::<f64>() * probs.iter().sum::<f64>();
        let mut k = probs.len() - 1;
        for (v, &p) in probs.iter().enumerate() {
            if u < p {
                k = v;
                break;
            }
            u -= p;
        }
        let q = self.dim.q() as usize;
        let st = self.stride(site);
        let scale = 1.0 / probs[k].sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i / st) % q == k {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        k as u32
    }

    /// Measures and re-prepares `|0>`.
    pub fn reset<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) {
        let k = self.measure(site, rng);
        if k != 0 {
            self.apply_pauli(site, self.dim.neg(k), 0);
        }
    }

    /// Amplitudes as little-endian `(re, im)` pairs of 64-bit floats.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.amps.len() * 16);
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }
}

/// `<psi| U(s) |psi>`, computed without forming the operator.
pub fn stabilizer_expectation(state: &StateVector, s: &PauliString) -> Result<Complex64> {
    if s.dim() != state.dim {
        return Err(Error::DimMismatch(s.dim().q(), state.dim.q()));
    }
    if s.len() != state.n {
        return Err(Error::LenMismatch(s.len(), state.n));
    }
    let q = state.dim.q() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in state.amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let (mut row, mut w, mut rem, mut place) = (0usize, 0usize, i, 1usize);
        for site in 0..state.n {
            let d = rem % q;
            rem /= q;
            w += s.z(site) as usize * d;
            row += ((d + s.x(site) as usize) % q) * place;
            place *= q;
        }
        let ph = Complex64::from_polar(1.0, 2.0 * PI * (w % q) as f64 / q as f64);
        acc += state.amps[row].conj() * ph * a;
    }
    Ok(acc * Complex64::from_polar(1.0, PI * s.half_phase() as f64 / q as f64))
}

fn readout_shifts<R: Rng + ?Sized>(m: &crate::circuit::Moment, q: Dim, rng: &mut R) -> Result<Vec<(usize, u32)>> {
    let mut shifts = Vec::new();
    for ins in &m.noise {
        if let Op::MeasureFlip(p) = ins.op {
            let t = ins.targets[0];
            if !m.ops.iter().any(|o| o.op == Op::Measure && o.targets[0] == t) {
                return Err(Error::Schedule(format!("MFLIP on qudit {t} without a measurement in its moment")));
            }
            shifts.push((t, sample_measure_flip(p, q, rng).x(0)));
        }
    }
    Ok(shifts)
}

/// Runs `circuit` from `state`, sampling any noise tags. Returns the record.
pub fn sv_run_from<R: Rng + ?Sized>(state: &mut StateVector, circuit: &Circuit, rng: &mut R) -> Result<Vec<u32>> {
    if state.dim != circuit.dim || state.n != circuit.n_qudits {
        return Err(Error::DimMismatch(state.dim.q(), circuit.dim.q()));
    }
    let q = circuit.dim;
    let mut cache: HashMap<GateKind, CMatrix> = HashMap::new();
    let mut record = Vec::new();
    for m in &circuit.moments {
        let shifts = readout_shifts(m, q, rng)?;
        for ins in &m.ops {
            match &ins.op {
                Op::Gate(k) => {
                    let u = cache.entry(*k).or_insert_with(|| gate_unitary(*k, q));
                    state.apply_unitary(u, &ins.targets);
                }
                Op::Measure => {
                    let t = ins.targets[0];
                    let v = state.measure(t, rng);
                    let s = shifts.iter().filter(|x| x.0 == t).map(|x| x.1).sum::<u32>();
                    record.push(q.add(v, s % q.q()));
                }
                Op::Reset => state.reset(ins.targets[0], rng),
                _ => {}
            }
        }
        for ins in &m.noise {
            let p = match &ins.op {
                Op::Pauli(v) => PauliString::from_powers(
                    q,
                    v.iter().map(|x| x.0).collect(),
                    v.iter().map(|x| x.1).collect(),
                )?,
                Op::Depol1(p) => sample_depol1(*p, q, rng),
                Op::Depol2(p) => sample_depol2(*p, q, rng),
                _ => continue,
            };
            for (j, &t) in ins.targets.iter().enumerate() {
                if p.x(j) != 0 || p.z(j) != 0 {
                    state.apply_pauli(t, p.x(j), p.z(j));
                }
            }
        }
    }
    Ok(record)
}

/// Runs `circuit` on `|0...0>`.
pub fn sv_run<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> Result<(StateVector, Vec<u32>)> {
    let mut state = StateVector::zero(circuit.dim, circuit.n_qudits)?;
    let record = sv_run_from(&mut state, circuit, rng)?;
    Ok((state, record))
}

/// Outcome of a Pauli-frame run.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRun {
    /// Shift of each measurement relative to the noiseless reference.
    pub shifts: Vec<u32>,
    /// Residual phaseless frame after the last moment.
    pub frame: PauliString,
}

/// Gate actions for every kind, built once per dimension.
pub struct ActionTable {
    dim: Dim,
    map: HashMap<GateKind, GateAction>,
}

impl ActionTable {
    pub fn new(dim: Dim) -> ActionTable {
        ActionTable { dim, map: HashMap::new() }
    }

    pub fn get(&mut self, k: GateKind) -> &GateAction {
        let d = self.dim;
        self.map.entry(k).or_insert_with(|| GateAction::new(k, d))
    }
}

/// Propagates the fault frame of a noisy circuit.
///
/// A measurement's shift is the frame's `X` power at the computational
/// readout, which is the `Z` power before the ancilla's closing `F_DAG`.
pub fn pf_run<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> Result<FrameRun> {
    let q = circuit.dim;
    let n = circuit.n_qudits;
    let (mut xs, mut zs) = (vec![0u32; n], vec![0u32; n]);
    let mut table = ActionTable::new(q);
    let mut shifts = Vec::new();
    for m in &circuit.moments {
        let flips = readout_shifts(m, q, rng)?;
        for ins in &m.ops {
            match &ins.op {
                Op::Gate(k) => table.get(*k).apply_frame(&mut xs, &mut zs, &ins.targets),
                Op::Measure => {
                    let t = ins.targets[0];
                    let s = flips.iter().filter(|x| x.0 == t).map(|x| x.1).sum::<u32>();
                    shifts.push(q.add(xs[t], s % q.q()));
                    zs[t] = 0;
                }
                Op::Reset => {
                    xs[ins.targets[0]] = 0;
                    zs[ins.targets[0]] = 0;
                }
                _ => {}
            }
        }
        for ins in &m.noise {
            let p = match &ins.op {
                Op::Pauli(v) => PauliString::from_powers(
                    q,
                    v.iter().map(|x| x.0).collect(),
                    v.iter().map(|x| x.1).collect(),
                )?,
                Op::Depol1(p) => sample_depol1(*p, q, rng),
                Op::Depol2(p) => sample_depol2(*p, q, rng),
                _ => continue,
            };
            for (j, &t) in ins.targets.iter().enumerate() {
                xs[t] = q.add(xs[t], p.x(j));
                zs[t] = q.add(zs[t], p.z(j));
            }
        }
    }
    Ok(FrameRun { shifts, frame: PauliString::from_powers(q, xs, zs)? })
}

/// Frame effect of one unit generator inserted before a moment.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    pub shifts: Vec<u32>,
    pub frame_x: Vec<u32>,
    pub frame_z: Vec<u32>,
}

/// Linear response of the record to faults: for each location and each
/// target, the effect of a unit `X` and a unit `Z`. Exact for Pauli faults on
/// Clifford circuits because the frame is linear over `Z_q`.
#[derive(Clone, Debug)]
pub struct EffectTable {
    pub dim: Dim,
    pub n_meas: usize,
    /// `effects[loc][2 * j]` is unit `X` on target `j`, `[2 * j + 1]` unit `Z`.
    pub effects: Vec<Vec<Effect>>,
}

fn propagate_from(circuit: &Circuit, table: &mut ActionTable, start: usize, site: usize, x: u32, z: u32) -> Effect {
    let q = circuit.dim;
    let n = circuit.n_qudits;
    let (mut xs, mut zs) = (vec![0u32; n], vec![0u32; n]);
    xs[site] = x;
    zs[site] = z;
    let before = circuit.moments[..start.min(circuit.moments.len())]
        .iter()
        .flat_map(|m| &m.ops)
        .filter(|i| i.op == Op::Measure)
        .count();
    let mut shifts = vec![0u32; before];
    for m in &circuit.moments[start.min(circuit.moments.len())..] {
        for ins in &m.ops {
            match &ins.op {
                Op::Gate(k) => table.get(*k).apply_frame(&mut xs, &mut zs, &ins.targets),
                Op::Measure => {
                    shifts.push(xs[ins.targets[0]]);
                    zs[ins.targets[0]] = 0;
                }
                Op::Reset => {
                    xs[ins.targets[0]] = 0;
                    zs[ins.targets[0]] = 0;
                }
                _ => {}
            }
        }
    }
    let _ = q;
    Effect { shifts, frame_x: xs, frame_z: zs }
}

impl EffectTable {
    pub fn build(circuit: &Circuit, locs: &[FaultLocation]) -> EffectTable {
        let mut table = ActionTable::new(circuit.dim);
        let effects = locs
            .iter()
            .map(|l| {
                l.targets
                    .iter()
                    .flat_map(|&t| [(t, 1, 0), (t, 0, 1)])
                    .map(|(t, x, z)| propagate_from(circuit, &mut table, l.moment, t, x, z))
                    .collect()
            })
            .collect();
        EffectTable { dim: circuit.dim, n_meas: circuit.measurement_count(), effects }
    }

    /// Adds the effect of `pauli` at location `loc` into the accumulators.
    pub fn accumulate(&self, loc: usize, pauli: &PauliString, shifts: &mut [u32], fx: &mut [u32], fz: &mut [u32]) {
        let d = self.dim;
        for j in 0..pauli.len() {
            for (gen, pow) in [(2 * j, pauli.x(j)), (2 * j + 1, pauli.z(j))] {
                if pow == 0 {
                    continue;
                }
                let e = &self.effects[loc][gen];
                for (a, &b) in shifts.iter_mut().zip(&e.shifts) {
                    *a = d.add(*a, d.mul(pow, b));
                }
                for (a, &b) in fx.iter_mut().zip(&e.frame_x) {
                    *a = d.add(*a, d.mul(pow, b));
                }
                for (a, &b) in fz.iter_mut().zip(&e.frame_z) {
                    *a = d.add(*a, d.mul(pow, b));
                }
            }
        }
    }
}

/// A fault on which the two engines disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub location: usize,
    pub pauli: PauliString,
    pub dense: Vec<u32>,
    pub frame: Vec<u32>,
}

/// Injects every single fault of `locs` and compares the dense readout with
/// the frame shift. The noiseless record of `circuit` must be all zero (true
/// for encoded memory runs). Returns the number of faults tried.
pub fn compare_single_faults<R: Rng + ?Sized>(
    circuit: &Circuit,
    locs: &[FaultLocation],
    rng: &mut R,
) -> Result<(usize, Vec<Mismatch>)> {
    let q = circuit.dim;
    let mut order: Vec<usize> = (0..locs.len()).collect();
    order.sort_by_key(|&i| locs[i].moment);
    let mut state = StateVector::zero(q, circuit.n_qudits)?;
    let mut prefix_record = Vec::new();
    let mut at = 0;
    let (mut tried, mut bad) = (0, Vec::new());
    for li in order {
        let loc = &locs[li];
        while at < loc.moment {
            let one = Circuit { moments: vec![circuit.moments[at].clone()], cycle_starts: vec![], ..circuit.clone() };
            prefix_record.extend(sv_run_from(&mut state, &one, rng)?);
            at += 1;
        }
        let rest = Circuit { moments: circuit.moments[at..].to_vec(), cycle_starts: vec![], ..circuit.clone() };
        for (pauli, _) in loc.channel.outcomes(q) {
            let fault = crate::noise::FaultEvent { moment: 0, targets: loc.targets.clone(), pauli: pauli.clone() };
            let mut st = state.clone();
            let mut dense = prefix_record.clone();
            dense.extend(sv_run_from(&mut st, &crate::noise::insert_faults(&rest, &[fault]), rng)?);
            let full = crate::noise::FaultEvent { moment: loc.moment, targets: loc.targets.clone(), pauli: pauli.clone() };
            let frame = pf_run(&crate::noise::insert_faults(circuit, &[full]), rng)?.shifts;
            tried += 1;
            if dense != frame {
                bad.push(Mismatch { location: li, pauli, dense, frame });
            }
        }
    }
    Ok((tried, bad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Instruction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(q: u32) -> Dim {
        Dim::new(q).unwrap()
    }

    #[test]
    fn sum_on_one_one() {
        let mut c = Circuit::new(d(3), 2);
        c.gate(GateKind::X, &[0]).unwrap();
        c.gate(GateKind::X, &[1]).unwrap();
        c.gate(GateKind::Sum, &[0, 1]).unwrap();
        c.push(Instruction::new(Op::Measure, &[0])).unwrap();
        c.push(Instruction::new(Op::Measure, &[1])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, rec) = sv_run(&c, &mut rng).unwrap();
        assert_eq!(rec, vec![1, 2]);
    }

    #[test]
    fn fourier_gives_uniform_outcomes() {
        let mut c = Circuit::new(d(3), 1);
        c.gate(GateKind::F, &[0]).unwrap();
        c.push(Instruction::new(Op::Measure, &[0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shots = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..shots {
            counts[sv_run(&c, &mut rng).unwrap().1[0] as usize] += 1;
        }
        let sigma = (shots as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - shots as f64 / 3.0).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn expectation_matches_dense_operator() {
        let q = d(3);
        let mut c = Circuit::new(q, 2);
        c.gate(GateKind::F, &[0]).unwrap();
        c.gate(GateKind::S, &[1]).unwrap();
        c.gate(GateKind::Sum, &[0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (st, _) = sv_run(&c, &mut rng).unwrap();
        for text in ["X1.Z2 Z1", "w^1 X1 X2", "z^3 Z1 Z2"] {
            let p = PauliString::parse(q, text).unwrap();
            let u = p.unitary();
            let mut dense = Complex64::new(0.0, 0.0);
            for r in 0..9 {
                for col in 0..9 {
                    dense += st.amps[r].conj() * u.get(r, col) * st.amps[col];
                }
            }
            assert!((dense - stabilizer_expectation(&st, &p).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn memory_budget_is_enforced() {
        assert!(matches!(StateVector::zero(d(7), 9), Err(Error::MemoryBudget(_))));
    }

    #[test]
    fn reset_returns_to_zero() {
        let mut c = Circuit::new(d(5), 1);
        c.gate(GateKind::F, &[0]).unwrap();
        c.push(Instruction::new(Op::Reset, &[0])).unwrap();
        c.push(Instruction::new(Op::Measure, &[0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(sv_run(&c, &mut rng).unwrap().1, vec![0]);
        }
    }

    #[test]
    fn amplitude_dump_is_pairs_of_f64() {
        let st = StateVector::zero(d(2), 2).unwrap();
        let b = st.to_le_bytes();
        assert_eq!(b.len(), 4 * 16);
        assert_eq!(f64::from_le_bytes(b[..8].try_into().unwrap()), 1.0);
    }
}
