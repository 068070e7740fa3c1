//! Pauli noise channels and the two noise models.
//!
//! A fault location is attached *before* a moment index: gate noise sits just
//! after its gate, readout noise just before its measurement, and
//! standard-depolarizing noise just before each extraction cycle.

use crate::circuit::{Circuit, Instruction, Moment, Op};
use crate::error::{Error, Result};
use crate::field::Dim;
use crate::pauli::PauliString;
use rand::Rng;
use serde::{Deserialize, Serialize};

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Probability(p))
    }
}

/// Single-qudit depolarization: with probability `p` a uniformly random
/// `X^r Z^s`, identity included, so each nontrivial term has weight `p/q^2`.
pub fn sample_depol1<R: Rng + ?Sized>(p: f64, q: Dim, rng: &mut R) -> PauliString {
    let mut out = PauliString::identity(q, 1);
    if p > 0.0 && rng.gen::<f64>() < p {
        let k = rng.gen_range(0..q.q() * q.q());
        out.set_site(0, k / q.q(), k % q.q());
    }
    out
}

/// Two-qudit depolarization, `p2/q^4` per nontrivial pair.
pub fn sample_depol2<R: Rng + ?Sized>(p2: f64, q: Dim, rng: &mut R) -> PauliString {
    let mut out = PauliString::identity(q, 2);
    if p2 > 0.0 && rng.gen::<f64>() < p2 {
        let qq = q.q();
        let k = rng.gen_range(0..qq.pow(4));
        out.set_site(0, k % qq, (k / qq) % qq);
        out.set_site(1, (k / qq.pow(2)) % qq, k / qq.pow(3));
    }
    out
}

/// Readout error: a single shift `X` with probability `p_m`.
pub fn sample_measure_flip<R: Rng + ?Sized>(p_m: f64, q: Dim, rng: &mut R) -> PauliString {
    let mut out = PauliString::identity(q, 1);
    if p_m > 0.0 && rng.gen::<f64>() < p_m {
        out.set_site(0, 1, 0);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseKind {
    StandardDepolarizing(f64),
    CircuitLevel(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub dim: Dim,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, dim: Dim) -> Result<NoiseModel> {
        check_prob(kind.p())?;
        Ok(NoiseModel { kind, dim })
    }
}

impl NoiseKind {
    pub fn p(&self) -> f64 {
        match *self {
            NoiseKind::StandardDepolarizing(p) | NoiseKind::CircuitLevel(p) => p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Channel {
    Depol1(f64),
    Depol2(f64),
    MeasureFlip(f64),
}

impl Channel {
    /// Every nontrivial Pauli the channel can emit, with its probability.
    pub fn outcomes(&self, q: Dim) -> Vec<(PauliString, f64)> {
        let qq = q.q();
        match *self {
            Channel::Depol1(p) => (1..qq * qq)
                .map(|k| {
                    let mut s = PauliString::identity(q, 1);
                    s.set_site(0, k / qq, k % qq);
                    (s, p / (qq * qq) as f64)
                })
                .collect(),
            Channel::Depol2(p) => (1..qq.pow(4))
                .map(|k| {
                    let mut s = PauliString::identity(q, 2);
                    s.set_site(0, k % qq, (k / qq) % qq);
                    s.set_site(1, (k / qq.pow(2)) % qq, k / qq.pow(3));
                    (s, p / qq.pow(4) as f64)
                })
                .collect(),
            Channel::MeasureFlip(p) => vec![(PauliString::single(q, 1, 0, 1, 0), p)],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, q: Dim, rng: &mut R) -> PauliString {
        match *self {
            Channel::Depol1(p) => sample_depol1(p, q, rng),
            Channel::Depol2(p) => sample_depol2(p, q, rng),
            Channel::MeasureFlip(p) => sample_measure_flip(p, q, rng),
        }
    }

    /// The channel's draw given that it fired; may still be the identity.
    pub fn sample_fired<R: Rng + ?Sized>(&self, q: Dim, rng: &mut R) -> PauliString {
        match *self {
            Channel::Depol1(_) => sample_depol1(1.0, q, rng),
            Channel::Depol2(_) => sample_depol2(1.0, q, rng),
            Channel::MeasureFlip(_) => sample_measure_flip(1.0, q, rng),
        }
    }

    pub fn arity(&self) -> usize {
        if matches!(self, Channel::Depol2(_)) {
            2
        } else {
            1
        }
    }
}

/// A place where the model may inject a fault, acting just before `moment`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultLocation {
    pub moment: usize,
    pub targets: Vec<usize>,
    pub channel: Channel,
}

/// A sampled, nontrivial fault.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultEvent {
    pub moment: usize,
    pub targets: Vec<usize>,
    pub pauli: PauliString,
}

/// All fault locations of `model` on a scheduled circuit.
pub fn fault_locations(circuit: &Circuit, model: &NoiseModel) -> Result<Vec<FaultLocation>> {
    if !circuit.scheduled {
        return Err(Error::Unscheduled);
    }
    if circuit.dim != model.dim {
        return Err(Error::DimMismatch(circuit.dim.q(), model.dim.q()));
    }
    let mut locs = Vec::new();
    match model.kind {
        NoiseKind::StandardDepolarizing(p) => {
            if circuit.cycle_starts.is_empty() {
                return Err(Error::Config("standard depolarizing noise needs marked cycles".into()));
            }
            if p == 0.0 {
                return Ok(locs);
            }
            for &start in &circuit.cycle_starts {
                for &d in &circuit.data {
                    locs.push(FaultLocation { moment: start, targets: vec![d], channel: Channel::Depol1(p) });
                }
            }
        }
        NoiseKind::CircuitLevel(p) => {
            if p == 0.0 {
                return Ok(locs);
            }
            let noisy = match (circuit.cycle_starts.first(), circuit.cycle_starts.last()) {
                (Some(&a), Some(&b)) if circuit.cycle_starts.len() > 1 => a..b,
                (Some(_), _) => 0..0,
                _ => 0..circuit.moments.len(),
            };
            for m in noisy {
                for ins in &circuit.moments[m].ops {
                    let ch = match &ins.op {
                        Op::Gate(k) if k.arity() == 1 => Channel::Depol1(p),
                        Op::Gate(_) => Channel::Depol2(p),
                        Op::Idle => Channel::Depol1(p),
                        Op::Measure => {
                            locs.push(FaultLocation {
                                moment: m,
                                targets: ins.targets.clone(),
                                channel: Channel::MeasureFlip(p),
                            });
                            continue;
                        }
                        _ => continue,
                    };
                    locs.push(FaultLocation { moment: m + 1, targets: ins.targets.clone(), channel: ch });
                }
            }
        }
    }
    Ok(locs)
}

/// Samples each location once and keeps the nontrivial outcomes.
pub fn sample_faults<R: Rng + ?Sized>(locs: &[FaultLocation], q: Dim, rng: &mut R) -> Vec<FaultEvent> {
    locs.iter()
        .filter_map(|l| {
            let pauli = l.channel.sample(q, rng);
            (!pauli.is_trivial()).then(|| FaultEvent { moment: l.moment, targets: l.targets.clone(), pauli })
        })
        .collect()
}

/// Inserts `PAULI` noise tags for `faults` into a copy of `circuit`.
///
/// A fault before moment `m > 0` joins the noise of moment `m - 1`; faults
/// before moment 0 get a leading noise-only moment.
pub fn insert_faults(circuit: &Circuit, faults: &[FaultEvent]) -> Circuit {
    let mut out = circuit.clone();
    let mut lead = Moment::default();
    for f in faults {
        let powers = (0..f.targets.len()).map(|j| (f.pauli.x(j), f.pauli.z(j))).collect();
        let ins = Instruction::new(Op::Pauli(powers), &f.targets);
        if f.moment == 0 {
            lead.noise.push(ins);
        } else {
            out.moments[f.moment - 1].noise.push(ins);
        }
    }
    if !lead.is_empty() {
        out.moments.insert(0, lead);
        for c in out.cycle_starts.iter_mut().skip(1) {
            *c += 1;
        }
        if out.cycle_starts.first().is_some_and(|&c| c > 0) {
            out.cycle_starts[0] += 1;
        }
    }
    out
}

/// Samples the model on `circuit`, returning the faulty circuit and its faults.
pub fn instrument<R: Rng + ?Sized>(
    circuit: &Circuit,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<(Circuit, Vec<FaultEvent>)> {
    let locs = fault_locations(circuit, model)?;
    let faults = sample_faults(&locs, model.dim, rng);
    Ok((insert_faults(circuit, &faults), faults))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(q: u32) -> Dim {
        Dim::new(q).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(sample_depol1(0.0, d(3), &mut rng).is_identity());
            assert!(sample_depol2(0.0, d(3), &mut rng).is_identity());
            assert!(sample_measure_flip(0.0, d(3), &mut rng).is_identity());
        }
    }

    #[test]
    fn full_flip_is_single_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let s = sample_measure_flip(1.0, d(3), &mut rng);
            assert_eq!((s.x(0), s.z(0)), (1, 0));
        }
    }

    #[test]
    fn channel_outcomes_sum_to_total_weight() {
        for q in [2, 3, 5] {
            let dq = d(q);
            let w1: f64 = Channel::Depol1(0.3).outcomes(dq).iter().map(|o| o.1).sum();
            assert!((w1 - 0.3 * (q * q - 1) as f64 / (q * q) as f64).abs() < 1e-12);
            let o2 = Channel::Depol2(0.3).outcomes(dq);
            assert_eq!(o2.len() as u32, q.pow(4) - 1);
        }
    }
}
