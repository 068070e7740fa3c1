//! The five-qudit perfect code: bounds, check matrix, encoder, syndrome
//! extraction cycles and transversal logical circuits.
//!
//! Register layout for extraction circuits: data qudits 0..5, ancilla for
//! stabilizer `i` at `5 + i`, flag qudit at 9.

use crate::circuit::{schedule, Circuit, Instruction, Op, Schedule};
use crate::error::Result;
use crate::field::{Dim, RowSpace};
use crate::gates::{conjugate, GateKind};
use crate::pauli::PauliString;

pub const N: usize = 5;
pub const K: usize = 1;
pub const D: usize = 3;
pub const N_CHECKS: usize = 4;
pub const FLAG_QUDIT: usize = 9;

pub fn ancilla(i: usize) -> usize {
    N + i
}

/// Quantum Hamming bound `q((q^2 - 1) n + 1) <= q^n`.
pub fn qhb_holds(n: u32, q: Dim) -> bool {
    let q = q.q() as u128;
    let lhs = q * ((q * q - 1) * n as u128 + 1);
    match q.checked_pow(n) {
        Some(rhs) => lhs <= rhs,
        None => true,
    }
}

/// Quantum Singleton bound `2(d - 1) + k <= n`.
pub fn qsb_holds(n: u32, k: u32, d: u32) -> bool {
    d >= 1 && 2 * (d - 1) + k <= n
}

/// The (Z|X) parity-check matrix; row `i` has X on sites `i`, `i+1` (power
/// 1, q-1) and Z on sites `i+2`, `i+4` (power q-1, 1), indices mod 5.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckMatrix {
    pub dim: Dim,
    pub z: [[u32; N]; N_CHECKS],
    pub x: [[u32; N]; N_CHECKS],
}

pub fn build_check_matrix(q: Dim) -> CheckMatrix {
    let m = q.q() - 1;
    CheckMatrix {
        dim: q,
        z: [[0, 0, m, 0, 1], [1, 0, 0, m, 0], [0, 1, 0, 0, m], [m, 0, 1, 0, 0]],
        x: [[1, m, 0, 0, 0], [0, 1, m, 0, 0], [0, 0, 1, m, 0], [0, 0, 0, 1, m]],
    }
}

impl CheckMatrix {
    pub fn stabilizer(&self, i: usize) -> PauliString {
        PauliString::from_powers(self.dim, self.x[i].to_vec(), self.z[i].to_vec()).unwrap()
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        (0..N_CHECKS).map(|i| self.stabilizer(i)).collect()
    }

    /// Row space of the stabilizers in (xs | zs) coordinates.
    pub fn row_space(&self) -> RowSpace {
        let rows: Vec<Vec<u32>> = self.stabilizers().iter().map(|s| s.symplectic().v).collect();
        RowSpace::from_rows(self.dim, 2 * N, &rows)
    }

    pub fn logical_x(&self) -> PauliString {
        PauliString::from_powers(self.dim, vec![1; N], vec![0; N]).unwrap()
    }

    pub fn logical_z(&self) -> PauliString {
        PauliString::from_powers(self.dim, vec![0; N], vec![1; N]).unwrap()
    }

    pub fn syndrome(&self, e: &PauliString) -> Vec<u32> {
        crate::pauli::syndrome_of(e, &self.stabilizers()).expect("five-site error")
    }

    /// Site `j` of row `i` as `(x power, z power)`.
    pub fn entry(&self, i: usize, j: usize) -> (u32, u32) {
        (self.x[i][j], self.z[i][j])
    }
}

type Step = (GateKind, Vec<usize>);

/// The forward reduction sequence G1..G9 in application order.
pub fn forward_sequence(q: Dim) -> Vec<Step> {
    use GateKind::*;
    let _ = q;
    let g = |k: GateKind, t: &[usize]| (k, t.to_vec());
    vec![
        // G1
        g(M, &[1]),
        g(F, &[2]),
        g(F, &[4]),
        g(M, &[4]),
        // G2
        g(SumInv, &[0, 1]),
        g(SumInv, &[0, 2]),
        g(SumInv, &[0, 4]),
        // G3
        g(M, &[1]),
        g(F, &[2]),
        g(F, &[3]),
        // G4
        g(SumInv, &[1, 2]),
        g(SumInv, &[1, 3]),
        // G5
        g(M, &[2]),
        g(F, &[3]),
        g(M, &[4]),
        // G6
        g(SumInv, &[2, 3]),
        g(SumInv, &[2, 4]),
        // G7
        g(M, &[3]),
        g(F, &[4]),
        // G8
        g(SumInv, &[3, 4]),
        // G9
        g(F, &[0]),
        g(F, &[1]),
        g(F, &[2]),
        g(F, &[3]),
    ]
}

/// Conjugates `p` through a gate sequence in application order.
pub fn conjugate_sequence(steps: &[Step], p: &PauliString) -> PauliString {
    steps.iter().fold(p.clone(), |acc, (k, t)| conjugate(*k, t, &acc).expect("valid step"))
}

/// Encoding circuit on five qudits; the logical input sits on qudit 4.
pub fn build_encoder(q: Dim) -> Circuit {
    let mut c = Circuit::new(q, N);
    for (k, t) in forward_sequence(q).iter().rev() {
        c.gate(k.inverse(q), t).expect("valid encoder gate");
    }
    c
}

/// Qudit index carrying the logical input of [`build_encoder`].
pub const LOGICAL_INPUT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    First,
    Second,
    Third,
    Last,
}

/// Coupling order of the flag-protected cycle: `(stabilizer, site, role)` in
/// program order. Each stabilizer couples sites `i+1, i+2, i+4, i`; the flag
/// window brackets the middle two couplings, and stabilizers are processed in
/// the order 0, 2, 1, 3 so that the four windows interleave with the outer
/// couplings of other stabilizers.
///
/// Reordering two stabilizers' couplings on a shared site leaves behind a
/// controlled phase between their ancillas, weighted by the local commutation
/// value on that site. For every pair, the local values over the sites where
/// the first stabilizer comes first must cancel, or the readout randomizes.
const COUPLINGS: [(usize, usize, Role); 16] = [
    (0, 1, Role::First),
    (0, 2, Role::Second),
    (0, 4, Role::Third),
    (2, 3, Role::First),
    (1, 2, Role::First),
    (2, 4, Role::Second),
    (0, 0, Role::Last),
    (2, 1, Role::Third),
    (1, 3, Role::Second),
    (2, 2, Role::Last),
    (3, 4, Role::First),
    (1, 0, Role::Third),
    (1, 1, Role::Last),
    (3, 0, Role::Second),
    (3, 2, Role::Third),
    (3, 3, Role::Last),
];

fn coupling_gate(power: u32, q: Dim) -> GateKind {
    if power == 1 {
        GateKind::Sum
    } else {
        debug_assert_eq!(power, q.q() - 1);
        GateKind::SumInv
    }
}

fn extraction_register(q: Dim, flagged: bool) -> Circuit {
    let mut c = Circuit::new(q, if flagged { N + N_CHECKS + 1 } else { N + N_CHECKS });
    c.data = (0..N).collect();
    if flagged {
        c.flags = vec![FLAG_QUDIT];
    }
    c
}

/// Unscheduled program of one optimized extraction cycle.
pub fn cycle_program(q: Dim, flagged: bool) -> Circuit {
    use GateKind::*;
    let h = build_check_matrix(q);
    let mut c = extraction_register(q, flagged);
    let mut z_frame = [false; N];
    let push = |c: &mut Circuit, op: Op, t: &[usize]| c.push(Instruction::new(op, t)).expect("valid");
    for &(i, site, role) in &COUPLINGS {
        let a = ancilla(i);
        if role == Role::First {
            push(&mut c, Op::Reset, &[a]);
            push(&mut c, Op::Gate(F), &[a]);
        }
        if role == Role::Second && flagged {
            push(&mut c, Op::Gate(Sum), &[a, FLAG_QUDIT]);
        }
        let (xp, zp) = h.entry(i, site);
        let wants_z = zp != 0;
        if wants_z != z_frame[site] {
            push(&mut c, Op::Gate(if wants_z { Finv } else { F }), &[site]);
            z_frame[site] = wants_z;
        }
        push(&mut c, Op::Gate(coupling_gate(xp.max(zp), q)), &[a, site]);
        if role == Role::Third && flagged {
            push(&mut c, Op::Gate(SumInv), &[a, FLAG_QUDIT]);
            push(&mut c, Op::Measure, &[FLAG_QUDIT]);
            push(&mut c, Op::Reset, &[FLAG_QUDIT]);
        }
        if role == Role::Last {
            push(&mut c, Op::Gate(Finv), &[a]);
            push(&mut c, Op::Measure, &[a]);
        }
    }
    for (site, &z) in z_frame.iter().enumerate() {
        if z {
            push(&mut c, Op::Gate(F), &[site]);
        }
    }
    c
}

/// One scheduled extraction cycle measuring all four stabilizers.
pub fn build_cycle(q: Dim, flagged: bool) -> Result<(Schedule, Circuit)> {
    let mut prog = cycle_program(q, flagged);
    prog.cycle_starts = vec![0];
    schedule(&prog)
}

/// The literal sequential cycle: all ancillas prepared up front, stabilizers
/// measured one after another with a basis change around every Z coupling.
pub fn cycle_program_sequential(q: Dim) -> Circuit {
    use GateKind::*;
    let h = build_check_matrix(q);
    let mut c = extraction_register(q, false);
    for i in 0..N_CHECKS {
        c.gate(F, &[ancilla(i)]).unwrap();
    }
    for i in 0..N_CHECKS {
        for site in [i, (i + 1) % N, (i + 2) % N, (i + 4) % N] {
            let (xp, zp) = h.entry(i, site);
            if zp != 0 {
                c.gate(Finv, &[site]).unwrap();
            }
            c.gate(coupling_gate(xp.max(zp), q), &[ancilla(i), site]).unwrap();
            if zp != 0 {
                c.gate(F, &[site]).unwrap();
            }
        }
    }
    for i in 0..N_CHECKS {
        c.gate(Finv, &[ancilla(i)]).unwrap();
        c.push(Instruction::new(Op::Measure, &[ancilla(i)])).unwrap();
    }
    c
}

/// Readout meaning of each measurement, in record order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Readout {
    Syndrome { check: usize, cycle: usize },
    Flag { check: usize, cycle: usize },
}

/// Classifies the measurements of an extraction circuit.
pub fn readout_layout(c: &Circuit) -> Vec<Readout> {
    let mut out = Vec::new();
    let mut last_flag_partner: Option<usize> = None;
    for (mi, m) in c.moments.iter().enumerate() {
        let cycle = c.cycle_of_moment(mi).unwrap_or(0);
        for ins in &m.ops {
            match ins.op {
                Op::Gate(GateKind::SumInv) | Op::Gate(GateKind::Sum) if c.flags.contains(&ins.targets[1]) => {
                    last_flag_partner = Some(ins.targets[0] - N);
                }
                Op::Measure => {
                    let t = ins.targets[0];
                    if c.flags.contains(&t) {
                        out.push(Readout::Flag { check: last_flag_partner.expect("flag coupled"), cycle });
                    } else if (N..N + N_CHECKS).contains(&t) {
                        out.push(Readout::Syndrome { check: t - N, cycle });
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Encoder followed by `cycles` copies of the scheduled extraction cycle.
pub fn memory_circuit(q: Dim, cycles: usize, flagged: bool) -> Result<Circuit> {
    encoded_memory(q, 0, cycles, flagged)
}

/// Like [`memory_circuit`], starting from the encoded basis state `|j>_L`.
pub fn encoded_memory(q: Dim, j: u32, cycles: usize, flagged: bool) -> Result<Circuit> {
    let (_, cyc) = build_cycle(q, flagged)?;
    let mut full = extraction_register(q, flagged);
    full.scheduled = true;
    if !j.is_multiple_of(q.q()) {
        full.gate(GateKind::Xpow(j % q.q()), &[LOGICAL_INPUT])?;
    }
    for m in build_encoder(q).moments {
        full.push_moment(m)?;
    }
    for _ in 0..cycles {
        full.append(&cyc);
    }
    Ok(full)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logical {
    X,
    Z,
    T,
    T3,
}

/// Transversal logical circuits. `T3` acts on three blocks of five qudits;
/// block `b` occupies qudits `5b..5b+5`.
pub fn build_logical(q: Dim, which: Logical) -> Circuit {
    use GateKind::*;
    match which {
        Logical::X | Logical::Z | Logical::T => {
            let mut c = Circuit::new(q, N);
            for j in 0..N {
                match which {
                    Logical::X => c.gate(X, &[j]).unwrap(),
                    Logical::Z => c.gate(Z, &[j]).unwrap(),
                    _ => {
                        c.gate(F, &[j]).unwrap();
                        c.gate(S, &[j]).unwrap();
                    }
                }
            }
            c
        }
        Logical::T3 => {
            let mut c = Circuit::new(q, 3 * N);
            for j in 0..N {
                let w = |b: usize| b * N + j;
                for (k, t) in t3_wire_sequence() {
                    let targets: Vec<usize> = t.iter().map(|&b| w(b)).collect();
                    c.gate(k, &targets).unwrap();
                }
            }
            c
        }
    }
}

/// The three-wire circuit applied blockwise by the T3 gate. Wire 0 enters as
/// the second logical and leaves as the first, wire 1 enters third and
/// leaves second, wire 2 enters first and leaves third. The two final
/// additions run with the inverse orientation, which makes the Pauli-type
/// pattern hold for every prime q.
pub fn t3_wire_sequence() -> Vec<(GateKind, Vec<usize>)> {
    use GateKind::*;
    let mut s: Vec<(GateKind, Vec<usize>)> = Vec::new();
    let mut g = |k: GateKind, t: &[usize]| s.push((k, t.to_vec()));
    let sfsf = |g: &mut dyn FnMut(GateKind, &[usize]), w: usize| {
        for k in [F, S, F, S] {
            g(k, &[w]);
        }
    };
    let sfsf_dag = |g: &mut dyn FnMut(GateKind, &[usize]), w: usize| {
        for k in [Sinv, Finv, Sinv, Finv] {
            g(k, &[w]);
        }
    };
    // Y on wires 0 and 2
    for w in [0, 2] {
        g(Z, &[w]);
        g(X, &[w]);
    }
    sfsf_dag(&mut g, 0);
    g(Sinv, &[0]);
    g(Sum, &[2, 0]);
    g(S, &[0]);
    sfsf(&mut g, 2);
    sfsf_dag(&mut g, 0);
    g(Sinv, &[2]);
    g(Sinv, &[0]);
    g(Sum, &[1, 0]);
    g(SumInv, &[2, 1]);
    g(SumInv, &[0, 2]);
    s
}

/// Input and output wire of logical `L_k` (k = 1, 2, 3) in [`t3_wire_sequence`].
pub const T3_IN_WIRE: [usize; 3] = [2, 0, 1];
pub const T3_OUT_WIRE: [usize; 3] = [0, 1, 2];
