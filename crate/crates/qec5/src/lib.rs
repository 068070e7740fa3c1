//! Simulation and decoding toolkit for the five-qudit perfect code `[[5,1,3]]_q`
//! in prime dimension `q`.

pub mod backends;
pub mod circuit;
pub mod code5;
pub mod decoders;
pub mod detector_graph;
pub mod error;
pub mod experiments;
pub mod field;
pub mod gates;
pub mod matrix;
pub mod noise;
pub mod pauli;

pub use error::{Error, Result};
pub use field::{mod_inverse, Dim};
pub use pauli::{commutation_phase, pauli_mul, syndrome_of, PauliString, SymplecticVector};
pub use gates::{conjugate, gate_unitary, verify_symplectic, GateAction, GateKind};
pub use circuit::{emit_circuit, parse_circuit, schedule, Circuit, Instruction, Moment, Op, Schedule};
