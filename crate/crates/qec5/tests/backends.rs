use qec5::backends::{pf_run, stabilizer_expectation, sv_run, sv_run_from, EffectTable, StateVector};
use qec5::code5::{build_check_matrix, readout_layout, Readout, build_encoder, encoded_memory, memory_circuit, LOGICAL_INPUT};
use qec5::noise::{fault_locations, insert_faults, FaultEvent, NoiseKind, NoiseModel};
use qec5::{Circuit, Dim, GateKind, Instruction, Op, PauliString};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn d(q: u32) -> Dim {
    Dim::new(q).unwrap()
}

fn encoded(q: Dim, j: u32) -> StateVector {
    let mut c = Circuit::new(q, 5);
    if j > 0 {
        c.gate(GateKind::Xpow(j), &[LOGICAL_INPUT]).unwrap();
    }
    for m in build_encoder(q).moments {
        c.push_moment(m).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    sv_run(&c, &mut rng).unwrap().0
}

#[test]
fn encoded_basis_states_are_stabilized() {
    for q in [2, 3, 5] {
        let q = d(q);
        let h = build_check_matrix(q);
        for j in 0..q.q() {
            let st = encoded(q, j);
            for s in h.stabilizers() {
                let e = stabilizer_expectation(&st, &s).unwrap();
                assert!((e.re - 1.0).abs() < 1e-9 && e.im.abs() < 1e-9, "q={} j={j} {s}: {e}", q.q());
            }
        }
    }
}

#[test]
fn logical_z_reads_the_basis_label() {
    let q = d(3);
    let h = build_check_matrix(q);
    let zl = h.logical_z();
    let e0 = stabilizer_expectation(&encoded(q, 0), &zl).unwrap();
    for j in 0..3 {
        let e = stabilizer_expectation(&encoded(q, j), &zl).unwrap();
        // successive labels differ by a fixed cube root of unity
        let ratio = e / e0;
        let w = num_complex::Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let k = (0..3).find(|&k| (ratio - w.powu(k)).norm() < 1e-9);
        assert!(k.is_some(), "j={j} ratio={ratio}");
        assert!((e.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn noiseless_memory_reads_zero() {
    for q in [2, 3] {
        for flagged in [false, true] {
            let c = memory_circuit(d(q), 2, flagged).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let (_, rec) = sv_run(&c, &mut rng).unwrap();
            assert!(rec.iter().all(|&v| v == 0), "q={q} flagged={flagged}: {rec:?}");
            assert!(pf_run(&c, &mut rng).unwrap().shifts.iter().all(|&v| v == 0));
        }
    }
}

#[test]
fn data_error_lights_matching_checks() {
    let q = d(3);
    let h = build_check_matrix(q);
    let c = memory_circuit(q, 1, false).unwrap();
    let start = c.cycle_starts[0];
    for site in 0..5 {
        for (r, s) in [(1, 0), (0, 1), (1, 1), (2, 1)] {
            let e = PauliString::single(q, 5, site, r, s);
            let fault = FaultEvent { moment: start, targets: vec![site], pauli: PauliString::single(q, 1, 0, r, s) };
            let faulty = insert_faults(&c, &[fault]);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let (_, rec) = sv_run(&faulty, &mut rng).unwrap();
            let mut by_check = vec![0; 4];
            for (v, r) in rec.iter().zip(readout_layout(&c)) {
                if let Readout::Syndrome { check, .. } = r {
                    by_check[check] = *v;
                }
            }
            assert_eq!(by_check, h.syndrome(&e), "site {site} X^{r}Z^{s}");
        }
    }
}

#[test]
fn z_before_closing_rotation_shifts_one_readout() {
    let q = d(3);
    let c = memory_circuit(q, 2, false).unwrap();
    // the first F_DAG on ancilla 5 inside the first cycle
    let m = (c.cycle_starts[0]..c.moments.len())
        .find(|&m| c.moments[m].ops.iter().any(|i| i.op == Op::Gate(GateKind::Finv) && i.targets == vec![5]))
        .unwrap();
    let fault = FaultEvent { moment: m, targets: vec![5], pauli: PauliString::single(q, 1, 0, 0, 1) };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let run = pf_run(&insert_faults(&c, &[fault]), &mut rng).unwrap();
    let lit: Vec<usize> = (0..run.shifts.len()).filter(|&i| run.shifts[i] != 0).collect();
    assert_eq!(lit.len(), 1);
    assert_eq!(run.shifts[lit[0]], 1);
}

/// Random single faults over one noisy flag cycle, checked against the dense engine.
#[test]
fn frame_matches_state_vector_on_sampled_faults() {
    let q = d(3);
    let c = encoded_memory(q, 1, 2, true).unwrap();
    let model = NoiseModel::new(NoiseKind::CircuitLevel(0.01), q).unwrap();
    let locs = fault_locations(&c, &model).unwrap();
    let table = EffectTable::build(&c, &locs);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut base = StateVector::zero(q, c.n_qudits).unwrap();
    let prefix = Circuit { moments: c.moments[..c.cycle_starts[0]].to_vec(), ..c.clone() };
    sv_run_from(&mut base, &prefix, &mut rng).unwrap();
    let suffix = Circuit { moments: c.moments[c.cycle_starts[0]..].to_vec(), cycle_starts: vec![0], ..c.clone() };
    use rand::Rng;
    for _ in 0..60 {
        let li = rng.gen_range(0..locs.len());
        let outs = locs[li].channel.outcomes(q);
        let (pauli, _) = &outs[rng.gen_range(0..outs.len())];
        let f = FaultEvent { moment: locs[li].moment - c.cycle_starts[0], targets: locs[li].targets.clone(), pauli: pauli.clone() };
        let faulty = insert_faults(&suffix, &[f]);
        let mut st = base.clone();
        let rec = sv_run_from(&mut st, &faulty, &mut rng).unwrap();
        let pf = pf_run(&faulty, &mut rng).unwrap();
        assert_eq!(rec, pf.shifts, "location {li} {pauli}");
        let mut lin = vec![0; table.n_meas];
        let (mut fx, mut fz) = (vec![0; c.n_qudits], vec![0; c.n_qudits]);
        table.accumulate(li, pauli, &mut lin, &mut fx, &mut fz);
        assert_eq!(lin, pf.shifts);
        assert_eq!(fx, pf.frame.xs());
    }
}

#[test]
fn noise_tags_are_sampled_by_both_engines() {
    let q = d(2);
    let mut c = Circuit::new(q, 1);
    c.push(Instruction::new(Op::Measure, &[0])).unwrap();
    c.moments[0].noise.push(Instruction::new(Op::MeasureFlip(1.0), &[0]));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(sv_run(&c, &mut rng).unwrap().1, vec![1]);
    assert_eq!(pf_run(&c, &mut rng).unwrap().shifts, vec![1]);
}

#[test]
fn every_single_fault_agrees_at_q2() {
    let q = d(2);
    let c = encoded_memory(q, 1, 2, true).unwrap();
    let model = NoiseModel::new(NoiseKind::CircuitLevel(0.01), q).unwrap();
    let locs = fault_locations(&c, &model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (tried, bad) = qec5::backends::compare_single_faults(&c, &locs, &mut rng).unwrap();
    assert!(tried > 400);
    assert!(bad.is_empty(), "{:?}", bad.first());
}
