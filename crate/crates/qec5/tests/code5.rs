use qec5::backends::{stabilizer_expectation, sv_run};
use qec5::code5::*;
use qec5::detector_graph::DetectorModel;
use qec5::noise::{NoiseKind, NoiseModel};
use qec5::{conjugate, pauli_mul, Circuit, Dim, PauliString};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn d(q: u32) -> Dim {
    Dim::new(q).unwrap()
}

#[test]
fn counting_bounds() {
    assert!(qhb_holds(5, d(2)));
    assert!(!qhb_holds(4, d(2)));
    assert!(qhb_holds(5, d(7)));
    assert!(qsb_holds(5, 1, 3));
    assert!(!qsb_holds(4, 1, 3));
    assert!(qsb_holds(7, 1, 3));
}

#[test]
fn printed_rows() {
    let h2 = build_check_matrix(d(2));
    let row = |h: &CheckMatrix, i: usize| -> (Vec<u32>, Vec<u32>) {
        let s = h.stabilizer(i);
        (s.zs().to_vec(), s.xs().to_vec())
    };
    assert_eq!(row(&h2, 0), (vec![0, 0, 1, 0, 1], vec![1, 1, 0, 0, 0]));
    let h3 = build_check_matrix(d(3));
    assert_eq!(row(&h3, 1), (vec![1, 0, 0, 2, 0], vec![0, 1, 2, 0, 0]));
}

fn encoded_zero(q: Dim) -> qec5::backends::StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    sv_run(&build_encoder(q), &mut rng).unwrap().0
}

#[test]
fn logical_z_fixes_encoded_zero() {
    for q in [2, 3, 5] {
        let q = d(q);
        let before = encoded_zero(q);
        let mut c = build_encoder(q);
        for m in build_logical(q, Logical::Z).moments {
            c.push_moment(m).unwrap();
        }
        let after = sv_run(&c, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().0;
        let overlap: num_complex::Complex64 = before.amps.iter().zip(&after.amps).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-9);
        let zl = build_check_matrix(q).logical_z();
        assert!((stabilizer_expectation(&before, &zl).unwrap().norm() - 1.0).abs() < 1e-9);
    }
}

fn through(c: &Circuit, p: &PauliString) -> PauliString {
    c.moments.iter().flat_map(|m| m.ops.iter()).fold(p.clone(), |acc, ins| match ins.op {
        qec5::Op::Gate(k) => conjugate(k, &ins.targets, &acc).unwrap(),
        _ => acc,
    })
}

#[test]
fn logical_t_cycles_the_logical_axes() {
    for q in [2, 3, 5] {
        let q = d(q);
        let h = build_check_matrix(q);
        let t = build_logical(q, Logical::T);
        let xl = h.logical_x();
        let once = through(&t, &xl);
        let thrice = through(&t, &through(&t, &once));
        assert_ne!(once.phaseless(), xl.phaseless());
        assert_eq!(thrice.phaseless(), xl.phaseless());
    }
}

#[test]
fn t3_maps_x_to_xyz() {
    let q = d(3);
    let c = build_logical(q, Logical::T3);
    // X on every qudit of the block entering on wire 2 (the first logical)
    let mut p = PauliString::identity(q, 15);
    for j in 0..5 {
        p.set_site(10 + j, 1, 0);
    }
    let img = through(&c, &p);
    let kind = |b: usize| (img.x(5 * b) != 0, img.z(5 * b) != 0);
    assert_eq!([kind(0), kind(1), kind(2)], [(true, false), (true, true), (false, true)]);
}

/// Smallest weight in the stabilizer coset of `e`.
fn min_weight(e: &PauliString, h: &CheckMatrix) -> usize {
    let q = e.dim().q();
    let gens = h.stabilizers();
    (0..q.pow(4))
        .map(|k| {
            let mut p = e.clone();
            let mut k = k;
            for g in &gens {
                for _ in 0..k % q {
                    p = pauli_mul(&p, g).unwrap();
                }
                k /= q;
            }
            p.weight()
        })
        .min()
        .unwrap()
}

#[test]
fn every_hook_raises_a_flag() {
    for qv in [2, 3] {
        let q = d(qv);
        let h = build_check_matrix(q);
        let c = memory_circuit(q, 2, true).unwrap();
        let m = DetectorModel::build(&c, &NoiseModel::new(NoiseKind::CircuitLevel(0.01), q).unwrap(), &h).unwrap();
        let mut hooks = 0;
        for (li, p, _) in m.single_faults() {
            let e = m.effect(li, &p);
            let data = PauliString::from_powers(q, e.data[..5].to_vec(), e.data[5..].to_vec()).unwrap();
            if min_weight(&data, &h) > 1 {
                hooks += 1;
                assert!(!e.flags.is_empty(), "q={qv} location {li} {p} leaves {data} unflagged");
            }
        }
        assert!(hooks > 0);
    }
}
