use qec5::code5::build_check_matrix;
use qec5::{commutation_phase, mod_inverse, pauli_mul, syndrome_of, Dim, PauliString};

fn d(q: u32) -> Dim {
    Dim::new(q).unwrap()
}

fn p(q: u32, text: &str) -> PauliString {
    PauliString::parse(d(q), text).unwrap()
}

#[test]
fn dimension_must_be_prime() {
    assert!(Dim::new(4).is_err());
    assert!(Dim::new(1).is_err());
    assert!(Dim::new(7).is_ok());
}

#[test]
fn inverses() {
    assert_eq!(mod_inverse(1, d(5)).unwrap(), 1);
    assert_eq!(mod_inverse(2, d(5)).unwrap(), 3);
    assert_eq!(mod_inverse(4, d(7)).unwrap(), 2);
    assert!(mod_inverse(0, d(7)).is_err());
}

#[test]
fn products_normal_order() {
    let xz = pauli_mul(&p(2, "X1"), &p(2, "Z1")).unwrap();
    assert_eq!((xz.x(0), xz.z(0), xz.phase()), (1, 1, Some(0)));
    let zx = pauli_mul(&p(2, "Z1"), &p(2, "X1")).unwrap();
    assert_eq!((zx.x(0), zx.z(0), zx.phase()), (1, 1, Some(1)));
    let id = pauli_mul(&p(3, "X2.Z2"), &p(3, "X1.Z1")).unwrap();
    assert!(id.phaseless().is_identity());
    // oracle: the explicit matrices
    let m = &p(3, "X2.Z2").unitary() * &p(3, "X1.Z1").unitary();
    assert!(m.approx_eq(&id.unitary(), 1e-12));
}

#[test]
fn commutation_values() {
    let a = p(3, "X1.Z2");
    assert_eq!(commutation_phase(&a, &a).unwrap(), 0);
    assert_eq!(commutation_phase(&p(2, "X1"), &p(2, "Z1")).unwrap(), 1);
    assert_eq!(commutation_phase(&a, &p(3, "X2")).unwrap(), 1);
}

#[test]
fn syndromes_of_the_code() {
    let h = build_check_matrix(d(2));
    let checks = h.stabilizers();
    assert_eq!(syndrome_of(&PauliString::identity(d(2), 5), &checks).unwrap(), vec![0; 4]);
    let s = syndrome_of(&PauliString::single(d(2), 5, 0, 1, 0), &checks).unwrap();
    let z_on_0: Vec<u32> = checks.iter().map(|g| u32::from(g.z(0) != 0)).collect();
    assert_eq!(s, z_on_0);
    let h3 = build_check_matrix(d(3));
    let one = h3.syndrome(&PauliString::single(d(3), 5, 2, 0, 1));
    let two = h3.syndrome(&PauliString::single(d(3), 5, 2, 0, 2));
    assert_eq!(two, one.iter().map(|v| 2 * v % 3).collect::<Vec<_>>());
}

#[test]
fn parse_and_display_round_trip() {
    for text in ["I X1 Z2 X1.Z1 I", "X2.Z2"] {
        assert_eq!(p(3, text).to_string(), text);
    }
    assert!(PauliString::parse(d(3), "Q1").is_err());
    assert!(p(3, "X3").is_identity());
}
