//! The generalized Clifford gate set as unitaries and as symplectic actions.

use crate::error::{Error, Result};
use crate::field::Dim;
use crate::matrix::CMatrix;
use crate::pauli::{commutation_phase, pauli_mul, PauliString};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    Z,
    S,
    F,
    Sum,
    M,
    Finv,
    Sinv,
    SumInv,
    Minv,
    Xpow(u32),
    Zpow(u32),
}

impl GateKind {
    pub const ALL_BASIC: [GateKind; 10] = [
        GateKind::X,
        GateKind::Z,
        GateKind::S,
        GateKind::F,
        GateKind::Sum,
        GateKind::M,
        GateKind::Finv,
        GateKind::Sinv,
        GateKind::SumInv,
        GateKind::Minv,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Sum | GateKind::SumInv => 2,
            _ => 1,
        }
    }

    pub fn inverse(self, q: Dim) -> GateKind {
        use GateKind::*;
        match self {
            X => Xpow(q.q() - 1),
            Z => Zpow(q.q() - 1),
            S => Sinv,
            Sinv => S,
            F => Finv,
            Finv => F,
            Sum => SumInv,
            SumInv => Sum,
            M => Minv,
            Minv => M,
            Xpow(k) => Xpow(q.neg(k)),
            Zpow(k) => Zpow(q.neg(k)),
        }
    }

    pub fn mnemonic(self) -> String {
        use GateKind::*;
        match self {
            X => "X".into(),
            Z => "Z".into(),
            S => "S".into(),
            F => "F".into(),
            Sum => "SUM".into(),
            M => "M".into(),
            Finv => "F_DAG".into(),
            Sinv => "S_DAG".into(),
            SumInv => "SUM_DAG".into(),
            Minv => "M_DAG".into(),
            Xpow(k) => format!("X^{k}"),
            Zpow(k) => format!("Z^{k}"),
        }
    }

    /// True for gates whose conjugation action is a pure phase (Pauli gates).
    pub fn is_pauli(self) -> bool {
        matches!(self, GateKind::X | GateKind::Z | GateKind::Xpow(_) | GateKind::Zpow(_))
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.mnemonic())
    }
}

impl FromStr for GateKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<GateKind, String> {
        use GateKind::*;
        let k = match s {
            "X" => X,
            "Z" => Z,
            "S" => S,
            "F" => F,
            "SUM" => Sum,
            "M" => M,
            "F_DAG" => Finv,
            "S_DAG" => Sinv,
            "SUM_DAG" => SumInv,
            "M_DAG" => Minv,
            _ => {
                let pow = |t: &str| t.parse::<u32>().map_err(|_| format!("bad power in `{s}`"));
                if let Some(t) = s.strip_prefix("X^") {
                    Xpow(pow(t)?)
                } else if let Some(t) = s.strip_prefix("Z^") {
                    Zpow(pow(t)?)
                } else {
                    return Err(format!("unknown gate `{s}`"));
                }
            }
        };
        Ok(k)
    }
}

fn phase_half(q: u32, x2: i64) -> Complex64 {
    // omega^(x2/2) = exp(i pi x2 / q)
    Complex64::from_polar(1.0, PI * x2 as f64 / q as f64)
}

/// Exact unitary; for two-qudit gates the control is the low-order digit.
pub fn gate_unitary(kind: GateKind, q: Dim) -> CMatrix {
    use GateKind::*;
    let qq = q.q() as usize;
    let qi = q.q() as i64;
    let one = Complex64::new(1.0, 0.0);
    match kind {
        X | Xpow(_) => {
            let k = if let Xpow(k) = kind { k as usize } else { 1 };
            let mut m = CMatrix::zeros(qq);
            for n in 0..qq {
                m.set((n + k) % qq, n, one);
            }
            m
        }
        Z | Zpow(_) => {
            let k = if let Zpow(k) = kind { k as i64 } else { 1 };
            let mut m = CMatrix::zeros(qq);
            for n in 0..qq {
                m.set(n, n, phase_half(q.q(), 2 * k * n as i64));
            }
            m
        }
        S | Sinv => {
            let zpow = if qi % 2 == 0 { 1 + qi / 2 } else { (1 + qi) / 2 };
            let mut m = CMatrix::zeros(qq);
            for n in 0..qq as i64 {
                let x2 = 2 * zpow * n + n * (n - qi - 2);
                m.set(n as usize, n as usize, phase_half(q.q(), x2));
            }
            if kind == Sinv {
                m.adjoint()
            } else {
                m
            }
        }
        F | Finv => {
            let mut m = CMatrix::zeros(qq);
            let norm = 1.0 / (qq as f64).sqrt();
            for n in 0..qq {
                for k in 0..qq {
                    m.set(k, n, phase_half(q.q(), 2 * (n * k % qq) as i64) * norm);
                }
            }
            if kind == Finv {
                m.adjoint()
            } else {
                m
            }
        }
        M | Minv => {
            let mut m = CMatrix::zeros(qq);
            for n in 0..qq {
                m.set((n * (qq - 1)) % qq, n, one);
            }
            m
        }
        Sum | SumInv => {
            let mut m = CMatrix::zeros(qq * qq);
            for c in 0..qq {
                for t in 0..qq {
                    let nt = if kind == Sum { (t + c) % qq } else { (t + qq - c) % qq };
                    m.set(c + qq * nt, c + qq * t, one);
                }
            }
            m
        }
    }
}

/// Images of the generators `X_0, Z_0, X_1, Z_1, ...` under conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct GateAction {
    pub kind: GateKind,
    pub dim: Dim,
    pub images: Vec<PauliString>,
}

impl GateAction {
    pub fn new(kind: GateKind, q: Dim) -> GateAction {
        use GateKind::*;
        let qu = q.q();
        let neg = |v: u32| q.neg(v);
        let p1 = |r: u32, s: u32, h: u32| PauliString::single(q, 1, 0, r, s).with_half_phase(h);
        let p2 = |xs: [u32; 2], zs: [u32; 2]| PauliString::from_powers(q, xs.to_vec(), zs.to_vec()).unwrap();
        // half-phase of the S image of X: i at q = 2, trivial otherwise
        let s_half = if qu == 2 { 1 } else { 0 };
        let images = match kind {
            X | Xpow(_) => {
                let k = if let Xpow(k) = kind { k % qu } else { 1 };
                vec![p1(1, 0, 0), p1(0, 1, 2 * neg(k))]
            }
            Z | Zpow(_) => {
                let k = if let Zpow(k) = kind { k % qu } else { 1 };
                vec![p1(1, 0, 2 * k), p1(0, 1, 0)]
            }
            F => vec![p1(0, 1, 0), p1(neg(1), 0, 0)],
            Finv => vec![p1(0, neg(1), 0), p1(1, 0, 0)],
            M | Minv => vec![p1(neg(1), 0, 0), p1(0, neg(1), 0)],
            S => vec![p1(1, 1, s_half), p1(0, 1, 0)],
            Sinv => vec![p1(1, neg(1), (2 * qu - s_half) % (2 * qu)), p1(0, 1, 0)],
            Sum => vec![
                p2([1, 1], [0, 0]),
                p2([0, 0], [1, 0]),
                p2([0, 1], [0, 0]),
                p2([0, 0], [neg(1), 1]),
            ],
            SumInv => vec![
                p2([1, neg(1)], [0, 0]),
                p2([0, 0], [1, 0]),
                p2([0, 1], [0, 0]),
                p2([0, 0], [1, 1]),
            ],
        };
        GateAction { kind, dim: q, images }
    }

    pub fn arity(&self) -> usize {
        self.images.len() / 2
    }

    /// Phaseless update of per-site powers, the Pauli-frame fast path.
    #[inline]
    pub fn apply_frame(&self, xs: &mut [u32], zs: &mut [u32], targets: &[usize]) {
        let d = self.dim;
        let a = self.arity();
        let mut nx = [0u32; 2];
        let mut nz = [0u32; 2];
        for j in 0..a {
            let (r, s) = (xs[targets[j]], zs[targets[j]]);
            if r == 0 && s == 0 {
                continue;
            }
            let ix = &self.images[2 * j];
            let iz = &self.images[2 * j + 1];
            for k in 0..a {
                nx[k] = d.add(nx[k], d.add(d.mul(r, ix.x(k)), d.mul(s, iz.x(k))));
                nz[k] = d.add(nz[k], d.add(d.mul(r, ix.z(k)), d.mul(s, iz.z(k))));
            }
        }
        for k in 0..a {
            xs[targets[k]] = nx[k];
            zs[targets[k]] = nz[k];
        }
    }

    /// Exact image of an `arity`-site string.
    pub fn conjugate_local(&self, p: &PauliString) -> PauliString {
        let a = self.arity();
        let mut acc = PauliString::identity(self.dim, a).with_half_phase(p.half_phase());
        for j in 0..a {
            acc = pauli_mul(&acc, &self.images[2 * j].pow(p.x(j))).unwrap();
            acc = pauli_mul(&acc, &self.images[2 * j + 1].pow(p.z(j))).unwrap();
        }
        acc
    }
}

/// `G p G^dagger` with `G` acting on `targets`.
pub fn conjugate(kind: GateKind, targets: &[usize], p: &PauliString) -> Result<PauliString> {
    if targets.len() != kind.arity() {
        return Err(Error::Arity { kind: kind.mnemonic(), expected: kind.arity(), got: targets.len() });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= p.len()) {
        return Err(Error::TargetRange(t));
    }
    let action = GateAction::new(kind, p.dim());
    let local = p.restrict(targets).phaseless();
    let img = action.conjugate_local(&local);
    let mut out = p.clone();
    for (j, &t) in targets.iter().enumerate() {
        out.set_site(t, img.x(j), img.z(j));
    }
    Ok(out.with_half_phase(p.half_phase() + img.half_phase()))
}

fn generators(q: Dim, a: usize) -> Vec<PauliString> {
    (0..a).flat_map(|j| [PauliString::single(q, a, j, 1, 0), PauliString::single(q, a, j, 0, 1)]).collect()
}

/// Checks the commutation structure of the images and the matrix oracle (q <= 7).
pub fn verify_symplectic(action: &GateAction) -> bool {
    let a = action.arity();
    let q = action.dim;
    if action.images.len() != 2 * a || action.kind.arity() != a {
        return false;
    }
    let gens = generators(q, a);
    for i in 0..gens.len() {
        for j in 0..gens.len() {
            let want = commutation_phase(&gens[i], &gens[j]).unwrap();
            match commutation_phase(&action.images[i], &action.images[j]) {
                Ok(got) if got == want => {}
                _ => return false,
            }
        }
    }
    if q.q() <= 7 {
        let u = gate_unitary(action.kind, q);
        let ud = u.adjoint();
        for (g, img) in gens.iter().zip(&action.images) {
            let lhs = &(&u * &g.unitary()) * &ud;
            if !lhs.approx_eq(&img.unitary(), 1e-10) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const QS: [u32; 4] = [2, 3, 5, 7];

    fn all_kinds(q: Dim) -> Vec<GateKind> {
        let mut v = GateKind::ALL_BASIC.to_vec();
        for k in 0..q.q() {
            v.push(GateKind::Xpow(k));
            v.push(GateKind::Zpow(k));
        }
        v
    }

    #[test]
    fn unitary_examples() {
        let q2 = Dim::new(2).unwrap();
        let h = gate_unitary(GateKind::F, q2);
        let r = 1.0 / 2f64.sqrt();
        let want = [r, r, r, -r];
        for (i, w) in want.iter().enumerate() {
            assert!((h.data[i] - Complex64::new(*w, 0.0)).norm() < 1e-12);
        }
        assert!(gate_unitary(GateKind::M, q2).approx_eq(&CMatrix::identity(2), 0.0));
        let q3 = Dim::new(3).unwrap();
        let sum = gate_unitary(GateKind::Sum, q3);
        // |1>_c |1>_t = index 1 + 3*1 -> |1>|2> = index 1 + 3*2
        assert_eq!(sum.get(7, 4), Complex64::new(1.0, 0.0));
        let s2 = gate_unitary(GateKind::S, q2);
        assert!((s2.get(1, 1) - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn every_action_is_symplectic_and_matches_oracle() {
        for q in QS {
            let d = Dim::new(q).unwrap();
            for k in all_kinds(d) {
                assert!(verify_symplectic(&GateAction::new(k, d)), "{k} at q={q}");
            }
        }
    }

    #[test]
    fn corrupted_action_rejected() {
        let d = Dim::new(3).unwrap();
        let mut a = GateAction::new(GateKind::Sum, d);
        a.images[2] = PauliString::identity(d, 2);
        assert!(!verify_symplectic(&a));
    }

    #[test]
    fn conjugation_examples() {
        let d = Dim::new(3).unwrap();
        let x = PauliString::single(d, 1, 0, 1, 0);
        assert_eq!(conjugate(GateKind::F, &[0], &x).unwrap(), PauliString::single(d, 1, 0, 0, 1));
        let xi = PauliString::parse(d, "X1 I").unwrap();
        assert_eq!(conjugate(GateKind::Sum, &[0, 1], &xi).unwrap().to_string(), "X1 X1");
        let iz = PauliString::parse(d, "I Z1").unwrap();
        assert_eq!(conjugate(GateKind::Sum, &[0, 1], &iz).unwrap().to_string(), "Z2 Z1");
        assert!(matches!(conjugate(GateKind::Sum, &[0], &iz), Err(Error::Arity { .. })));
        assert!(matches!(conjugate(GateKind::F, &[4], &iz), Err(Error::TargetRange(4))));
    }

    #[test]
    fn s_maps_x_to_y_type() {
        for q in QS {
            let d = Dim::new(q).unwrap();
            let x = PauliString::single(d, 1, 0, 1, 0);
            let img = conjugate(GateKind::S, &[0], &x).unwrap();
            assert_eq!((img.x(0), img.z(0)), (1, 1));
        }
        // exactly Y = iXZ at q = 2
        let d = Dim::new(2).unwrap();
        let y = conjugate(GateKind::S, &[0], &PauliString::single(d, 1, 0, 1, 0)).unwrap();
        assert_eq!(y.to_string(), "z^1 X1.Z1");
    }

    #[test]
    fn t_cycles_heisenberg_weyl_axes() {
        // T = S F, so F acts first.
        for q in QS {
            let d = Dim::new(q).unwrap();
            let t = |p: &PauliString| {
                let f = conjugate(GateKind::F, &[0], p).unwrap();
                conjugate(GateKind::S, &[0], &f).unwrap()
            };
            let axis = |p: &PauliString| -> (u32, u32) {
                // normalize the first nonzero power to 1
                let (r, s) = (p.x(0), p.z(0));
                let lead = if r != 0 { r } else { s };
                let inv = d.inv(lead).unwrap();
                (d.mul(r, inv), d.mul(s, inv))
            };
            let x = PauliString::single(d, 1, 0, 1, 0);
            let t1 = t(&x);
            let t2 = t(&t1);
            let t3 = t(&t2);
            assert_eq!(axis(&t1), (0, 1));
            assert_eq!(axis(&t2), (1, 1));
            assert_eq!(axis(&t3), (1, 0));
        }
    }

    #[test]
    fn group_identities() {
        for q in QS {
            let d = Dim::new(q).unwrap();
            let id1 = CMatrix::identity(q as usize);
            let f = gate_unitary(GateKind::F, d);
            let f4 = &(&f * &f) * &(&f * &f);
            assert!(f4.approx_eq_up_to_phase(&id1, 1e-10));
            let s = gate_unitary(GateKind::S, d);
            assert!((&s * &gate_unitary(GateKind::Sinv, d)).approx_eq(&id1, 1e-10));
            let m = gate_unitary(GateKind::M, d);
            assert!((&m * &m).approx_eq(&id1, 1e-10));
            let sum = gate_unitary(GateKind::Sum, d);
            let mut acc = CMatrix::identity((q * q) as usize);
            for _ in 0..q {
                acc = &acc * &sum;
            }
            assert!(acc.approx_eq(&CMatrix::identity((q * q) as usize), 1e-10));
            for k in all_kinds(d) {
                let u = gate_unitary(k, d);
                let ui = gate_unitary(k.inverse(d), d);
                assert!((&u * &ui).approx_eq_up_to_phase(&CMatrix::identity(u.n), 1e-10));
            }
        }
    }

    #[test]
    fn mnemonics_round_trip() {
        let d = Dim::new(5).unwrap();
        for k in all_kinds(d) {
            assert_eq!(k.mnemonic().parse::<GateKind>().unwrap(), k);
        }
        assert!("H".parse::<GateKind>().is_err());
    }

    fn arb_case() -> impl Strategy<Value = (u32, usize, u32, u32, u32, u32, u32)> {
        (prop_oneof![Just(2u32), Just(3), Just(5), Just(7)], 0usize..12)
            .prop_flat_map(|(q, k)| (Just(q), Just(k), 0..q, 0..q, 0..q, 0..q, 0..2 * q))
    }

    proptest! {
        #[test]
        fn conjugate_matches_matrix((q, ki, r0, s0, r1, s1, h) in arb_case()) {
            let d = Dim::new(q).unwrap();
            let kinds = all_kinds(d);
            let kind = kinds[ki % kinds.len()];
            let p = PauliString::from_powers(d, vec![r0, r1], vec![s0, s1]).unwrap().with_half_phase(h);
            let targets: Vec<usize> = if kind.arity() == 2 { vec![0, 1] } else { vec![1] };
            let img = conjugate(kind, &targets, &p).unwrap();
            let u = gate_unitary(kind, d);
            let full = if kind.arity() == 2 { u } else { u.kron(&CMatrix::identity(q as usize)) };
            let lhs = &(&full * &p.unitary()) * &full.adjoint();
            prop_assert!(lhs.approx_eq(&img.unitary(), 1e-10));
            if kind.arity() == 1 {
                prop_assert_eq!((img.x(0), img.z(0)), (r0, s0));
            }
        }

        #[test]
        fn frame_update_matches_conjugate((q, ki, r0, s0, r1, s1, _h) in arb_case()) {
            let d = Dim::new(q).unwrap();
            let kinds = all_kinds(d);
            let kind = kinds[ki % kinds.len()];
            let p = PauliString::from_powers(d, vec![r0, r1], vec![s0, s1]).unwrap();
            let targets: Vec<usize> = if kind.arity() == 2 { vec![1, 0] } else { vec![0] };
            let img = conjugate(kind, &targets, &p).unwrap();
            let mut xs = vec![r0, r1];
            let mut zs = vec![s0, s1];
            GateAction::new(kind, d).apply_frame(&mut xs, &mut zs, &targets);
            prop_assert_eq!(xs, img.xs().to_vec());
            prop_assert_eq!(zs, img.zs().to_vec());
        }
    }
}
