//! Generalized Pauli strings over Z_q with exact phase tracking.
//!
//! A string represents `zeta^h * X^r0 Z^s0 (x) X^r1 Z^s1 (x) ...` where
//! `zeta = exp(i*pi/q)`, so `omega = zeta^2`. Keeping the exponent modulo 2q
//! covers the `i` needed for Y at q = 2 and the signs produced by odd-q algebra.
//!
//! Text form: an optional phase token (`w^k` for omega^k, `z^h` for zeta^h)
//! followed by one token per site: `I`, `X<r>`, `Z<s>` or `X<r>.Z<s>`.
//! Example: `w^2 X2.Z1 I Z2`.

use crate::error::{Error, Result};
use crate::field::Dim;
use crate::matrix::CMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    dim: Dim,
    half_phase: u32,
    xs: Vec<u32>,
    zs: Vec<u32>,
}

impl PauliString {
    pub fn identity(dim: Dim, n: usize) -> PauliString {
        PauliString { dim, half_phase: 0, xs: vec![0; n], zs: vec![0; n] }
    }

    pub fn from_powers(dim: Dim, xs: Vec<u32>, zs: Vec<u32>) -> Result<PauliString> {
        if xs.len() != zs.len() {
            return Err(Error::LenMismatch(xs.len(), zs.len()));
        }
        let q = dim.q();
        Ok(PauliString {
            dim,
            half_phase: 0,
            xs: xs.into_iter().map(|x| x % q).collect(),
            zs: zs.into_iter().map(|z| z % q).collect(),
        })
    }

    /// `X^r Z^s` on one site of an `n`-site register.
    pub fn single(dim: Dim, n: usize, site: usize, r: u32, s: u32) -> PauliString {
        let mut p = PauliString::identity(dim, n);
        p.xs[site] = r % dim.q();
        p.zs[site] = s % dim.q();
        p
    }

    pub fn with_omega_phase(mut self, a: u32) -> PauliString {
        self.half_phase = (2 * (a % self.dim.q())) % (2 * self.dim.q());
        self
    }

    pub fn with_half_phase(mut self, h: u32) -> PauliString {
        self.half_phase = h % (2 * self.dim.q());
        self
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[u32] {
        &self.xs
    }

    pub fn zs(&self) -> &[u32] {
        &self.zs
    }

    pub fn x(&self, site: usize) -> u32 {
        self.xs[site]
    }

    pub fn z(&self, site: usize) -> u32 {
        self.zs[site]
    }

    /// Exponent of zeta = exp(i*pi/q), in 0..2q.
    pub fn half_phase(&self) -> u32 {
        self.half_phase
    }

    /// Exponent of omega when the phase is an integer power of omega.
    pub fn phase(&self) -> Option<u32> {
        self.half_phase.is_multiple_of(2).then_some(self.half_phase / 2)
    }

    pub fn is_identity(&self) -> bool {
        self.half_phase == 0 && self.is_trivial()
    }

    /// True when every site carries I, ignoring phase.
    pub fn is_trivial(&self) -> bool {
        self.xs.iter().all(|&x| x == 0) && self.zs.iter().all(|&z| z == 0)
    }

    pub fn weight(&self) -> usize {
        self.xs.iter().zip(&self.zs).filter(|(x, z)| **x != 0 || **z != 0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.xs[i] != 0 || self.zs[i] != 0).collect()
    }

    pub fn phaseless(&self) -> PauliString {
        PauliString { half_phase: 0, ..self.clone() }
    }

    pub fn symplectic(&self) -> SymplecticVector {
        let mut v = self.xs.clone();
        v.extend_from_slice(&self.zs);
        SymplecticVector { dim: self.dim, v }
    }

    pub fn from_symplectic(sv: &SymplecticVector) -> PauliString {
        let n = sv.n();
        PauliString { dim: sv.dim, half_phase: 0, xs: sv.v[..n].to_vec(), zs: sv.v[n..].to_vec() }
    }

    pub fn set_site(&mut self, site: usize, r: u32, s: u32) {
        self.xs[site] = r % self.dim.q();
        self.zs[site] = s % self.dim.q();
    }

    pub fn pow(&self, k: u32) -> PauliString {
        let mut acc = PauliString::identity(self.dim, self.len());
        for _ in 0..k {
            acc = pauli_mul(&acc, self).expect("same shape");
        }
        acc
    }

    /// Places this string's sites at `targets` of an `n`-site register.
    pub fn embed(&self, n: usize, targets: &[usize]) -> PauliString {
        let mut p = PauliString::identity(self.dim, n);
        p.half_phase = self.half_phase;
        for (i, &t) in targets.iter().enumerate() {
            p.xs[t] = self.xs[i];
            p.zs[t] = self.zs[i];
        }
        p
    }

    /// Restriction to the given sites, keeping the phase.
    pub fn restrict(&self, sites: &[usize]) -> PauliString {
        PauliString {
            dim: self.dim,
            half_phase: self.half_phase,
            xs: sites.iter().map(|&s| self.xs[s]).collect(),
            zs: sites.iter().map(|&s| self.zs[s]).collect(),
        }
    }

    /// Dense matrix with site 0 on the least significant digit.
    pub fn unitary(&self) -> CMatrix {
        let q = self.dim.q() as usize;
        let n = self.len();
        let size = q.pow(n as u32);
        let mut m = CMatrix::zeros(size);
        let global = Complex64::from_polar(1.0, PI * self.half_phase as f64 / q as f64);
        for col in 0..size {
            let mut row = 0usize;
            let mut w = 0u64;
            let mut rem = col;
            let mut place = 1usize;
            for i in 0..n {
                let d = rem % q;
                rem /= q;
                w += self.zs[i] as u64 * d as u64;
                row += ((d + self.xs[i] as usize) % q) * place;
                place *= q;
            }
            let ph = Complex64::from_polar(1.0, 2.0 * PI * (w % q as u64) as f64 / q as f64);
            m.set(row, col, global * ph);
        }
        m
    }
}

fn check_compat(p1: &PauliString, p2: &PauliString) -> Result<()> {
    if p1.dim != p2.dim {
        return Err(Error::DimMismatch(p1.dim.q(), p2.dim.q()));
    }
    if p1.len() != p2.len() {
        return Err(Error::LenMismatch(p1.len(), p2.len()));
    }
    Ok(())
}

/// Normal-ordered product using `X^r Z^s . X^t Z^u = omega^(s t) X^(r+t) Z^(s+u)`.
pub fn pauli_mul(p1: &PauliString, p2: &PauliString) -> Result<PauliString> {
    check_compat(p1, p2)?;
    let d = p1.dim;
    let q = d.q();
    let mut st = 0u64;
    let mut xs = Vec::with_capacity(p1.len());
    let mut zs = Vec::with_capacity(p1.len());
    for i in 0..p1.len() {
        st += p1.zs[i] as u64 * p2.xs[i] as u64;
        xs.push(d.add(p1.xs[i], p2.xs[i]));
        zs.push(d.add(p1.zs[i], p2.zs[i]));
    }
    let two_q = 2 * q as u64;
    let h = (p1.half_phase as u64 + p2.half_phase as u64 + 2 * (st % q as u64)) % two_q;
    Ok(PauliString { dim: d, half_phase: h as u32, xs, zs })
}

/// Exponent `c` with `p1 p2 = omega^c p2 p1`, i.e. sum of `s_i t_i - r_i u_i`.
pub fn commutation_phase(p1: &PauliString, p2: &PauliString) -> Result<u32> {
    check_compat(p1, p2)?;
    let d = p1.dim;
    let mut acc = 0u32;
    for i in 0..p1.len() {
        acc = d.add(acc, d.sub(d.mul(p1.zs[i], p2.xs[i]), d.mul(p1.xs[i], p2.zs[i])));
    }
    Ok(acc)
}

/// Syndrome digits: entry i is `commutation_phase(checks[i], error)`.
pub fn syndrome_of(error: &PauliString, checks: &[PauliString]) -> Result<Vec<u32>> {
    checks.iter().map(|c| commutation_phase(c, error)).collect()
}

/// Phaseless (xs | zs) view.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymplecticVector {
    pub dim: Dim,
    pub v: Vec<u32>,
}

impl SymplecticVector {
    pub fn zero(dim: Dim, n: usize) -> SymplecticVector {
        SymplecticVector { dim, v: vec![0; 2 * n] }
    }

    pub fn n(&self) -> usize {
        self.v.len() / 2
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(|&x| x == 0)
    }

    pub fn add_scaled(&mut self, other: &SymplecticVector, k: u32) {
        let d = self.dim;
        for (a, &b) in self.v.iter_mut().zip(&other.v) {
            *a = d.add(*a, d.mul(b, k));
        }
    }

    pub fn scaled(&self, k: u32) -> SymplecticVector {
        let d = self.dim;
        SymplecticVector { dim: d, v: self.v.iter().map(|&x| d.mul(x, k)).collect() }
    }

    /// Same convention as [`commutation_phase`].
    pub fn product(&self, other: &SymplecticVector) -> u32 {
        let d = self.dim;
        let n = self.n();
        let mut acc = 0;
        for i in 0..n {
            let (r, s) = (self.v[i], self.v[n + i]);
            let (t, u) = (other.v[i], other.v[n + i]);
            acc = d.add(acc, d.sub(d.mul(s, t), d.mul(r, u)));
        }
        acc
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::with_capacity(self.len() + 1);
        if self.half_phase != 0 {
            match self.phase() {
                Some(a) => parts.push(format!("w^{a}")),
                None => parts.push(format!("z^{}", self.half_phase)),
            }
        }
        for i in 0..self.len() {
            let (r, s) = (self.xs[i], self.zs[i]);
            parts.push(match (r, s) {
                (0, 0) => "I".to_string(),
                (r, 0) => format!("X{r}"),
                (0, s) => format!("Z{s}"),
                (r, s) => format!("X{r}.Z{s}"),
            });
        }
        write!(f, "{}", parts.join(" "))
    }
}

impl PauliString {
    pub fn parse(dim: Dim, text: &str) -> Result<PauliString> {
        let err = |msg: String| Error::Parse { line: 1, msg };
        let q = dim.q();
        let mut half = 0u32;
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        let num = |t: &str| -> Result<u32> {
            t.parse::<u32>().map(|v| v % q).map_err(|_| err(format!("bad power `{t}`")))
        };
        for (k, tok) in text.split_whitespace().enumerate() {
            if let Some(a) = tok.strip_prefix("w^") {
                if k != 0 {
                    return Err(err("phase must come first".into()));
                }
                half = (2 * num(a)?) % (2 * q);
                continue;
            }
            if let Some(h) = tok.strip_prefix("z^") {
                if k != 0 {
                    return Err(err("phase must come first".into()));
                }
                half = h.parse::<u32>().map_err(|_| err(format!("bad phase `{h}`")))? % (2 * q);
                continue;
            }
            let (mut r, mut s) = (0, 0);
            if tok != "I" {
                for part in tok.split('.') {
                    if let Some(v) = part.strip_prefix('X') {
                        r = num(v)?;
                    } else if let Some(v) = part.strip_prefix('Z') {
                        s = num(v)?;
                    } else {
                        return Err(err(format!("bad site token `{tok}`")));
                    }
                }
            }
            xs.push(r);
            zs.push(s);
        }
        Ok(PauliString { dim, half_phase: half, xs, zs })
    }
}

impl FromStr for SymplecticVector {
    type Err = Error;
    /// `q:` prefix followed by a Pauli text, e.g. `3:X1 Z2`.
    fn from_str(s: &str) -> Result<SymplecticVector> {
        let (q, rest) = s.split_once(':').ok_or(Error::Parse { line: 1, msg: "missing `q:`".into() })?;
        let q: u32 = q.trim().parse().map_err(|_| Error::Parse { line: 1, msg: "bad q".into() })?;
        Ok(PauliString::parse(Dim::new(q)?, rest)?.symplectic())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(q: u32) -> Dim {
        Dim::new(q).unwrap()
    }

    fn omega(q: u32, a: u32) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * a as f64 / q as f64)
    }

    #[test]
    fn mul_examples() {
        let q2 = d(2);
        let x = PauliString::single(q2, 1, 0, 1, 0);
        let z = PauliString::single(q2, 1, 0, 0, 1);
        let xz = pauli_mul(&x, &z).unwrap();
        assert_eq!(xz.phase(), Some(0));
        assert_eq!((xz.x(0), xz.z(0)), (1, 1));
        let zx = pauli_mul(&z, &x).unwrap();
        assert_eq!(zx.phase(), Some(1));
        assert_eq!((zx.x(0), zx.z(0)), (1, 1));

        let q3 = d(3);
        let a = PauliString::single(q3, 1, 0, 2, 2);
        let b = PauliString::single(q3, 1, 0, 1, 1);
        let ab = pauli_mul(&a, &b).unwrap();
        assert!(ab.is_trivial());
        assert_eq!(ab.phase(), Some(2));
        // matrix oracle
        let prod = &a.unitary() * &b.unitary();
        assert!(prod.approx_eq(&CMatrix::identity(3).scale(omega(3, 2)), 1e-12));
    }

    #[test]
    fn commutation_examples() {
        let q2 = d(2);
        let x = PauliString::single(q2, 1, 0, 1, 0);
        let z = PauliString::single(q2, 1, 0, 0, 1);
        assert_eq!(commutation_phase(&x, &x).unwrap(), 0);
        assert_eq!(commutation_phase(&x, &z).unwrap(), 1);
        let q3 = d(3);
        let p1 = PauliString::single(q3, 1, 0, 1, 2);
        let p2 = PauliString::single(q3, 1, 0, 2, 0);
        assert_eq!(commutation_phase(&p1, &p2).unwrap(), 1);
        let lhs = &p1.unitary() * &p2.unitary();
        let rhs = (&p2.unitary() * &p1.unitary()).scale(omega(3, 1));
        assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn mismatches_rejected() {
        let a = PauliString::identity(d(2), 2);
        let b = PauliString::identity(d(3), 2);
        let c = PauliString::identity(d(2), 3);
        assert!(matches!(pauli_mul(&a, &b), Err(Error::DimMismatch(2, 3))));
        assert!(matches!(commutation_phase(&a, &c), Err(Error::LenMismatch(2, 3))));
    }

    #[test]
    fn syndrome_linearity_example() {
        let q3 = d(3);
        let checks: Vec<PauliString> = vec![
            PauliString::parse(q3, "X1 X2 Z2 I Z1").unwrap(),
            PauliString::parse(q3, "Z1 X1 X2 Z2 I").unwrap(),
        ];
        let z1 = PauliString::single(q3, 5, 2, 0, 1);
        let z2 = PauliString::single(q3, 5, 2, 0, 2);
        let s1 = syndrome_of(&z1, &checks).unwrap();
        let s2 = syndrome_of(&z2, &checks).unwrap();
        assert_eq!(s2, s1.iter().map(|&v| (2 * v) % 3).collect::<Vec<_>>());
        assert_eq!(syndrome_of(&PauliString::identity(q3, 5), &checks).unwrap(), vec![0, 0]);
    }

    #[test]
    fn text_round_trip() {
        let q3 = d(3);
        let p = PauliString::parse(q3, "w^2 X2.Z1 I X0.Z2").unwrap();
        assert_eq!(p.phase(), Some(2));
        assert_eq!(p.to_string(), "w^2 X2.Z1 I Z2");
        assert_eq!(PauliString::parse(q3, &p.to_string()).unwrap(), p);
        let y = PauliString::parse(d(2), "z^1 X1.Z1").unwrap();
        assert_eq!(y.phase(), None);
        assert_eq!(y.to_string(), "z^1 X1.Z1");
        assert!(PauliString::parse(q3, "X1 Q2").is_err());
        let sv: SymplecticVector = "3:X1 Z2".parse().unwrap();
        assert_eq!(sv.v, vec![1, 0, 0, 2]);
    }

    #[test]
    fn y_at_q2_is_i_xz() {
        let y = PauliString::parse(d(2), "z^1 X1.Z1").unwrap().unitary();
        assert!((y.get(0, 1) - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((y.get(1, 0) - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    fn arb_pauli(q: u32, n: usize) -> impl Strategy<Value = PauliString> {
        (0..2 * q, proptest::collection::vec((0..q, 0..q), n)).prop_map(move |(h, v)| {
            let (xs, zs): (Vec<u32>, Vec<u32>) = v.into_iter().unzip();
            PauliString::from_powers(Dim::new(q).unwrap(), xs, zs).unwrap().with_half_phase(h)
        })
    }

    fn arb_triple() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
        (prop_oneof![Just(2u32), Just(3), Just(5), Just(7)], 1usize..=5)
            .prop_flat_map(|(q, n)| (arb_pauli(q, n), arb_pauli(q, n), arb_pauli(q, n)))
    }

    fn arb_pair_small() -> impl Strategy<Value = (PauliString, PauliString)> {
        (prop_oneof![Just(2u32), Just(3), Just(5), Just(7)], 1usize..=2)
            .prop_flat_map(|(q, n)| (arb_pauli(q, n), arb_pauli(q, n)))
    }

    proptest! {
        #[test]
        fn mul_associative_with_identity((a, b, c) in arb_triple()) {
            let ab_c = pauli_mul(&pauli_mul(&a, &b).unwrap(), &c).unwrap();
            let a_bc = pauli_mul(&a, &pauli_mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(&ab_c, &a_bc);
            let id = PauliString::identity(a.dim(), a.len());
            prop_assert_eq!(&pauli_mul(&a, &id).unwrap(), &a);
            prop_assert_eq!(&pauli_mul(&id, &a).unwrap(), &a);
        }

        #[test]
        fn commutation_antisymmetric((a, b, _c) in arb_triple()) {
            let d = a.dim();
            prop_assert_eq!(commutation_phase(&a, &b).unwrap(), d.neg(commutation_phase(&b, &a).unwrap()));
            prop_assert_eq!(commutation_phase(&a, &a).unwrap(), 0);
            prop_assert_eq!(a.symplectic().product(&b.symplectic()), commutation_phase(&a, &b).unwrap());
        }

        #[test]
        fn commutation_matches_matrices((a, b) in arb_pair_small()) {
            let q = a.dim().q();
            let c = commutation_phase(&a, &b).unwrap();
            let lhs = &a.unitary() * &b.unitary();
            let rhs = (&b.unitary() * &a.unitary()).scale(omega(q, c));
            prop_assert!(lhs.approx_eq(&rhs, 1e-10));
            let prod = pauli_mul(&a, &b).unwrap().unitary();
            prop_assert!(lhs.approx_eq(&prod, 1e-10));
        }

        #[test]
        fn syndrome_linear((a, b, c) in arb_triple(), k in 0u32..7) {
            let d = a.dim();
            let checks = vec![b.clone(), c.clone()];
            let sa = syndrome_of(&a, &checks).unwrap();
            let ak = a.pow(k);
            let sk = syndrome_of(&ak, &checks).unwrap();
            prop_assert_eq!(sk, sa.iter().map(|&v| d.mul(v, k)).collect::<Vec<_>>());
            let sum = pauli_mul(&a, &b).unwrap();
            let sb = syndrome_of(&b, &checks).unwrap();
            let ss = syndrome_of(&sum, &checks).unwrap();
            prop_assert_eq!(ss, sa.iter().zip(&sb).map(|(&x, &y)| d.add(x, y)).collect::<Vec<_>>());
        }
    }
}
