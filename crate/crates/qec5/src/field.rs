//! Arithmetic over the prime field Z_q.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A prime qudit dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dim(u32);

impl Dim {
    pub fn new(q: u32) -> Result<Dim> {
        if is_prime(q) {
            Ok(Dim(q))
        } else {
            Err(Error::NotPrime(q))
        }
    }

    #[inline]
    pub fn q(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.0
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        (a + self.0 - b % self.0) % self.0
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        (self.0 - a % self.0) % self.0
    }

    /// Reduces any signed integer to its canonical representative.
    #[inline]
    pub fn reduce(self, a: i64) -> u32 {
        a.rem_euclid(self.0 as i64) as u32
    }

    pub fn inv(self, a: u32) -> Result<u32> {
        mod_inverse(a, self)
    }

    /// Nonzero field elements in ascending order.
    pub fn units(self) -> impl Iterator<Item = u32> {
        1..self.0
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;
    fn try_from(q: u32) -> Result<Dim> {
        Dim::new(q)
    }
}

impl From<Dim> for u32 {
    fn from(d: Dim) -> u32 {
        d.0
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Multiplicative inverse of `x` modulo `q`.
pub fn mod_inverse(x: u32, q: Dim) -> Result<u32> {
    let x = x % q.q();
    if x == 0 {
        return Err(Error::NoInverse);
    }
    // Fermat: x^(q-2)
    let mut base = x as u64;
    let m = q.q() as u64;
    let mut e = q.q() - 2;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    Ok(acc as u32)
}

/// Row space of a set of vectors over Z_q, kept in reduced row echelon form.
#[derive(Clone, Debug)]
pub struct RowSpace {
    dim: Dim,
    len: usize,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn new(dim: Dim, len: usize) -> RowSpace {
        RowSpace { dim, len, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_rows(dim: Dim, len: usize, rows: &[Vec<u32>]) -> RowSpace {
        let mut rs = RowSpace::new(dim, len);
        for r in rows {
            rs.insert(r);
        }
        rs
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the echelon rows; the result is a canonical coset representative.
    pub fn reduce(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.len);
        let d = self.dim;
        let mut out: Vec<u32> = v.iter().map(|&x| x % d.q()).collect();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = out[p];
            if c != 0 {
                for (o, &r) in out.iter_mut().zip(row) {
                    *o = d.sub(*o, d.mul(c, r));
                }
            }
        }
        out
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Adds `v` to the span; returns false if it was already contained.
    pub fn insert(&mut self, v: &[u32]) -> bool {
        let d = self.dim;
        let mut r = self.reduce(v);
        let Some(p) = r.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = mod_inverse(r[p], d).expect("nonzero pivot");
        for x in r.iter_mut() {
            *x = d.mul(*x, inv);
        }
        for row in self.rows.iter_mut() {
            let c = row[p];
            if c != 0 {
                for (o, &x) in row.iter_mut().zip(&r) {
                    *o = d.sub(*o, d.mul(c, x));
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, r);
        true
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }
}
