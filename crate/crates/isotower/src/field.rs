//! Prime and extension fields `F_{q^k}`.
//!
//! Elements are stored as discrete logarithms with respect to a canonical
//! primitive element, so multiplication is an index addition and addition goes
//! through a Zech-logarithm table. The polynomial representation (coefficients
//! low-degree-first modulo the canonical modulus) is used for encoding and for
//! the canonical ordering.

use std::fmt;

use crate::arith;
use crate::error::{Error, Result};

pub const DEFAULT_FIELD_CAP: u64 = 10_000_000;

const NONE: u32 = u32::MAX;

/// A field element. `0` is zero and `i + 1` stands for `g^i`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Fe(pub(crate) u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

pub struct Field {
    q: u32,
    k: u32,
    size: u32,
    modulus: Vec<u32>,
    /// log -> packed polynomial `sum c_i q^i`
    exp: Vec<u32>,
    /// packed polynomial -> element
    log: Vec<u32>,
    /// d -> log(1 + g^d), or NONE when 1 + g^d = 0
    zech: Vec<u32>,
    /// element -> position in canonical order
    rank: Vec<u32>,
    ints: Vec<Fe>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.q, self.k)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.k == other.k
    }
}

impl Eq for Field {}

// Dense polynomial helpers over F_q, coefficient vectors low-degree-first.
fn poly_trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn poly_rem(a: &[u32], m: &[u32], q: u32) -> Vec<u32> {
    // m is monic
    let mut r: Vec<u32> = a.to_vec();
    poly_trim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap() as u64;
        let shift = r.len() - 1 - dm;
        for (i, &mi) in m.iter().enumerate() {
            let sub = lead * mi as u64 % q as u64;
            let cur = r[shift + i] as u64;
            r[shift + i] = ((cur + q as u64 - sub) % q as u64) as u32;
        }
        poly_trim(&mut r);
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], m: &[u32], q: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % q as u64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
    poly_rem(&prod, m, q)
}

fn poly_powmod(a: &[u32], mut e: u64, m: &[u32], q: u32) -> Vec<u32> {
    let mut r = vec![1u32];
    let mut b = poly_rem(a, m, q);
    while e > 0 {
        if e & 1 == 1 {
            r = poly_mulmod(&r, &b, m, q);
        }
        b = poly_mulmod(&b, &b, m, q);
        e >>= 1;
    }
    r
}

fn pack(c: &[u32], q: u32) -> u32 {
    c.iter().rev().fold(0u32, |acc, &x| acc * q + x)
}

fn unpack(mut v: u32, q: u32, k: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        out.push(v % q);
        v /= q;
    }
    out
}

/// Coefficients (low-degree-first) of the element with canonical rank `r`.
fn coeffs_of_rank(mut r: u32, q: u32, k: u32) -> Vec<u32> {
    let mut out = vec![0u32; k as usize];
    for i in (0..k as usize).rev() {
        out[i] = r % q;
        r /= q;
    }
    out
}

fn rank_of_coeffs(c: &[u32], q: u32) -> u32 {
    c.iter().fold(0u32, |acc, &x| acc * q + x)
}

/// Irreducibility by trial division with every monic polynomial of degree `<= deg/2`.
pub fn is_irreducible(f: &[u32], q: u32) -> bool {
    let deg = f.len() - 1;
    if deg <= 1 {
        return deg == 1;
    }
    // roots first
    for a in 0..q as u64 {
        let v = f.iter().rev().fold(0u64, |acc, &c| (acc * a + c as u64) % q as u64);
        if v == 0 {
            return false;
        }
    }
    for d in 2..=deg / 2 {
        let count = (q as u64).pow(d as u32);
        for idx in 0..count {
            let mut g = unpack(idx as u32, q, d as u32);
            g.push(1);
            if poly_rem(f, &g, q).is_empty() {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// The canonical `F_{q^k}`.
    pub fn new(q: u64, k: u32) -> Result<Field> {
        Self::with_cap(q, k, DEFAULT_FIELD_CAP)
    }

    pub fn with_cap(q: u64, k: u32, cap: u64) -> Result<Field> {
        if !arith::is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        if q < 5 {
            return Err(Error::InvalidParams(format!(
                "characteristic {q} < 5 has no short Weierstrass models"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidParams("extension degree must be >= 1".into()));
        }
        let size = (q as u128).pow(k);
        if size > cap as u128 || size > u32::MAX as u128 / 2 {
            return Err(Error::CapExceeded {
                what: "field",
                size: size.min(u64::MAX as u128) as u64,
                cap,
            });
        }
        let q32 = q as u32;
        let size = size as u32;
        let modulus = if k == 1 {
            vec![0, 1]
        } else {
            (0..size)
                .map(|r| {
                    let mut c = coeffs_of_rank(r, q32, k);
                    c.push(1);
                    c
                })
                .find(|c| is_irreducible(c, q32))
                .expect("an irreducible polynomial of every degree exists")
        };
        let n1 = (size - 1) as u64;
        let prime_factors: Vec<u64> = arith::factorize(n1).into_iter().map(|(r, _)| r).collect();
        let generator = (1..size)
            .map(|r| coeffs_of_rank(r, q32, k))
            .find(|c| {
                let mut c = c.clone();
                poly_trim(&mut c);
                !c.is_empty()
                    && prime_factors
                        .iter()
                        .all(|&r| poly_powmod(&c, n1 / r, &modulus, q32) != vec![1])
            })
            .expect("multiplicative group is cyclic");
        let mut exp = Vec::with_capacity(n1 as usize);
        let mut cur = vec![1u32];
        for _ in 0..n1 {
            let mut padded = cur.clone();
            padded.resize(k as usize, 0);
            exp.push(pack(&padded, q32));
            cur = poly_mulmod(&cur, &generator, &modulus, q32);
        }
        let mut log = vec![0u32; size as usize];
        for (i, &v) in exp.iter().enumerate() {
            log[v as usize] = i as u32 + 1;
        }
        let zech = exp
            .iter()
            .map(|&v| {
                let plus_one = if v % q32 == q32 - 1 { v - (q32 - 1) } else { v + 1 };
                if plus_one == 0 {
                    NONE
                } else {
                    log[plus_one as usize] - 1
                }
            })
            .collect();
        let mut rank = vec![0u32; size as usize];
        for raw in 1..size {
            let packed = exp[(raw - 1) as usize];
            rank[raw as usize] = rank_of_coeffs(&unpack(packed, q32, k), q32);
        }
        let ints = (0..q32).map(|c| Fe(log[c as usize])).collect();
        Ok(Field { q: q32, k, size, modulus, exp, log, zech, rank, ints })
    }

    pub fn characteristic(&self) -> u32 {
        self.q
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    /// Monic modulus, coefficients low-degree-first (leading 1 included).
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    fn n1(&self) -> u32 {
        self.size - 1
    }

    /// The canonical primitive element (first generator of `F^×` in canonical order).
    pub fn generator(&self) -> Fe {
        Fe(2.min(self.size))
    }

    pub fn contains(&self, a: Fe) -> bool {
        a.0 < self.size
    }

    /// Discrete logarithm to the canonical generator.
    pub fn log(&self, a: Fe) -> Option<u32> {
        if a.is_zero() {
            None
        } else {
            Some(a.0 - 1)
        }
    }

    /// `g^e` for the canonical generator.
    pub fn exp(&self, e: u64) -> Fe {
        Fe((e % self.n1() as u64) as u32 + 1)
    }

    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 {
            return b;
        }
        if b.0 == 0 {
            return a;
        }
        let n1 = self.n1();
        let (la, lb) = (a.0 - 1, b.0 - 1);
        let d = if lb >= la { lb - la } else { lb + n1 - la };
        let z = self.zech[d as usize];
        if z == NONE {
            return Fe::ZERO;
        }
        let s = la + z;
        Fe(if s >= n1 { s - n1 } else { s } + 1)
    }

    pub fn neg(&self, a: Fe) -> Fe {
        if a.0 == 0 {
            return a;
        }
        let n1 = self.n1();
        let s = a.0 - 1 + n1 / 2;
        Fe(if s >= n1 { s - n1 } else { s } + 1)
    }

    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        let n1 = self.n1();
        let s = a.0 - 1 + b.0 - 1;
        Fe(if s >= n1 { s - n1 } else { s } + 1)
    }

    pub fn square(&self, a: Fe) -> Fe {
        self.mul(a, a)
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let n1 = self.n1();
        let la = a.0 - 1;
        Ok(Fe(if la == 0 { 0 } else { n1 - la } + 1))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Checked binary operation; rejects elements outside this field.
    pub fn arith(&self, a: Fe, b: Fe, op: Op) -> Result<Fe> {
        if !self.contains(a) || !self.contains(b) {
            return Err(Error::Mismatch);
        }
        match op {
            Op::Add => Ok(self.add(a, b)),
            Op::Sub => Ok(self.sub(a, b)),
            Op::Mul => Ok(self.mul(a, b)),
            Op::Div => self.div(a, b),
        }
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.0 == 0 {
            return Fe::ZERO;
        }
        let n1 = self.n1() as u64;
        Fe((((a.0 - 1) as u64 * (e % n1)) % n1) as u32 + 1)
    }

    /// `a^q`.
    pub fn frobenius(&self, a: Fe) -> Fe {
        self.pow(a, self.q as u64)
    }

    pub fn from_int(&self, n: i64) -> Fe {
        self.ints[n.rem_euclid(self.q as i64) as usize]
    }

    pub fn is_square(&self, a: Fe) -> bool {
        a.0 == 0 || (a.0 - 1) % 2 == 0
    }

    /// Quadratic character: 0, 1 or -1.
    pub fn legendre(&self, a: Fe) -> i32 {
        if a.0 == 0 {
            0
        } else if (a.0 - 1) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// A square root, choosing the one with smaller canonical rank.
    pub fn sqrt(&self, a: Fe) -> Option<Fe> {
        if a.0 == 0 {
            return Some(a);
        }
        let la = a.0 - 1;
        if la % 2 != 0 {
            return None;
        }
        let r = Fe(la / 2 + 1);
        let s = self.neg(r);
        Some(if self.rank(r) <= self.rank(s) { r } else { s })
    }

    pub fn multiplicative_order(&self, a: Fe) -> Result<u64> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let n1 = self.n1() as u64;
        Ok(n1 / arith::gcd((a.0 - 1) as u64, n1))
    }

    /// Position of `a` in the canonical order (coefficients compared low-degree-first).
    pub fn rank(&self, a: Fe) -> u32 {
        self.rank[a.0 as usize]
    }

    pub fn element_of_rank(&self, r: u32) -> Fe {
        let c = coeffs_of_rank(r, self.q, self.k);
        Fe(self.log[pack(&c, self.q) as usize])
    }

    /// All elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (0..self.size).map(move |r| self.element_of_rank(r))
    }

    pub fn coeffs(&self, a: Fe) -> Vec<u32> {
        if a.0 == 0 {
            return vec![0; self.k as usize];
        }
        unpack(self.exp[(a.0 - 1) as usize], self.q, self.k)
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Result<Fe> {
        if c.len() > self.k as usize || c.iter().any(|&x| x >= self.q) {
            return Err(Error::Parse(format!("{c:?} is not a reduced element of F_{}^{}", self.q, self.k)));
        }
        let mut c = c.to_vec();
        c.resize(self.k as usize, 0);
        Ok(Fe(self.log[pack(&c, self.q) as usize]))
    }

    /// Canonical encoding "c0,c1,...".
    pub fn encode(&self, a: Fe) -> String {
        self.coeffs(a).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn parse(&self, s: &str) -> Result<Fe> {
        let c: std::result::Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse::<u32>()).collect();
        let c = c.map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        self.from_coeffs(&c)
    }

    /// True when `a` lies in the subfield `F_{q^d}`.
    pub fn in_subfield(&self, a: Fe, d: u32) -> bool {
        if a.0 == 0 {
            return true;
        }
        let sub = (self.q as u64).pow(d) - 1;
        (a.0 - 1) as u64 % ((self.n1() as u64) / arith::gcd(sub, self.n1() as u64)) == 0
    }

    /// Embedding of `self` into `big`, sending the polynomial variable to the
    /// smallest-rank root of `self`'s modulus in `big`.
    pub fn embedding_into(&self, big: &Field) -> Result<Vec<Fe>> {
        if big.q != self.q || big.k % self.k != 0 {
            return Err(Error::InvalidParams(format!("{self:?} does not embed into {big:?}")));
        }
        let root = big
            .elements()
            .find(|&x| {
                let v = self.modulus.iter().rev().fold(Fe::ZERO, |acc, &c| {
                    big.add(big.mul(acc, x), big.from_int(c as i64))
                });
                v.is_zero()
            })
            .ok_or_else(|| Error::Invariant("modulus has no root in extension".into()))?;
        // images of every element of self, indexed by raw value
        let mut table = vec![Fe::ZERO; self.size as usize];
        for raw in 1..self.size {
            let c = self.coeffs(Fe(raw));
            let v = c.iter().rev().fold(Fe::ZERO, |acc, &ci| {
                big.add(big.mul(acc, root), big.from_int(ci as i64))
            });
            table[raw as usize] = v;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_basics() {
        let f = Field::new(5, 1).unwrap();
        assert_eq!(f.size(), 5);
        let two = f.from_int(2);
        assert_eq!(f.multiplicative_order(two).unwrap(), 4);
        assert_eq!(f.multiplicative_order(Fe::ONE).unwrap(), 1);
        assert_eq!(f.encode(f.sqrt(f.from_int(4)).unwrap()), "2");
        assert_eq!(f.sqrt(Fe::ZERO), Some(Fe::ZERO));
        assert!(matches!(Field::new(4, 1), Err(Error::NotPrime(4))));
    }

    #[test]
    fn f25_modulus_is_first_irreducible_quadratic() {
        let f = Field::new(5, 2).unwrap();
        // oracle: scan monic quadratics in lexicographic order for the first without roots
        let mut first = None;
        'outer: for c0 in 0..5u32 {
            for c1 in 0..5u32 {
                if (0..5u32).all(|x| (x * x + c1 * x + c0) % 5 != 0) {
                    first = Some(vec![c0, c1, 1]);
                    break 'outer;
                }
            }
        }
        assert_eq!(f.modulus(), first.unwrap().as_slice());
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.multiplicative_order(f.generator()).unwrap(), 24);
    }

    #[test]
    fn inverse_and_characteristic() {
        let f = Field::new(5, 2).unwrap();
        for a in f.elements() {
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
            }
            assert_eq!(f.add(a, f.mul(f.from_int(4), a)), Fe::ZERO);
        }
        assert_eq!(f.div(Fe::ONE, Fe::ZERO), Err(Error::DivisionByZero));
    }

    #[test]
    fn arithmetic_matches_polynomial_oracle() {
        let f = Field::new(7, 3).unwrap();
        let m = f.modulus().to_vec();
        for a in f.elements().step_by(5) {
            for b in f.elements().step_by(7) {
                let ca = f.coeffs(a);
                let cb = f.coeffs(b);
                let sum: Vec<u32> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % 7).collect();
                assert_eq!(f.coeffs(f.add(a, b)), sum);
                let mut prod = poly_mulmod(&ca, &cb, &m, 7);
                prod.resize(3, 0);
                assert_eq!(f.coeffs(f.mul(a, b)), prod);
            }
        }
    }

    #[test]
    fn squares_in_f25() {
        let f = Field::new(5, 2).unwrap();
        let brute = f
            .elements()
            .filter(|&a| f.elements().any(|r| f.mul(r, r) == a))
            .count();
        assert_eq!(brute, 13);
        assert_eq!(f.elements().filter(|&a| f.is_square(a)).count(), 13);
        for a in f.elements() {
            let r = f.sqrt(f.mul(a, a)).unwrap();
            assert!(r == a || r == f.neg(a));
        }
    }

    #[test]
    fn frobenius_is_a_field_automorphism() {
        let f = Field::new(5, 2).unwrap();
        for a in f.elements() {
            for b in f.elements() {
                assert_eq!(f.frobenius(f.add(a, b)), f.add(f.frobenius(a), f.frobenius(b)));
                assert_eq!(f.frobenius(f.mul(a, b)), f.mul(f.frobenius(a), f.frobenius(b)));
            }
            assert_eq!(f.pow(a, 25), a);
        }
    }

    #[test]
    fn encoding_roundtrip_and_order() {
        let f = Field::new(5, 2).unwrap();
        let ranks: Vec<u32> = f.elements().map(|a| f.rank(a)).collect();
        assert_eq!(ranks, (0..25).collect::<Vec<_>>());
        let x = f.parse("3,1").unwrap();
        assert_eq!(f.encode(x), "3,1");
        assert!(f.parse("5,0").is_err());
    }

    #[test]
    fn subfield_and_embedding() {
        let small = Field::new(5, 2).unwrap();
        let big = Field::new(5, 6).unwrap();
        let emb = small.embedding_into(&big).unwrap();
        for a in small.elements() {
            for b in small.elements().step_by(3) {
                let (ea, eb) = (emb[a.0 as usize], emb[b.0 as usize]);
                assert_eq!(emb[small.add(a, b).0 as usize], big.add(ea, eb));
                assert_eq!(emb[small.mul(a, b).0 as usize], big.mul(ea, eb));
            }
            assert!(big.in_subfield(emb[a.0 as usize], 2));
        }
        assert_eq!(big.elements().filter(|&a| big.in_subfield(a, 2)).count(), 25);
    }
}
