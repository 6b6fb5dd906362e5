//! Finite fields GF(p^e) with q = p^e ≤ 65536.
//!
//! Elements are encoded as integers `Σ c_i p^i` over their polynomial
//! coefficients, so `0..q` is the canonical element ordering. Multiplication
//! runs through log/antilog tables built from the primitive element.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const MAX_ORDER: u64 = 1 << 16;

/// An element in canonical integer encoding.
pub type FieldElement = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    p: u32,
    e: u32,
    q: u32,
    /// Monic modulus, low degree first, length e+1. Empty for prime fields.
    modulus: Vec<u32>,
    primitive: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Returns `(p, e)` when `n` is a prime power.
pub fn prime_power(n: u32) -> Option<(u32, u32)> {
    let f = factorize(n);
    match f.as_slice() {
        [(p, e)] => Some((*p, *e)),
        _ => None,
    }
}

/// Prime factorization as ascending `(p, e)` pairs.
pub fn factorize(mut n: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn digits(mut x: u32, p: u32, e: u32) -> Vec<u32> {
    let mut out = vec![0; e as usize];
    for c in out.iter_mut() {
        *c = x % p;
        x /= p;
    }
    out
}

fn undigits(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Remainder of `a` modulo the monic `m`, coefficients low first.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = r[r.len() - 1];
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &mi) in m.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * mi) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible(m: &[u32], p: u32) -> bool {
    let deg = m.len() - 1;
    for d in 1..=deg / 2 {
        // every monic polynomial of degree d
        for low in 0..p.pow(d as u32) {
            let mut f = digits(low, p, d as u32);
            f.push(1);
            if poly_rem(m, &f, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// Builds GF(p^e). The modulus is the monic irreducible polynomial of
    /// degree e with the smallest encoding of its lower coefficients.
    pub fn new(p: u32, e: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if e == 0 {
            return Err(crate::error::invalid!("field exponent must be positive"));
        }
        let q64 = (p as u64).checked_pow(e).unwrap_or(u64::MAX);
        if q64 > MAX_ORDER {
            return Err(Error::OrderTooLarge(q64));
        }
        let q = q64 as u32;
        let modulus = if e == 1 {
            Vec::new()
        } else {
            (0..p.pow(e))
                .map(|low| {
                    let mut m = digits(low, p, e);
                    m.push(1);
                    m
                })
                .find(|m| is_irreducible(m, p))
                .expect("an irreducible polynomial exists for every degree")
        };
        let mut f = Field {
            p,
            e,
            q,
            modulus,
            primitive: 0,
            exp: Vec::new(),
            log: Vec::new(),
        };
        f.primitive = f.find_primitive();
        let mut exp = vec![0u32; q as usize - 1];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = x;
            log[x as usize] = i as u32;
            x = f.slow_mul(x, f.primitive);
        }
        f.exp = exp;
        f.log = log;
        Ok(f)
    }

    /// GF(q) for a prime power q.
    pub fn of_order(q: u32) -> Result<Self> {
        let (p, e) = prime_power(q).ok_or_else(|| crate::error::invalid!("{q} is not a prime power"))?;
        Self::new(p, e)
    }

    fn slow_mul(&self, a: u32, b: u32) -> u32 {
        if self.e == 1 {
            return ((a as u64 * b as u64) % self.p as u64) as u32;
        }
        let (da, db) = (digits(a, self.p, self.e), digits(b, self.p, self.e));
        let mut prod = vec![0u32; 2 * self.e as usize - 1];
        for (i, &x) in da.iter().enumerate() {
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        undigits(&poly_rem(&prod, &self.modulus, self.p), self.p)
    }

    fn slow_pow(&self, a: u32, mut n: u64) -> u32 {
        let (mut base, mut acc) = (a, 1u32);
        while n > 0 {
            if n & 1 == 1 {
                acc = self.slow_mul(acc, base);
            }
            base = self.slow_mul(base, base);
            n >>= 1;
        }
        acc
    }

    fn find_primitive(&self) -> u32 {
        let order = self.q - 1;
        let primes: Vec<u32> = factorize(order).into_iter().map(|(p, _)| p).collect();
        (1..self.q)
            .find(|&a| primes.iter().all(|&r| self.slow_pow(a, (order / r) as u64) != 1))
            .expect("the multiplicative group is cyclic")
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Modulus coefficients, low degree first, including the leading 1.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Smallest element of multiplicative order q−1.
    pub fn primitive_element(&self) -> FieldElement {
        self.primitive
    }

    pub fn coeffs(&self, a: FieldElement) -> Vec<u32> {
        digits(a, self.p, self.e)
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Result<FieldElement> {
        if c.len() != self.e as usize || c.iter().any(|&d| d >= self.p) {
            return Err(crate::error::invalid!("bad coefficient vector for GF({})", self.q));
        }
        Ok(undigits(c, self.p))
    }

    pub fn elements(&self) -> core::ops::Range<u32> {
        0..self.q
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.p == 2 {
            return a ^ b;
        }
        if self.e == 1 {
            return (a + b) % self.p;
        }
        let (mut a, mut b) = (a, b);
        let (mut out, mut place) = (0, 1);
        for _ in 0..self.e {
            out += ((a % self.p + b % self.p) % self.p) * place;
            a /= self.p;
            b /= self.p;
            place *= self.p;
        }
        out
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.p == 2 {
            return a;
        }
        let (mut a, mut out, mut place) = (a, 0, 1);
        for _ in 0..self.e {
            out += ((self.p - a % self.p) % self.p) * place;
            a /= self.p;
            place *= self.p;
        }
        out
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.q - 1;
        let s = (self.log[a as usize] + self.log[b as usize]) % n;
        self.exp[s as usize]
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let n = self.q - 1;
        Ok(self.exp[((n - self.log[a as usize]) % n) as usize])
    }

    /// `ω^i` for the primitive element ω.
    pub fn pow_primitive(&self, i: u64) -> FieldElement {
        self.exp[(i % (self.q as u64 - 1)) as usize]
    }

    /// Discrete log base the primitive element. None for zero.
    pub fn log(&self, a: FieldElement) -> Option<u32> {
        (a != 0).then(|| self.log[a as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_order(f: &Field, a: u32) -> u32 {
        let mut x = a;
        let mut k = 1;
        while x != 1 {
            x = f.mul(x, a);
            k += 1;
        }
        k
    }

    #[test]
    fn prime_field_basics() {
        let f = Field::new(5, 1).unwrap();
        assert_eq!(f.order(), 5);
        assert!(f.modulus().is_empty());
        let f7 = Field::new(7, 1).unwrap();
        assert_eq!(f7.mul(3, 5), 1);
    }

    #[test]
    fn gf4_modulus_and_square() {
        let f = Field::new(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        // x is encoded 2, x+1 is 3
        assert_eq!(f.mul(2, 2), 3);
    }

    #[test]
    fn primitive_elements_match_brute_force() {
        assert_eq!(Field::new(5, 1).unwrap().primitive_element(), 2);
        assert_eq!(Field::new(2, 1).unwrap().primitive_element(), 1);
        assert_eq!(Field::new(7, 1).unwrap().primitive_element(), 3);
        for q in [2u32, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32, 49, 64] {
            let f = Field::of_order(q).unwrap();
            let w = f.primitive_element();
            assert_eq!(brute_order(&f, w), q - 1, "q={q}");
            let smaller = (1..w).any(|a| brute_order(&f, a) == q - 1);
            assert!(!smaller, "q={q}");
        }
    }

    #[test]
    fn gf9_table_is_a_field() {
        let f = Field::new(3, 2).unwrap();
        for a in f.elements() {
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
            for b in f.elements() {
                assert_eq!(f.mul(a, b), f.slow_mul(a, b));
                for c in f.elements() {
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for q in [4u32, 8, 9, 16, 25, 27, 32, 49, 64] {
            let f = Field::of_order(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.add(a, f.neg(a)), 0);
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    for c in (0..q).step_by(3) {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(Field::new(6, 1), Err(Error::NotPrime(6)));
        assert_eq!(Field::new(2, 17), Err(Error::OrderTooLarge(1 << 17)));
        assert!(Field::new(2, 16).is_ok());
        assert_eq!(Field::new(3, 1).unwrap().inv(0), Err(Error::ZeroInverse));
    }

    #[test]
    fn deterministic_modulus() {
        assert_eq!(Field::new(3, 3).unwrap(), Field::new(3, 3).unwrap());
        // x^2 + 1 is the smallest irreducible quadratic over GF(3)
        assert_eq!(Field::new(3, 2).unwrap().modulus(), &[1, 0, 1]);
    }

    #[test]
    fn coeff_roundtrip() {
        let f = Field::new(5, 2).unwrap();
        for a in f.elements() {
            assert_eq!(f.from_coeffs(&f.coeffs(a)).unwrap(), a);
        }
    }

    proptest::proptest! {
        #[test]
        fn primitive_generates_everything(idx in 0usize..12) {
            let q = [3u32, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23][idx];
            let f = Field::of_order(q).unwrap();
            let mut seen = alloc::collections::BTreeSet::new();
            let mut x = 1;
            for _ in 0..q - 1 {
                seen.insert(x);
                x = f.mul(x, f.primitive_element());
            }
            proptest::prop_assert_eq!(seen.len() as u32, q - 1);
        }
    }
}
