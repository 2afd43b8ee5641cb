//! Exact arithmetic over the small commutative rings the engine supports.
//!
//! Elements do not carry their ring; every operation goes through a
//! [`RingId`], which is `Copy` and cheap to pass around.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest modulus accepted for residue rings; keeps products inside `u128`
/// comfortably and enumeration feasible.
pub const MAX_MODULUS: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RingId {
    /// The integers.
    Int,
    /// The rationals.
    Rat,
    /// `Z[1/m]`, stored inside Q with a membership check on denominators.
    IntInv(u64),
    /// `F_p`.
    PrimeField(u64),
    /// `Z/p^k`.
    LocalZ(u64, u32),
    /// Dual numbers `F_p[e]/(e^2)`.
    DualNum(u64),
}

/// A ring element in canonical form. The ring is implicit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Int(BigInt),
    /// Used by both `Q` and `Z[1/m]`.
    Rat(BigRational),
    /// Residue in `[0, modulus)`.
    Res(u64),
    /// `a + b*e` with both coordinates in `[0, p)`.
    Dual(u64, u64),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorisation by trial division. Inputs are desk scale.
pub fn factor(n: &BigUint) -> Result<BTreeMap<u64, u32>> {
    let mut out = BTreeMap::new();
    if n.is_zero() {
        return Err(Error::Arithmetic("cannot factor zero".into()));
    }
    let mut rest = n.clone();
    let mut d = 2u64;
    while BigUint::from(d) * BigUint::from(d) <= rest {
        let bd = BigUint::from(d);
        while (&rest % &bd).is_zero() {
            rest /= &bd;
            *out.entry(d).or_insert(0) += 1;
        }
        d += 1;
        if d > 10_000_000 {
            return Err(Error::Arithmetic(format!("{n} is too large to factor")));
        }
    }
    if !rest.is_one() {
        let p = rest.to_u64().ok_or_else(|| Error::Arithmetic(format!("{n} is too large to factor")))?;
        *out.entry(p).or_insert(0) += 1;
    }
    Ok(out)
}

fn prime_divisors(m: u64) -> Vec<u64> {
    factor(&BigUint::from(m)).map(|f| f.into_keys().collect()).unwrap_or_default()
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (g, x) = {
        let e = (a as i128).extended_gcd(&(m as i128));
        (e.gcd, e.x)
    };
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m as i128) as u64)
}

fn reduce_bigint(x: &BigInt, m: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(m));
    r.to_u64().expect("residue fits")
}

/// Strips every prime of `primes` from `n`.
fn strip_primes(n: &BigInt, primes: &[u64]) -> BigInt {
    let mut n = n.abs();
    for &p in primes {
        let bp = BigInt::from(p);
        while !n.is_zero() && (&n % &bp).is_zero() {
            n /= &bp;
        }
    }
    n
}

impl RingId {
    pub fn validate(self) -> Result<Self> {
        match self {
            RingId::Int | RingId::Rat => Ok(self),
            RingId::IntInv(m) if m >= 2 => Ok(self),
            RingId::IntInv(m) => Err(Error::Ring(format!("Z[1/{m}] needs m >= 2"))),
            RingId::PrimeField(p) | RingId::DualNum(p) => {
                if !is_prime(p) || p >= MAX_MODULUS {
                    Err(Error::Ring(format!("{p} is not a supported prime")))
                } else {
                    Ok(self)
                }
            }
            RingId::LocalZ(p, k) => {
                if !is_prime(p) || k == 0 {
                    return Err(Error::Ring(format!("Z/{p}^{k} needs p prime, k >= 1")));
                }
                match p.checked_pow(k) {
                    Some(q) if q < MAX_MODULUS => Ok(self),
                    _ => Err(Error::Ring(format!("Z/{p}^{k} is too large"))),
                }
            }
        }
    }

    pub fn is_field(self) -> bool {
        matches!(self, RingId::Rat | RingId::PrimeField(_) | RingId::LocalZ(_, 1))
    }

    pub fn is_regular(self) -> bool {
        match self {
            RingId::Int | RingId::Rat | RingId::IntInv(_) | RingId::PrimeField(_) => true,
            RingId::LocalZ(_, k) => k == 1,
            RingId::DualNum(_) => false,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, RingId::PrimeField(_) | RingId::LocalZ(..) | RingId::DualNum(_))
    }

    /// Residue modulus for the residue rings; `p` for dual numbers.
    fn modulus(self) -> u64 {
        match self {
            RingId::PrimeField(p) | RingId::DualNum(p) => p,
            RingId::LocalZ(p, k) => p.pow(k),
            _ => unreachable!("no modulus for {self}"),
        }
    }

    /// Primes inverted in `Z[1/m]`; empty otherwise.
    pub fn inverted_primes(self) -> Vec<u64> {
        match self {
            RingId::IntInv(m) => prime_divisors(m),
            _ => Vec::new(),
        }
    }

    /// Number of elements, for finite rings.
    pub fn cardinality(self) -> Option<u64> {
        match self {
            RingId::PrimeField(_) | RingId::LocalZ(..) => Some(self.modulus()),
            RingId::DualNum(p) => Some(p * p),
            _ => None,
        }
    }

    pub fn zero(self) -> Elem {
        self.from_i64(0)
    }

    pub fn one(self) -> Elem {
        self.from_i64(1)
    }

    pub fn from_i64(self, n: i64) -> Elem {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(self, n: &BigInt) -> Elem {
        match self {
            RingId::Int => Elem::Int(n.clone()),
            RingId::Rat | RingId::IntInv(_) => Elem::Rat(BigRational::from_integer(n.clone())),
            RingId::PrimeField(_) | RingId::LocalZ(..) => Elem::Res(reduce_bigint(n, self.modulus())),
            RingId::DualNum(p) => Elem::Dual(reduce_bigint(n, p), 0),
        }
    }

    /// Builds an element from a rational, failing if the denominator is not
    /// invertible.
    pub fn from_rational(self, q: &BigRational) -> Result<Elem> {
        let num = q.numer();
        let den = q.denom();
        match self {
            RingId::Rat => Ok(Elem::Rat(q.clone())),
            RingId::Int => {
                if den.is_one() {
                    Ok(Elem::Int(num.clone()))
                } else {
                    Err(Error::Parse(format!("{q} is not an integer")))
                }
            }
            RingId::IntInv(_) => {
                let primes = self.inverted_primes();
                if strip_primes(den, &primes).is_one() {
                    Ok(Elem::Rat(q.clone()))
                } else {
                    Err(Error::Parse(format!("denominator of {q} is not invertible in {self}")))
                }
            }
            _ => {
                let d = self.from_bigint(den);
                let inv = self
                    .inverse(&d)
                    .ok_or_else(|| Error::Parse(format!("denominator of {q} is not invertible in {self}")))?;
                Ok(self.mul(&self.from_bigint(num), &inv))
            }
        }
    }

    /// `a + b*e` in the dual numbers.
    pub fn dual(self, a: i64, b: i64) -> Elem {
        let RingId::DualNum(p) = self else {
            panic!("{self} has no e");
        };
        Elem::Dual(a.rem_euclid(p as i64) as u64, b.rem_euclid(p as i64) as u64)
    }

    /// The canonical nilpotent generator of the maximal ideal, if the ring is
    /// a chain ring that is not a field.
    pub fn uniformizer(self) -> Option<Elem> {
        match self {
            RingId::LocalZ(p, k) if k >= 2 => Some(Elem::Res(p)),
            RingId::DualNum(_) => Some(Elem::Dual(0, 1)),
            _ => None,
        }
    }

    pub fn is_zero(self, a: &Elem) -> bool {
        match a {
            Elem::Int(n) => n.is_zero(),
            Elem::Rat(q) => q.is_zero(),
            Elem::Res(r) => *r == 0,
            Elem::Dual(a, b) => *a == 0 && *b == 0,
        }
    }

    pub fn is_one(self, a: &Elem) -> bool {
        *a == self.one()
    }

    pub fn add(self, a: &Elem, b: &Elem) -> Elem {
        match (a, b) {
            (Elem::Int(x), Elem::Int(y)) => Elem::Int(x + y),
            (Elem::Rat(x), Elem::Rat(y)) => Elem::Rat(x + y),
            (Elem::Res(x), Elem::Res(y)) => Elem::Res(((*x as u128 + *y as u128) % self.modulus() as u128) as u64),
            (Elem::Dual(a0, a1), Elem::Dual(b0, b1)) => {
                let p = self.modulus();
                Elem::Dual((a0 + b0) % p, (a1 + b1) % p)
            }
            _ => panic!("mixed element kinds in {self}"),
        }
    }

    pub fn neg(self, a: &Elem) -> Elem {
        match a {
            Elem::Int(x) => Elem::Int(-x),
            Elem::Rat(x) => Elem::Rat(-x),
            Elem::Res(x) => {
                let m = self.modulus();
                Elem::Res((m - x) % m)
            }
            Elem::Dual(a0, a1) => {
                let p = self.modulus();
                Elem::Dual((p - a0) % p, (p - a1) % p)
            }
        }
    }

    pub fn sub(self, a: &Elem, b: &Elem) -> Elem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(self, a: &Elem, b: &Elem) -> Elem {
        match (a, b) {
            (Elem::Int(x), Elem::Int(y)) => Elem::Int(x * y),
            (Elem::Rat(x), Elem::Rat(y)) => Elem::Rat(x * y),
            (Elem::Res(x), Elem::Res(y)) => Elem::Res(mul_mod(*x, *y, self.modulus())),
            (Elem::Dual(a0, a1), Elem::Dual(b0, b1)) => {
                let p = self.modulus();
                Elem::Dual(mul_mod(*a0, *b0, p), (mul_mod(*a0, *b1, p) + mul_mod(*a1, *b0, p)) % p)
            }
            _ => panic!("mixed element kinds in {self}"),
        }
    }

    pub fn pow(self, a: &Elem, e: i64) -> Option<Elem> {
        let base = if e < 0 { self.inverse(a)? } else { a.clone() };
        let mut acc = self.one();
        for _ in 0..e.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        Some(acc)
    }

    /// Inverse if `a` is a unit.
    pub fn inverse(self, a: &Elem) -> Option<Elem> {
        match a {
            Elem::Int(x) => {
                if x.is_one() || *x == -BigInt::one() {
                    Some(a.clone())
                } else {
                    None
                }
            }
            Elem::Rat(x) => {
                if x.is_zero() {
                    return None;
                }
                let inv = x.recip();
                if let RingId::IntInv(_) = self {
                    let primes = self.inverted_primes();
                    if !strip_primes(x.numer(), &primes).is_one() {
                        return None;
                    }
                }
                Some(Elem::Rat(inv))
            }
            Elem::Res(x) => inv_mod(*x, self.modulus()).map(Elem::Res),
            Elem::Dual(a0, a1) => {
                let p = self.modulus();
                let i0 = inv_mod(*a0, p)?;
                // (a0 + a1 e)^-1 = a0^-1 - a1 a0^-2 e
                let i1 = (p - mul_mod(*a1, mul_mod(i0, i0, p), p)) % p;
                Some(Elem::Dual(i0, i1))
            }
        }
    }

    pub fn is_unit(self, a: &Elem) -> bool {
        self.inverse(a).is_some()
    }

    /// Size measure for Euclidean pivoting: zero has no norm, units have
    /// norm 1, and every non-zero `b` divides any `a` with `norm(a) >= norm(b)`
    /// in the chain rings and fields.
    pub fn norm(self, a: &Elem) -> Option<BigUint> {
        if self.is_zero(a) {
            return None;
        }
        Some(match (self, a) {
            (RingId::Int, Elem::Int(x)) => x.magnitude().clone(),
            (RingId::IntInv(_), Elem::Rat(x)) => strip_primes(x.numer(), &self.inverted_primes()).magnitude().clone(),
            (RingId::Rat, _) | (RingId::PrimeField(_), _) => BigUint::one(),
            (RingId::LocalZ(p, _), Elem::Res(x)) => {
                let mut v = 0u32;
                let mut x = *x;
                while x % p == 0 {
                    x /= p;
                    v += 1;
                }
                BigUint::from(p).pow(v)
            }
            (RingId::DualNum(_), Elem::Dual(a0, _)) => {
                if *a0 != 0 {
                    BigUint::one()
                } else {
                    BigUint::from(2u32)
                }
            }
            _ => panic!("element kind does not match {self}"),
        })
    }

    /// Exact division: some `q` with `b * q = a`, if one exists.
    pub fn divide(self, a: &Elem, b: &Elem) -> Option<Elem> {
        if self.is_zero(a) {
            return Some(self.zero());
        }
        if self.is_zero(b) {
            return None;
        }
        if let Some(inv) = self.inverse(b) {
            return Some(self.mul(a, &inv));
        }
        match (self, a, b) {
            (RingId::Int, Elem::Int(x), Elem::Int(y)) => {
                let (q, r) = x.div_rem(y);
                r.is_zero().then_some(Elem::Int(q))
            }
            (RingId::IntInv(_), Elem::Rat(x), Elem::Rat(y)) => {
                let q = x / y;
                self.from_rational(&q).ok()
            }
            (RingId::LocalZ(p, k), Elem::Res(x), Elem::Res(y)) => {
                let m = self.modulus();
                let (vx, ux) = split_p(*x, p);
                let (vy, uy) = split_p(*y, p);
                if vx < vy {
                    return None;
                }
                let _ = k;
                let q = mul_mod(pow_mod(p, (vx - vy) as u64, m), mul_mod(ux, inv_mod(uy, m)?, m), m);
                Some(Elem::Res(q))
            }
            (RingId::DualNum(p), Elem::Dual(a0, a1), Elem::Dual(_, b1)) => {
                // b = b1 e with b1 != 0; need a = a1 e.
                if *a0 != 0 {
                    return None;
                }
                Some(Elem::Dual(mul_mod(*a1, inv_mod(*b1, p)?, p), 0))
            }
            _ => None,
        }
    }

    /// Division with remainder: `a = b q + r` with `r = 0` or
    /// `norm(r) < norm(b)`.
    pub fn div_rem(self, a: &Elem, b: &Elem) -> (Elem, Elem) {
        if let Some(q) = self.divide(a, b) {
            return (q, self.zero());
        }
        match (self, a, b) {
            (RingId::Int, Elem::Int(x), Elem::Int(y)) => {
                let (q, r) = x.div_mod_floor(y);
                // symmetric remainder keeps entries small
                // floor remainder has the sign of y; fold it to |r| <= |y|/2
                let (q, r) = if (&r + &r).abs() > y.abs() { (q + BigInt::one(), r - y) } else { (q, r) };
                (Elem::Int(q), Elem::Int(r))
            }
            (RingId::IntInv(_), Elem::Rat(x), Elem::Rat(_)) => {
                // b = u n with n coprime to m; Z[1/m]/(n) = Z/n.
                let n = self.norm(b).expect("b non-zero");
                let n = BigInt::from_biguint(Sign::Plus, n);
                let den_inv = x.denom().modinv(&n).expect("denominator coprime to n");
                let r = (x.numer() * den_inv).mod_floor(&n);
                let r_elem = Elem::Rat(BigRational::from_integer(r));
                let diff = self.sub(a, &r_elem);
                let q = self.divide(&diff, b).expect("a - r divisible by b");
                (q, r_elem)
            }
            // In the chain rings a non-divisible a has smaller valuation.
            _ => (self.zero(), a.clone()),
        }
    }

    /// Writes `a = u * c` with `u` a unit and `c` the canonical associate.
    pub fn normalize(self, a: &Elem) -> (Elem, Elem) {
        if self.is_zero(a) {
            return (self.one(), self.zero());
        }
        match (self, a) {
            (RingId::Int, Elem::Int(x)) => {
                if x.is_negative() {
                    (self.from_i64(-1), Elem::Int(-x))
                } else {
                    (self.one(), a.clone())
                }
            }
            (RingId::IntInv(_), Elem::Rat(_)) => {
                let n = BigInt::from_biguint(Sign::Plus, self.norm(a).unwrap());
                let c = self.from_bigint(&n);
                let u = self.divide(a, &c).expect("associate");
                (u, c)
            }
            (RingId::LocalZ(p, _), Elem::Res(x)) => {
                let (v, u) = split_p(*x, p);
                (Elem::Res(u), Elem::Res(pow_mod(p, v as u64, self.modulus())))
            }
            (RingId::DualNum(_), Elem::Dual(a0, a1)) => {
                if *a0 != 0 {
                    (a.clone(), self.one())
                } else {
                    (Elem::Dual(*a1, 0), Elem::Dual(0, 1))
                }
            }
            _ => (a.clone(), self.one()),
        }
    }

    /// Generator of the annihilator ideal of `a`, or `None` when it is zero.
    pub fn annihilator(self, a: &Elem) -> Option<Elem> {
        if self.is_zero(a) {
            return Some(self.one());
        }
        if self.is_unit(a) {
            return None;
        }
        match (self, a) {
            (RingId::LocalZ(p, k), Elem::Res(x)) => {
                let (v, _) = split_p(*x, p);
                Some(Elem::Res(p.pow(k - v)))
            }
            (RingId::DualNum(_), Elem::Dual(..)) => Some(Elem::Dual(0, 1)),
            _ => None,
        }
    }

    /// Canonical representative of `x` modulo the ideal `(d)`, `d` a
    /// canonical associate (as produced by [`RingId::normalize`]).
    pub fn reduce_mod(self, x: &Elem, d: &Elem) -> Elem {
        if self.is_zero(d) {
            return x.clone();
        }
        if self.is_unit(d) {
            return self.zero();
        }
        match (self, x, d) {
            (RingId::Int, Elem::Int(a), Elem::Int(n)) => Elem::Int(a.mod_floor(n)),
            (RingId::IntInv(_), Elem::Rat(a), Elem::Rat(n)) => {
                let n = n.to_integer();
                let den_inv = a.denom().modinv(&n).expect("coprime");
                Elem::Rat(BigRational::from_integer((a.numer() * den_inv).mod_floor(&n)))
            }
            (RingId::LocalZ(..), Elem::Res(a), Elem::Res(n)) => Elem::Res(a % n),
            (RingId::DualNum(_), Elem::Dual(a0, _), Elem::Dual(..)) => Elem::Dual(*a0, 0),
            _ => x.clone(),
        }
    }

    /// Parses an element in this ring's grammar: integers, `a/b`, `a+b*e`.
    pub fn parse(self, text: &str) -> Result<Elem> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(Error::Parse("empty element".into()));
        }
        if let RingId::DualNum(_) = self {
            return self.parse_dual(&t);
        }
        let q = parse_rational(&t)?;
        self.from_rational(&q)
    }

    fn parse_dual(self, t: &str) -> Result<Elem> {
        // split into signed terms
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, c) in t.char_indices() {
            if i > 0 && (c == '+' || c == '-') && !t[..i].ends_with(['/', '*']) {
                terms.push(&t[start..i]);
                start = i;
            }
        }
        terms.push(&t[start..]);
        let mut a = BigRational::zero();
        let mut b = BigRational::zero();
        for term in terms {
            let term = term.strip_prefix('+').unwrap_or(term);
            if let Some(coef) = term.strip_suffix('e') {
                let coef = coef.strip_suffix('*').unwrap_or(coef);
                let c = match coef {
                    "" => BigRational::one(),
                    "-" => -BigRational::one(),
                    s => parse_rational(s)?,
                };
                b += c;
            } else {
                a += parse_rational(term)?;
            }
        }
        let a = RingId::PrimeField(self.modulus()).from_rational(&a)?;
        let b = RingId::PrimeField(self.modulus()).from_rational(&b)?;
        match (a, b) {
            (Elem::Res(a), Elem::Res(b)) => Ok(Elem::Dual(a, b)),
            _ => unreachable!(),
        }
    }

    pub fn format(self, a: &Elem) -> String {
        match a {
            Elem::Int(x) => x.to_string(),
            Elem::Rat(x) => x.to_string(),
            Elem::Res(x) => x.to_string(),
            Elem::Dual(a0, a1) => format!("{a0}+{a1}*e"),
        }
    }

    /// All elements of a finite ring, in canonical order.
    pub fn elements(self) -> Result<Vec<Elem>> {
        match self {
            RingId::PrimeField(_) | RingId::LocalZ(..) => Ok((0..self.modulus()).map(Elem::Res).collect()),
            RingId::DualNum(p) => Ok((0..p).flat_map(|a| (0..p).map(move |b| Elem::Dual(a, b))).collect()),
            _ => Err(Error::Ring(format!("{self} is infinite"))),
        }
    }

    /// Rational value of an element of Z, Q or Z[1/m].
    pub fn to_rational(self, a: &Elem) -> Option<BigRational> {
        match a {
            Elem::Int(x) => Some(BigRational::from_integer(x.clone())),
            Elem::Rat(x) => Some(x.clone()),
            _ => None,
        }
    }
}

fn split_p(mut x: u64, p: u64) -> (u32, u64) {
    let mut v = 0;
    while x != 0 && x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    (v, x)
}

pub fn parse_rational(t: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("malformed number `{t}`"));
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n, d),
        None => (t, "1"),
    };
    let n = BigInt::from_str(n).map_err(|_| bad())?;
    let d = BigInt::from_str(d).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{t}`")));
    }
    Ok(BigRational::new(n, d))
}

impl fmt::Display for RingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingId::Int => write!(f, "Z"),
            RingId::Rat => write!(f, "Q"),
            RingId::IntInv(m) => write!(f, "Z[1/{m}]"),
            RingId::PrimeField(p) => write!(f, "F{p}"),
            RingId::LocalZ(p, k) => write!(f, "Z/{p}^{k}"),
            RingId::DualNum(p) => write!(f, "F{p}[e]"),
        }
    }
}

impl FromStr for RingId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unknown ring `{s}`"));
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad());
        let ring = if s == "Z" {
            RingId::Int
        } else if s == "Q" {
            RingId::Rat
        } else if let Some(m) = s.strip_prefix("Z[1/").and_then(|r| r.strip_suffix(']')) {
            RingId::IntInv(num(m)?)
        } else if let Some(rest) = s.strip_prefix("Z/") {
            match rest.split_once('^') {
                Some((p, k)) => RingId::LocalZ(num(p)?, k.parse().map_err(|_| bad())?),
                None => {
                    // Z/n with n a prime power
                    let n = num(rest)?;
                    let f = factor(&BigUint::from(n)).map_err(|_| bad())?;
                    if f.len() != 1 {
                        return Err(bad());
                    }
                    let (&p, &k) = f.iter().next().unwrap();
                    RingId::LocalZ(p, k)
                }
            }
        } else if let Some(p) = s.strip_prefix('F').and_then(|r| r.strip_suffix("[e]")) {
            RingId::DualNum(num(p)?)
        } else if let Some(p) = s.strip_prefix('F') {
            RingId::PrimeField(num(p)?)
        } else {
            return Err(bad());
        };
        ring.validate()
    }
}

/// The units of a finite ring, enumerated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteUnits {
    pub ring: RingId,
    pub elements: Vec<Elem>,
}

impl FiniteUnits {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, a: &Elem) -> bool {
        self.elements.binary_search(a).is_ok()
    }

    /// Multiplicative order of `a`.
    pub fn element_order(&self, a: &Elem) -> Option<usize> {
        if !self.contains(a) {
            return None;
        }
        let r = self.ring;
        let mut x = a.clone();
        let mut n = 1;
        while !r.is_one(&x) {
            x = r.mul(&x, a);
            n += 1;
        }
        Some(n)
    }

    /// `{1, -1}` in the integers.
    pub fn signs() -> Self {
        let r = RingId::Int;
        let mut elements = vec![r.one(), r.from_i64(-1)];
        elements.sort();
        FiniteUnits { ring: r, elements }
    }
}

/// Shape of the unit group of a supported ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnitGroup {
    Finite(FiniteUnits),
    /// `{±1}` (the integers).
    Signs,
    /// `±` times powers of the listed primes (`Z[1/m]`).
    SignsAndPrimes(Vec<u64>),
    /// All of `Q^×`, kept factored.
    FactoredRational,
}

pub fn unit_group(ring: RingId) -> UnitGroup {
    match ring {
        RingId::Int => UnitGroup::Signs,
        RingId::Rat => UnitGroup::FactoredRational,
        RingId::IntInv(_) => UnitGroup::SignsAndPrimes(ring.inverted_primes()),
        _ => UnitGroup::Finite(enumerate_units(ring).expect("finite ring")),
    }
}

pub fn enumerate_units(ring: RingId) -> Result<FiniteUnits> {
    let elements: Vec<Elem> = ring.elements()?.into_iter().filter(|a| ring.is_unit(a)).collect();
    Ok(FiniteUnits { ring, elements })
}

/// A non-zero rational as sign times a sparse prime-exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factored {
    pub negative: bool,
    pub exponents: BTreeMap<u64, i64>,
}

impl Factored {
    pub fn one() -> Self {
        Factored { negative: false, exponents: BTreeMap::new() }
    }

    pub fn from_rational(q: &BigRational) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::Arithmetic("zero is not a unit of Q".into()));
        }
        let mut exponents = BTreeMap::new();
        for (p, e) in factor(q.numer().magnitude())? {
            exponents.insert(p, e as i64);
        }
        for (p, e) in factor(q.denom().magnitude())? {
            *exponents.entry(p).or_insert(0) -= e as i64;
        }
        exponents.retain(|_, e| *e != 0);
        Ok(Factored { negative: q.is_negative(), exponents })
    }

    pub fn to_rational(&self) -> BigRational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&p, &e) in &self.exponents {
            let pe = BigInt::from(p).pow(e.unsigned_abs() as u32);
            if e > 0 {
                num *= pe;
            } else {
                den *= pe;
            }
        }
        if self.negative {
            num = -num;
        }
        BigRational::new(num, den)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut exponents = self.exponents.clone();
        for (&p, &e) in &other.exponents {
            *exponents.entry(p).or_insert(0) += e;
        }
        exponents.retain(|_, e| *e != 0);
        Factored { negative: self.negative != other.negative, exponents }
    }

    pub fn inverse(&self) -> Self {
        Factored { negative: self.negative, exponents: self.exponents.iter().map(|(&p, &e)| (p, -e)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parse_examples() {
        assert_eq!(RingId::Rat.parse("6/4").unwrap(), Elem::Rat(q(3, 2)));
        let f3e = RingId::DualNum(3);
        assert_eq!(f3e.parse("2+5*e").unwrap(), Elem::Dual(2, 2));
        assert_eq!(RingId::LocalZ(3, 2).parse("10").unwrap(), Elem::Res(1));
        assert_eq!(f3e.parse("e").unwrap(), Elem::Dual(0, 1));
        assert_eq!(f3e.parse("1-1*e").unwrap(), Elem::Dual(1, 2));
        assert_eq!(f3e.parse("-2").unwrap(), Elem::Dual(1, 0));
    }

    #[test]
    fn parse_errors() {
        assert!(RingId::Int.parse("1/2").is_err());
        assert!(RingId::Int.parse("x").is_err());
        assert!(RingId::IntInv(6).parse("1/5").is_err());
        assert!(RingId::IntInv(6).parse("5/12").is_ok());
        assert!(RingId::LocalZ(3, 2).parse("1/3").is_err());
        assert!(RingId::Rat.parse("1/0").is_err());
    }

    #[test]
    fn format_round_trips() {
        for (ring, t) in
            [(RingId::Rat, "-7/3"), (RingId::DualNum(5), "3+4*e"), (RingId::IntInv(10), "3/20"), (RingId::Int, "-12")]
        {
            let a = ring.parse(t).unwrap();
            assert_eq!(ring.format(&a), t);
            assert_eq!(ring.parse(&ring.format(&a)).unwrap(), a);
        }
    }

    #[test]
    fn ring_tags() {
        for t in ["Z", "Q", "Z[1/6]", "F7", "Z/3^2", "F3[e]"] {
            let r: RingId = t.parse().unwrap();
            assert_eq!(r.to_string(), t);
        }
        assert_eq!("Z/9".parse::<RingId>().unwrap(), RingId::LocalZ(3, 2));
        assert!("F4".parse::<RingId>().is_err());
        assert!("Z[1/1]".parse::<RingId>().is_err());
        assert!("R".parse::<RingId>().is_err());
    }

    #[test]
    fn unit_examples() {
        let r = RingId::DualNum(3);
        let u = r.dual(1, 1);
        assert_eq!(r.inverse(&u), Some(r.dual(1, 2)));
        assert!(!RingId::Int.is_unit(&RingId::Int.from_i64(2)));
        assert!(!RingId::LocalZ(3, 2).is_unit(&Elem::Res(3)));
    }

    #[test]
    fn unit_product_inverse() {
        for ring in [RingId::DualNum(5), RingId::LocalZ(2, 3), RingId::PrimeField(7)] {
            let units = enumerate_units(ring).unwrap();
            for u in &units.elements {
                for v in &units.elements {
                    let uv = ring.mul(u, v);
                    let inv = ring.inverse(&uv).unwrap();
                    let expect = ring.mul(&ring.inverse(v).unwrap(), &ring.inverse(u).unwrap());
                    assert_eq!(inv, expect);
                }
            }
        }
    }

    #[test]
    fn dual_units_are_nonzero_constant_term() {
        for p in [2, 3, 5, 7] {
            let r = RingId::DualNum(p);
            for a in r.elements().unwrap() {
                let Elem::Dual(a0, _) = a else { unreachable!() };
                assert_eq!(r.is_unit(&a), a0 != 0);
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        let r = RingId::DualNum(3);
        let g = enumerate_units(r).unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(g.element_order(&r.dual(1, 1)), Some(3));
        assert_eq!(enumerate_units(RingId::PrimeField(2)).unwrap().order(), 1);
        assert_eq!(enumerate_units(RingId::LocalZ(3, 2)).unwrap().order(), 6);
        assert!(enumerate_units(RingId::Int).is_err());
    }

    #[test]
    fn finite_unit_groups_are_closed() {
        for p in [2u64, 3, 5, 7] {
            let r = RingId::DualNum(p);
            let g = enumerate_units(r).unwrap();
            assert_eq!(g.order() as u64, p * (p - 1));
            for u in &g.elements {
                assert!(g.contains(&r.inverse(u).unwrap()));
                for v in &g.elements {
                    assert!(g.contains(&r.mul(u, v)));
                }
            }
        }
    }

    #[test]
    fn factored_rationals_multiply_by_adding_exponents() {
        for a in 1..=30i64 {
            for b in 1..=30i64 {
                for (c, d) in [(1, 1), (7, 30), (-29, 12)] {
                    let x = q(-a, b);
                    let y = q(c, d);
                    let fx = Factored::from_rational(&x).unwrap();
                    let fy = Factored::from_rational(&y).unwrap();
                    let prod = fx.mul(&fy);
                    assert_eq!(prod, Factored::from_rational(&(&x * &y)).unwrap());
                    assert_eq!(prod.to_rational(), x * y);
                }
            }
        }
    }

    #[test]
    fn int_inv_division() {
        let r = RingId::IntInv(6);
        let a = r.parse("35/4").unwrap();
        let b = r.parse("10/3").unwrap();
        // norm(b) = 5, so a = b q + r with r in [0, 5)
        let (qq, rr) = r.div_rem(&a, &b);
        assert_eq!(r.add(&r.mul(&b, &qq), &rr), a);
        assert!(r.norm(&rr).is_none_or(|n| n < r.norm(&b).unwrap()));
        assert_eq!(r.norm(&r.parse("-12/9").unwrap()).unwrap(), BigUint::one());
    }

    #[test]
    fn chain_ring_division() {
        let r = RingId::LocalZ(3, 3);
        let a = Elem::Res(18);
        let b = Elem::Res(6);
        let qq = r.divide(&a, &b).unwrap();
        assert_eq!(r.mul(&b, &qq), a);
        assert!(r.divide(&b, &a).is_none());
        assert_eq!(r.annihilator(&Elem::Res(9)), Some(Elem::Res(3)));
        let d = RingId::DualNum(3);
        assert_eq!(d.annihilator(&d.dual(0, 2)), Some(d.dual(0, 1)));
        assert_eq!(d.annihilator(&d.dual(1, 2)), None);
    }
}
