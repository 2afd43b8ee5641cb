//! Seeded random instances: elements, invertible matrices, complexes,
//! chain maps and short exact sequences. Everything is reproducible from a
//! `u64` seed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexes::{chain_map_generators, ChainMap, Complex, Homotopy};
use crate::detfunctor::Ses;
use crate::linalg::{inverse, Matrix};
use crate::rings::{Elem, RingId};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small element; uniform for finite rings.
pub fn elem(ring: RingId, rng: &mut Rng64) -> Elem {
    match ring {
        RingId::Rat | RingId::IntInv(_) => {
            let n: i64 = rng.gen_range(-6..=6);
            let dens: Vec<i64> = if ring == RingId::Rat {
                vec![1, 2, 3, 5, 7]
            } else {
                let mut d = vec![1];
                d.extend(ring.inverted_primes().iter().map(|&p| p as i64));
                d
            };
            let d = *dens.choose(rng).unwrap();
            ring.from_rational(&num_rational::BigRational::new(n.into(), d.into())).unwrap()
        }
        RingId::Int => ring.from_i64(rng.gen_range(-4..=4)),
        RingId::DualNum(p) => ring.dual(rng.gen_range(0..p as i64), rng.gen_range(0..p as i64)),
        RingId::PrimeField(_) | RingId::LocalZ(..) => {
            let n = ring.cardinality().unwrap();
            ring.from_i64(rng.gen_range(0..n) as i64)
        }
    }
}

pub fn unit(ring: RingId, rng: &mut Rng64) -> Elem {
    if ring == RingId::Int {
        return ring.from_i64(if rng.gen_bool(0.5) { 1 } else { -1 });
    }
    loop {
        let x = elem(ring, rng);
        if ring.is_unit(&x) {
            return x;
        }
    }
}

/// A non-zero non-unit, or `None` for fields.
pub fn non_unit(ring: RingId, rng: &mut Rng64) -> Option<Elem> {
    match ring {
        RingId::Int => Some(ring.from_i64(rng.gen_range(2..=6) * if rng.gen_bool(0.5) { 1 } else { -1 })),
        RingId::IntInv(m) => {
            let choices: Vec<i64> =
                (2..=7u64).filter(|&k| m % k != 0 && crate::rings::is_prime(k)).map(|k| k as i64).collect();
            choices.choose(rng).map(|&k| ring.from_i64(k))
        }
        RingId::LocalZ(p, k) if k >= 2 => {
            let e = rng.gen_range(1..k);
            let u = unit(ring, rng);
            Some(ring.mul(&u, &ring.from_i64(p.pow(e) as i64)))
        }
        RingId::DualNum(_) => Some(ring.mul(&unit(ring, rng), &ring.dual(0, 1))),
        _ => None,
    }
}

/// A random invertible `n x n` matrix: a diagonal of units followed by
/// elementary operations.
pub fn invertible(ring: RingId, n: usize, rng: &mut Rng64) -> Matrix {
    let diag: Vec<Elem> = (0..n).map(|_| unit(ring, rng)).collect();
    let mut m = Matrix::diag(ring, &diag);
    if n < 2 {
        return m;
    }
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let c = elem(ring, rng);
        let mut e = Matrix::identity(ring, n);
        e.set(i, j, c);
        m = if rng.gen_bool(0.5) { e.mul(&m) } else { m.mul(&e) };
    }
    m
}

pub fn matrix(ring: RingId, rows: usize, cols: usize, rng: &mut Rng64) -> Matrix {
    Matrix::from_fn(ring, rows, cols, |_, _| elem(ring, rng))
}

/// Shape parameters for random complexes.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub max_total_rank: usize,
    pub lo: i32,
    pub hi: i32,
}

impl Bounds {
    pub fn new(max_total_rank: usize, lo: i32, hi: i32) -> Self {
        Bounds { max_total_rank, lo, hi }
    }
}

/// Builds a complex as a sum of elementary pieces `R[-k]` and `[R -x-> R]`,
/// then conjugates every degree by a random invertible matrix.
fn assemble(ring: RingId, bounds: Bounds, rng: &mut Rng64, acyclic: bool) -> Complex {
    let mut ranks: BTreeMap<i32, usize> = BTreeMap::new();
    // entries (row, col, degree, value) of the block-diagonal differential
    let mut entries: Vec<(i32, usize, usize, Elem)> = Vec::new();
    let mut budget = rng.gen_range(0..=bounds.max_total_rank);
    while budget > 0 {
        let two = budget >= 2 && bounds.hi > bounds.lo && (acyclic || rng.gen_bool(0.6));
        if two {
            let k = rng.gen_range(bounds.lo..bounds.hi);
            let x = if acyclic || rng.gen_bool(0.4) {
                unit(ring, rng)
            } else {
                non_unit(ring, rng).unwrap_or_else(|| unit(ring, rng))
            };
            let col = *ranks.get(&k).unwrap_or(&0);
            let row = *ranks.get(&(k + 1)).unwrap_or(&0);
            entries.push((k, row, col, x));
            *ranks.entry(k).or_insert(0) += 1;
            *ranks.entry(k + 1).or_insert(0) += 1;
            budget -= 2;
        } else if acyclic {
            break;
        } else {
            let k = rng.gen_range(bounds.lo..=bounds.hi);
            *ranks.entry(k).or_insert(0) += 1;
            budget -= 1;
        }
    }
    let rank = |i: i32| *ranks.get(&i).unwrap_or(&0);
    let mut diffs: BTreeMap<i32, Matrix> = BTreeMap::new();
    for (k, row, col, x) in entries {
        let d = diffs.entry(k).or_insert_with(|| Matrix::zeros(ring, rank(k + 1), rank(k)));
        d.set(row, col, x);
    }
    let base = Complex::from_parts(ring, &ranks, &diffs).expect("block complex");
    conjugate(&base, rng).1.target().clone()
}

pub fn complex(ring: RingId, bounds: Bounds, rng: &mut Rng64) -> Complex {
    assemble(ring, bounds, rng, false)
}

pub fn acyclic_complex(ring: RingId, bounds: Bounds, rng: &mut Rng64) -> Complex {
    assemble(ring, bounds, rng, true)
}

/// A random degreewise isomorphism `c -> c'` onto a conjugate complex.
/// Returns the degreewise matrices and the chain map.
pub fn conjugate(c: &Complex, rng: &mut Rng64) -> (BTreeMap<i32, Matrix>, ChainMap) {
    let r = c.ring();
    let g: BTreeMap<i32, Matrix> = c.degrees().map(|i| (i, invertible(r, c.rank(i), rng))).collect();
    let ginv: BTreeMap<i32, Matrix> = g.iter().map(|(&i, m)| (i, inverse(m).expect("invertible"))).collect();
    let ranks: BTreeMap<i32, usize> = c.degrees().map(|i| (i, c.rank(i))).collect();
    let diffs: BTreeMap<i32, Matrix> = c
        .degrees()
        .map(|i| {
            let next = g.get(&(i + 1)).cloned().unwrap_or_else(|| Matrix::identity(r, 0));
            (i, next.mul(&c.d(i)).mul(&ginv[&i]))
        })
        .collect();
    let target = Complex::from_parts(r, &ranks, &diffs).expect("conjugate complex");
    let map = ChainMap::new(c.clone(), target, g.clone()).expect("conjugation is a chain map");
    (g, map)
}

/// Random degreewise maps `h^i : A^i -> B^(i-1)`.
pub fn homotopy(a: &Complex, b: &Complex, rng: &mut Rng64) -> Homotopy {
    let r = a.ring();
    let comps = a.degrees().map(|i| (i, matrix(r, b.rank(i - 1), a.rank(i), rng))).collect();
    Homotopy { comps }
}

/// A random chain map: a random combination of module generators.
pub fn chain_map(a: &Complex, b: &Complex, rng: &mut Rng64) -> ChainMap {
    let r = a.ring();
    let mut out = ChainMap::zero(a, b);
    for g in chain_map_generators(a, b) {
        out = out.add(&g.scale(&elem(r, rng)));
    }
    out
}

/// A random quasi-isomorphism out of `c`: a random chain map if one of a
/// few draws is a qis, otherwise a degreewise isomorphism; in both cases
/// perturbed by a random null-homotopic map.
pub fn qis_from(c: &Complex, rng: &mut Rng64) -> ChainMap {
    let base = if rng.gen_bool(0.5) {
        let (_, g) = conjugate(c, rng);
        let target = g.target().clone();
        (0..4).map(|_| chain_map(c, &target, rng)).find(ChainMap::is_qis).unwrap_or(g)
    } else {
        conjugate(c, rng).1
    };
    let h = homotopy(c, base.target(), rng);
    base.add(&h.boundary(c, base.target()))
}

/// A random quasi-isomorphism `c -> c`.
pub fn qis_endo(c: &Complex, rng: &mut Rng64) -> ChainMap {
    let mut tries = 0;
    loop {
        let a = chain_map(c, c, rng);
        if a.is_qis() {
            return a;
        }
        tries += 1;
        if tries == 6 {
            let u = unit(c.ring(), rng);
            let h = homotopy(c, c, rng);
            return ChainMap::scalar(c, &u).add(&h.boundary(c, c));
        }
    }
}

/// A random twisted sequence `0 -> A -> B -> C -> 0` with a random section.
pub fn ses(a: &Complex, c: &Complex, rng: &mut Rng64) -> Ses {
    let theta = chain_map(c, &a.shift(1), rng);
    let blocks: BTreeMap<i32, Matrix> = c.degrees().map(|n| (n, theta.comp(n))).collect();
    let s = Ses::twisted(a, c, &blocks).expect("theta is a chain map into A[1]");
    let r = a.ring();
    let k: BTreeMap<i32, Matrix> = c.degrees().map(|n| (n, matrix(r, a.rank(n), c.rank(n), rng))).collect();
    s.with_section_shifted(&k).expect("shifted section")
}
