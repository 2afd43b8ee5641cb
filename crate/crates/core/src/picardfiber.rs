//! Relative K0 of a ring map `R -> S`, realized as `S^× / im(R^×)`, and
//! quotients of finite unit groups by harvested relations.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{det, Matrix};
use crate::rings::{factor, Elem, Factored, FiniteUnits, RingId};

/// A supported flat ring map `R -> S` with `S` regular.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelPair {
    source: RingId,
    target: RingId,
}

impl RelPair {
    pub fn new(source: RingId, target: RingId) -> Result<Self> {
        source.validate()?;
        target.validate()?;
        let ok = match (source, target) {
            (RingId::Int, RingId::Rat) | (RingId::Int, RingId::IntInv(_)) | (RingId::IntInv(_), RingId::Rat) => true,
            (r, s) => r == s && s.is_regular(),
        };
        if ok {
            Ok(RelPair { source, target })
        } else {
            Err(Error::UnsupportedPair(format!("{source}:{target}")))
        }
    }

    pub fn identity(ring: RingId) -> Result<Self> {
        Self::new(ring, ring)
    }

    pub fn source(&self) -> RingId {
        self.source
    }

    pub fn target(&self) -> RingId {
        self.target
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target
    }

    pub fn map_elem(&self, x: &Elem) -> Result<Elem> {
        match (self.source, x) {
            (RingId::Int, Elem::Int(n)) => Ok(self.target.from_bigint(n)),
            (RingId::IntInv(_), Elem::Rat(q)) => self.target.from_rational(q),
            _ if self.is_identity() => Ok(x.clone()),
            _ => Err(Error::Ring(format!("{x:?} is not an element of {}", self.source))),
        }
    }

    /// Primes whose powers (with signs) make up `im(R^×)` in `S^×`.
    fn image_primes(&self) -> Vec<u64> {
        self.source.inverted_primes()
    }

    /// Membership in the image of `R^×`, decided by rational arithmetic.
    pub fn in_unit_image(&self, alpha: &Elem) -> bool {
        if self.is_identity() {
            return self.target.is_unit(alpha);
        }
        let Some(q) = self.target.to_rational(alpha) else { return false };
        if q.is_zero() {
            return false;
        }
        let primes = self.image_primes();
        strip(q.numer(), &primes).abs().is_one() && strip(q.denom(), &primes).is_one()
    }
}

fn strip(n: &BigInt, primes: &[u64]) -> BigInt {
    let mut n = n.clone();
    for &p in primes {
        let p = BigInt::from(p);
        while !n.is_zero() && n.is_multiple_of(&p) {
            n /= &p;
        }
    }
    n
}

impl fmt::Display for RelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.target)
    }
}

impl std::str::FromStr for RelPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (r, t) = s.split_once(':').ok_or_else(|| Error::Parse(format!("pair `{s}` should look like R:S")))?;
        RelPair::new(r.trim().parse()?, t.trim().parse()?)
    }
}

/// A class in `K0(R,S) = S^× / im(R^×)`, stored as the prime-exponent vector
/// of its positive representative with the primes of `im(R^×)` removed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelK0Class {
    pair: RelPair,
    exponents: BTreeMap<u64, i64>,
}

impl RelK0Class {
    pub fn trivial(pair: RelPair) -> Self {
        RelK0Class { pair, exponents: BTreeMap::new() }
    }

    /// Class of a unit of `S`.
    pub fn of_unit(pair: RelPair, alpha: &Elem) -> Result<Self> {
        let s = pair.target();
        if !s.is_unit(alpha) {
            return Err(Error::Arithmetic(format!("{} is not a unit of {s}", s.format(alpha))));
        }
        if pair.is_identity() {
            return Ok(Self::trivial(pair));
        }
        let q = s.to_rational(alpha).expect("rational target");
        let mut f = Factored::from_rational(&q)?.exponents;
        for p in pair.image_primes() {
            f.remove(&p);
        }
        Ok(RelK0Class { pair, exponents: f })
    }

    pub fn pair(&self) -> RelPair {
        self.pair
    }

    pub fn exponents(&self) -> &BTreeMap<u64, i64> {
        &self.exponents
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.is_empty()
    }

    /// The positive rational normal form.
    pub fn representative(&self) -> BigRational {
        Factored { negative: false, exponents: self.exponents.clone() }.to_rational()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.pair, other.pair, "classes of different pairs");
        let f = Factored { negative: false, exponents: self.exponents.clone() }
            .mul(&Factored { negative: false, exponents: other.exponents.clone() });
        RelK0Class { pair: self.pair, exponents: f.exponents }
    }

    pub fn inverse(&self) -> Self {
        RelK0Class { pair: self.pair, exponents: self.exponents.iter().map(|(&p, &e)| (p, -e)).collect() }
    }
}

impl fmt::Display for RelK0Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.representative())
    }
}

/// A degree-0 graded line over `R` with a unit structure `delta ∈ S^×` on
/// its base change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberObj {
    pub degree: i64,
    pub delta: Elem,
}

pub fn class_of(obj: &FiberObj, pair: RelPair) -> Result<RelK0Class> {
    if obj.degree != 0 {
        return Err(Error::Domain(format!("a graded line of degree {} carries no unit structure", obj.degree)));
    }
    RelK0Class::of_unit(pair, &obj.delta)
}

/// The connecting map `S^× -> K0(R,S)`.
pub fn boundary(alpha: &Elem, pair: RelPair) -> Result<RelK0Class> {
    RelK0Class::of_unit(pair, alpha)
}

/// `(P, a, Q)`: free modules of ranks `rank_p`, `rank_q` over `R` and an
/// isomorphism `a: S ⊗ P -> S ⊗ Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwanGenerator {
    pub rank_p: usize,
    pub rank_q: usize,
    pub a: Matrix,
}

pub fn swan_eta(g: &SwanGenerator, pair: RelPair) -> Result<RelK0Class> {
    if g.a.ring() != pair.target() {
        return Err(Error::Shape(format!("matrix is over {}, expected {}", g.a.ring(), pair.target())));
    }
    if g.a.shape() != (g.rank_q, g.rank_p) {
        return Err(Error::Shape(format!(
            "expected a {}x{} matrix, got {}x{}",
            g.rank_q,
            g.rank_p,
            g.a.rows(),
            g.a.cols()
        )));
    }
    let d = det(&g.a);
    if !pair.target().is_unit(&d) {
        return Err(Error::Arithmetic("Swan generator needs an invertible matrix".into()));
    }
    RelK0Class::of_unit(pair, &d)
}

/// The quotient of a finite unit group by the subgroup generated by
/// relation ratios.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientReport {
    pub ring: RingId,
    pub group_order: usize,
    pub group_invariants: Vec<u64>,
    pub relations: Vec<Elem>,
    pub subgroup_order: usize,
    pub quotient_order: usize,
    pub quotient_invariants: Vec<u64>,
    /// Pairs of distinct units identified in the quotient, `(1, r)` per
    /// non-trivial relation.
    pub collapsed: Vec<(Elem, Elem)>,
}

impl QuotientReport {
    /// `true` iff the quotient map is injective on automorphisms.
    pub fn injective(&self) -> bool {
        self.subgroup_order == 1
    }
}

impl fmt::Display for QuotientReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.ring;
        let list = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        writeln!(f, "ring = {r}")?;
        writeln!(f, "group_order = {}", self.group_order)?;
        writeln!(f, "group_invariants = [{}]", list(&self.group_invariants))?;
        let rels: Vec<String> = self.relations.iter().map(|x| r.format(x)).collect();
        writeln!(f, "relations = [{}]", rels.join(","))?;
        writeln!(f, "subgroup_order = {}", self.subgroup_order)?;
        writeln!(f, "quotient_order = {}", self.quotient_order)?;
        writeln!(f, "quotient_invariants = [{}]", list(&self.quotient_invariants))?;
        write!(f, "injective = {}", self.injective())
    }
}

/// Quotient of `group` by the subgroup generated by `relations`.
pub fn quotient_units(group: &FiniteUnits, relations: &[Elem]) -> Result<QuotientReport> {
    let r = group.ring;
    for x in relations {
        if !group.contains(x) {
            return Err(Error::Domain(format!("{} is not in the unit group of {r}", r.format(x))));
        }
    }
    let sub = generated_subgroup(r, relations);
    let group_invariants = invariant_factors(group, &HashSet::from([r.one()]));
    let quotient_invariants = invariant_factors(group, &sub);
    let mut rels: Vec<Elem> = relations.to_vec();
    rels.sort();
    rels.dedup();
    Ok(QuotientReport {
        ring: r,
        group_order: group.order(),
        group_invariants,
        subgroup_order: sub.len(),
        quotient_order: group.order() / sub.len(),
        quotient_invariants,
        collapsed: rels.iter().filter(|x| !r.is_one(x)).map(|x| (r.one(), x.clone())).collect(),
        relations: rels,
    })
}

fn generated_subgroup(r: RingId, gens: &[Elem]) -> HashSet<Elem> {
    let mut sub = HashSet::from([r.one()]);
    let mut frontier = vec![r.one()];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = r.mul(&x, g);
            if sub.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    sub
}

/// Invariant factors `d_1 | d_2 | ...` of `G / H`, read off from how many
/// cosets are killed by each prime power.
fn invariant_factors(group: &FiniteUnits, sub: &HashSet<Elem>) -> Vec<u64> {
    let r = group.ring;
    let qorder = (group.order() / sub.len()) as u64;
    if qorder == 1 {
        return Vec::new();
    }
    // order of each element in the quotient; each coset is counted |H| times
    let orders: Vec<u64> = group
        .elements
        .iter()
        .map(|g| {
            let mut x = g.clone();
            let mut n = 1;
            while !sub.contains(&x) {
                x = r.mul(&x, g);
                n += 1;
            }
            n
        })
        .collect();
    let h = sub.len() as u64;
    let mut per_prime: Vec<(u64, Vec<u32>)> = Vec::new();
    for (p, _) in factor(&qorder.into()).expect("small order") {
        let mut counts = vec![1u32]; // log_p #{x : x^(p^j) = 1}, j = 0, 1, ...
        let mut j = 1;
        loop {
            let pj = p.pow(j);
            let n = orders.iter().filter(|&&o| pj % o == 0).count() as u64 / h;
            let lg = ilog(n, p);
            if lg == *counts.last().unwrap() && j > 1 {
                break;
            }
            counts.push(lg);
            j += 1;
        }
        counts[0] = 0;
        // #{i : e_i >= j} = counts[j] - counts[j-1]
        let mut exps = Vec::new();
        for j in 1..counts.len() {
            let ge_j = counts[j] - counts[j - 1];
            let ge_next = if j + 1 < counts.len() { counts[j + 1] - counts[j] } else { 0 };
            for _ in 0..(ge_j - ge_next) {
                exps.push(j as u32);
            }
        }
        exps.sort_unstable_by(|a, b| b.cmp(a));
        per_prime.push((p, exps));
    }
    let len = per_prime.iter().map(|(_, e)| e.len()).max().unwrap_or(0);
    let mut out: Vec<u64> =
        (0..len).map(|k| per_prime.iter().map(|(p, e)| e.get(k).map_or(1, |&x| p.pow(x))).product()).collect();
    out.reverse();
    out
}

fn ilog(mut n: u64, p: u64) -> u32 {
    let mut k = 0;
    while n > 1 {
        debug_assert_eq!(n % p, 0);
        n /= p;
        k += 1;
    }
    k
}

/// Units of `S` of height at most `bound`: all of them for finite `S`,
/// otherwise `±a/b` with `1 <= a, b <= bound`.
pub fn small_units(s: RingId, bound: u64) -> Vec<Elem> {
    if s.is_finite() {
        return crate::rings::enumerate_units(s).map(|u| u.elements).unwrap_or_default();
    }
    let mut out = BTreeSet::new();
    for a in 1..=bound as i64 {
        for b in 1..=bound as i64 {
            if a.gcd(&b) != 1 {
                continue;
            }
            for sign in [1, -1] {
                let q = BigRational::new((sign * a).into(), b.into());
                if let Ok(x) = s.from_rational(&q) {
                    if s.is_unit(&x) {
                        out.insert(x);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Generators of `R^×`.
fn unit_generators(r: RingId) -> Vec<Elem> {
    if r.is_finite() {
        return crate::rings::enumerate_units(r).map(|u| u.elements).unwrap_or_default();
    }
    let mut g = Vec::new();
    if r != RingId::Rat {
        g.push(r.from_i64(-1));
        g.extend(r.inverted_primes().into_iter().map(|p| r.from_i64(p as i64)));
    }
    g
}

/// Outcome of checking `0 -> π1 F -> R^× -> S^× -> π0 F -> Z -> Z` on
/// small units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactnessReport {
    pub pair: RelPair,
    pub units_checked: usize,
    /// Generators of `R^×` mapping to 1 in `S^×`.
    pub fiber_pi1: Vec<Elem>,
    pub image_is_killed: bool,
    pub kernel_is_image: bool,
    pub boundary_is_homomorphism: bool,
    pub degree_zero_only: bool,
    pub rank_map_injective: bool,
}

impl ExactnessReport {
    pub fn ok(&self) -> bool {
        self.fiber_pi1.is_empty()
            && self.image_is_killed
            && self.kernel_is_image
            && self.boundary_is_homomorphism
            && self.degree_zero_only
            && self.rank_map_injective
    }
}

impl fmt::Display for ExactnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.pair.source();
        let pi1: Vec<String> = self.fiber_pi1.iter().map(|x| r.format(x)).collect();
        writeln!(f, "pair = {}", self.pair)?;
        writeln!(f, "units_checked = {}", self.units_checked)?;
        writeln!(f, "pi1_fiber = [{}]", pi1.join(","))?;
        writeln!(f, "image_killed_by_boundary = {}", self.image_is_killed)?;
        writeln!(f, "boundary_kernel_is_image = {}", self.kernel_is_image)?;
        writeln!(f, "boundary_multiplicative = {}", self.boundary_is_homomorphism)?;
        writeln!(f, "fiber_degree_zero = {}", self.degree_zero_only)?;
        writeln!(f, "rank_map_injective = {}", self.rank_map_injective)?;
        write!(f, "exact = {}", self.ok())
    }
}

pub fn check_exact_sequence(pair: RelPair, bound: u64) -> Result<ExactnessReport> {
    let (r, s) = (pair.source(), pair.target());
    let gens = unit_generators(r);
    let images: Vec<Elem> = gens.iter().map(|g| pair.map_elem(g)).collect::<Result<_>>()?;

    // π1 F = ker(R^× -> S^×): R^× is generated by -1 and the inverted
    // primes, whose images are independent unless equal to 1.
    let fiber_pi1: Vec<Elem> = gens
        .iter()
        .zip(&images)
        .filter(|(_, y)| s.is_one(y))
        .map(|(g, _)| g.clone())
        .filter(|g| !r.is_one(g))
        .collect();

    let image_is_killed = images.iter().all(|y| boundary(y, pair).is_ok_and(|c| c.is_trivial()));

    let units = small_units(s, bound);
    let mut kernel_is_image = true;
    for u in &units {
        let trivial = boundary(u, pair)?.is_trivial();
        if trivial != pair.in_unit_image(u) {
            kernel_is_image = false;
        }
    }

    let sample: Vec<&Elem> = units.iter().step_by((units.len() / 40).max(1)).collect();
    let mut boundary_is_homomorphism = true;
    for x in &sample {
        for y in &sample {
            let lhs = boundary(&s.mul(x, y), pair)?;
            let rhs = boundary(x, pair)?.mul(&boundary(y, pair)?);
            if lhs != rhs {
                boundary_is_homomorphism = false;
            }
        }
    }

    let degree_zero_only = units.iter().take(8).all(|u| {
        class_of(&FiberObj { degree: 0, delta: u.clone() }, pair).is_ok()
            && class_of(&FiberObj { degree: 1, delta: u.clone() }, pair).is_err()
            && class_of(&FiberObj { degree: -2, delta: u.clone() }, pair).is_err()
    });

    // K0(R) = Z -> K0(S) = Z is the identity on ranks
    let rank_map_injective = true;

    Ok(ExactnessReport {
        pair,
        units_checked: units.len(),
        fiber_pi1,
        image_is_killed,
        kernel_is_image,
        boundary_is_homomorphism,
        degree_zero_only,
        rank_map_injective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Elem {
        Elem::Rat(BigRational::new(n.into(), d.into()))
    }

    fn zq() -> RelPair {
        RelPair::new(RingId::Int, RingId::Rat).unwrap()
    }

    #[test]
    fn pairs() {
        assert!(RelPair::new(RingId::Int, RingId::IntInv(6)).is_ok());
        assert!(RelPair::new(RingId::IntInv(6), RingId::Rat).is_ok());
        assert!(RelPair::new(RingId::Rat, RingId::Int).is_err());
        assert!(RelPair::identity(RingId::DualNum(3)).is_err());
        assert_eq!("Z:Q".parse::<RelPair>().unwrap(), zq());
    }

    #[test]
    fn class_of_examples() {
        let obj = FiberObj { degree: 0, delta: q(1, 1) };
        assert!(class_of(&obj, zq()).unwrap().is_trivial());
        let c = class_of(&FiberObj { degree: 0, delta: q(-10, 3) }, zq()).unwrap();
        assert_eq!(c.to_string(), "10/3");
        let z6 = RelPair::new(RingId::Int, RingId::IntInv(6)).unwrap();
        let c = class_of(&FiberObj { degree: 0, delta: q(4, 9) }, z6).unwrap();
        assert_eq!(c.exponents(), &BTreeMap::from([(2, 2), (3, -2)]));
        assert!(class_of(&FiberObj { degree: 1, delta: q(1, 1) }, zq()).is_err());
    }

    #[test]
    fn boundary_examples() {
        assert!(boundary(&q(1, 1), zq()).unwrap().is_trivial());
        assert!(boundary(&q(-1, 1), zq()).unwrap().is_trivial());
        assert_eq!(boundary(&q(7, 2), zq()).unwrap().to_string(), "7/2");
        let z6 = RelPair::new(RingId::Int, RingId::IntInv(6)).unwrap();
        assert_eq!(boundary(&q(-2, 3), z6).unwrap(), boundary(&q(2, 3), z6).unwrap());
        let z6q = RelPair::new(RingId::IntInv(6), RingId::Rat).unwrap();
        assert_eq!(boundary(&q(-20, 9), z6q).unwrap().to_string(), "5");
    }

    #[test]
    fn swan_examples() {
        let a = Matrix::diag(RingId::Rat, &[q(5, 1), q(3, 1)]);
        let g = SwanGenerator { rank_p: 2, rank_q: 2, a };
        assert_eq!(swan_eta(&g, zq()).unwrap().to_string(), "15");
        let id = SwanGenerator { rank_p: 3, rank_q: 3, a: Matrix::identity(RingId::Rat, 3) };
        assert!(swan_eta(&id, zq()).unwrap().is_trivial());
        let sing = SwanGenerator { rank_p: 1, rank_q: 1, a: Matrix::zeros(RingId::Rat, 1, 1) };
        assert!(swan_eta(&sing, zq()).is_err());
    }

    #[test]
    fn quotient_examples() {
        let r = RingId::DualNum(3);
        let g = crate::rings::enumerate_units(r).unwrap();
        let rep = quotient_units(&g, &[r.dual(1, 1)]).unwrap();
        assert_eq!(rep.group_order, 6);
        assert_eq!(rep.group_invariants, vec![6]);
        assert_eq!(rep.quotient_order, 2);
        assert_eq!(rep.quotient_invariants, vec![2]);
        assert!(!rep.injective());

        let rep = quotient_units(&g, &[]).unwrap();
        assert_eq!(rep.quotient_order, 6);
        assert!(rep.injective());

        let f5 = RingId::PrimeField(5);
        let g = crate::rings::enumerate_units(f5).unwrap();
        let rep = quotient_units(&g, &[f5.from_i64(2)]).unwrap();
        assert_eq!(rep.quotient_order, 1);
        assert!(rep.quotient_invariants.is_empty());

        assert!(quotient_units(&g, &[f5.zero()]).is_err());
    }

    #[test]
    fn invariant_factors_of_non_cyclic_groups() {
        // (Z/8)^× = Z/2 x Z/2, (Z/9)^× = Z/6, (F_5[e])^× = Z/4 x Z/5 = Z/20
        let g = crate::rings::enumerate_units(RingId::LocalZ(2, 3)).unwrap();
        assert_eq!(quotient_units(&g, &[]).unwrap().group_invariants, vec![2, 2]);
        let g = crate::rings::enumerate_units(RingId::LocalZ(3, 2)).unwrap();
        assert_eq!(quotient_units(&g, &[]).unwrap().group_invariants, vec![6]);
        let r = RingId::DualNum(5);
        let g = crate::rings::enumerate_units(r).unwrap();
        let rep = quotient_units(&g, &[]).unwrap();
        assert_eq!(rep.group_invariants, vec![20]);
        let rep = quotient_units(&g, &[r.dual(1, 1)]).unwrap();
        assert_eq!(rep.quotient_invariants, vec![4]);
        // |quotient| * |subgroup| = |group|
        for x in &g.elements {
            let rep = quotient_units(&g, std::slice::from_ref(x)).unwrap();
            assert_eq!(rep.quotient_order * rep.subgroup_order, rep.group_order);
            assert_eq!(rep.quotient_invariants.iter().product::<u64>() as usize, rep.quotient_order);
        }
    }

    #[test]
    fn exact_sequences() {
        for pair in ["Z:Q", "Z:Z[1/6]", "Z[1/6]:Q", "Q:Q", "F5:F5"] {
            let pair: RelPair = pair.parse().unwrap();
            let rep = check_exact_sequence(pair, 12).unwrap();
            assert!(rep.ok(), "{rep}");
        }
    }
}
