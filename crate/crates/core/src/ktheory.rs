//! Relations between automorphism determinants harvested from isomorphisms
//! of triangles, the collapse certificate over dual numbers, and Euler
//! characteristics in `K0` and relative `K0`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;

use crate::complexes::{chain_map_generators, homotopy_between, sign, ChainMap, Complex, Homotopy};
use crate::detfunctor::{canonical_unit_structure, det_qis_with, det_ses_with, euler_iso_with, EulerRoute, Ses};
use crate::error::{Error, Result};
use crate::linalg::{det, inverse, Matrix, PivotOrder};
use crate::picardfiber::{class_of, quotient_units, FiberObj, QuotientReport, RelK0Class, RelPair};
use crate::rings::{enumerate_units, is_prime, Elem, RingId};
use crate::sample::{self, Bounds, Rng64};
use crate::system::BlockSystem;

/// Upper bound on the number of scenarios (and intermediate candidate sets)
/// an exhaustive enumeration may visit.
pub const SCENARIO_LIMIT: usize = 1_000_000;

/// An isomorphism of short exact sequences in the derived category:
/// quasi-isomorphisms `a, b, c` between the terms of `first` and `second`
/// whose three squares commute up to the given homotopies.
///
/// The witnesses satisfy, with `d h + h d` on the right:
/// `i₂ a - b i₁`, `p₂ b - c p₁` and `∂₂ c - a[1] ∂₁` (`∂` the connecting maps).
#[derive(Clone, Debug)]
pub struct TriangleIsoScenario {
    pub first: Ses,
    pub second: Ses,
    pub a: ChainMap,
    pub b: ChainMap,
    pub c: ChainMap,
    pub h1: Homotopy,
    pub h2: Homotopy,
    pub h3: Homotopy,
}

impl TriangleIsoScenario {
    /// The three squares as pairs `(lhs, rhs)` whose difference the
    /// witnesses bound.
    pub fn squares(&self) -> Result<[(ChainMap, ChainMap); 3]> {
        self.check_shapes()?;
        let (s, t) = (&self.first, &self.second);
        Ok([
            (t.i.compose(&self.a), self.b.compose(&s.i)),
            (t.p.compose(&self.b), self.c.compose(&s.p)),
            (t.connecting().compose(&self.c), self.a.shift(1).compose(&s.connecting())),
        ])
    }

    fn check_shapes(&self) -> Result<()> {
        let (s, t) = (&self.first, &self.second);
        let ok = self.a.source() == s.a()
            && self.a.target() == t.a()
            && self.b.source() == s.b()
            && self.b.target() == t.b()
            && self.c.source() == s.c()
            && self.c.target() == t.c();
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("a, b, c do not run between the terms of the two sequences".into()))
        }
    }

    /// Re-checks every hypothesis: chain maps, quasi-isomorphisms and the
    /// three homotopy witnesses.
    pub fn verify(&self) -> Result<()> {
        for (name, m) in [("a", &self.a), ("b", &self.b), ("c", &self.c)] {
            m.validate()?;
            if !m.is_qis() {
                return Err(Error::Domain(format!("{name} is not a quasi-isomorphism")));
            }
        }
        let squares = self.squares()?;
        for (k, ((lhs, rhs), h)) in squares.iter().zip([&self.h1, &self.h2, &self.h3]).enumerate() {
            if !h.witnesses(lhs, rhs) {
                return Err(Error::Domain(format!("the homotopy for square {} does not witness it", k + 1)));
            }
        }
        Ok(())
    }

    /// Builds a scenario, finding homotopy witnesses for the three squares.
    pub fn witness(first: Ses, second: Ses, a: ChainMap, b: ChainMap, c: ChainMap) -> Result<Self> {
        let mut s = TriangleIsoScenario {
            first,
            second,
            a,
            b,
            c,
            h1: Homotopy::zero(),
            h2: Homotopy::zero(),
            h3: Homotopy::zero(),
        };
        let squares = s.squares()?;
        let mut hs = Vec::new();
        for (k, (lhs, rhs)) in squares.iter().enumerate() {
            let h = homotopy_between(lhs, rhs)
                .ok_or_else(|| Error::Domain(format!("square {} does not commute up to homotopy", k + 1)))?;
            hs.push(h);
        }
        s.h3 = hs.pop().unwrap();
        s.h2 = hs.pop().unwrap();
        s.h1 = hs.pop().unwrap();
        Ok(s)
    }
}

/// A relation `ratio = 1` among automorphism determinants, forced by a
/// triangle isomorphism. `ratio = numerator / denominator`.
#[derive(Clone, Debug)]
pub struct HarvestedRelation {
    pub ring: RingId,
    pub numerator: Elem,
    pub denominator: Elem,
    pub ratio: Elem,
    /// Short description of the scenario that produced the relation.
    pub origin: String,
    pub scenario: TriangleIsoScenario,
}

impl HarvestedRelation {
    pub fn is_trivial(&self) -> bool {
        self.ring.is_one(&self.ratio)
    }

    /// The ratio as `(num)*(den)^-1`, omitting trivial factors.
    pub fn expression(&self) -> String {
        quotient_expression(self.ring, &self.numerator, &self.denominator)
    }
}

impl fmt::Display for HarvestedRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ring = {}", self.ring)?;
        writeln!(f, "ratio = {}", self.expression())?;
        writeln!(f, "ratio_value = {}", self.ring.format(&self.ratio))?;
        write!(f, "origin = {}", self.origin)
    }
}

pub fn quotient_expression(r: RingId, num: &Elem, den: &Elem) -> String {
    match (r.is_one(num), r.is_one(den)) {
        (_, true) => r.format(num),
        (true, false) => format!("({})^-1", r.format(den)),
        (false, false) => format!("({})*({})^-1", r.format(num), r.format(den)),
    }
}

/// `det(Δ₂) det(b) / (det(a) det(c) det(Δ₁))` after re-verifying the
/// scenario; the functor forces this unit to be 1.
pub fn harvest(s: &TriangleIsoScenario) -> Result<HarvestedRelation> {
    harvest_with(s, PivotOrder::RowMajor)
}

pub fn harvest_with(s: &TriangleIsoScenario, order: PivotOrder) -> Result<HarvestedRelation> {
    s.verify()?;
    let r = s.a.ring();
    let numerator = r.mul(&det_ses_with(&s.second, order)?, &det_qis_with(&s.b, order)?.unit);
    let denominator = r.mul(
        &r.mul(&det_qis_with(&s.a, order)?.unit, &det_qis_with(&s.c, order)?.unit),
        &det_ses_with(&s.first, order)?,
    );
    let ratio = r.mul(&numerator, &r.inverse(&denominator).expect("determinants are units"));
    Ok(HarvestedRelation { ring: r, numerator, denominator, ratio, origin: describe_scenario(s), scenario: s.clone() })
}

/// Compact one-line rendering of a complex: ranks by degree and non-zero
/// differentials.
pub fn brief(c: &Complex) -> String {
    if c.is_zero() {
        return "0".into();
    }
    let mut parts: Vec<String> = c.degrees().map(|i| format!("{i}:{}", c.rank(i))).collect();
    for i in c.degrees() {
        let d = c.d(i);
        if d.rows() > 0 && d.cols() > 0 && !d.is_zero() {
            parts.push(format!("d{i}={d}"));
        }
    }
    format!("{{{}}}", parts.join(" "))
}

fn brief_map(m: &ChainMap) -> String {
    let parts: Vec<String> = m
        .degrees()
        .into_iter()
        .filter(|&i| m.source().rank(i) > 0 && m.target().rank(i) > 0)
        .map(|i| format!("{i}:{}", m.comp(i)))
        .collect();
    format!("{{{}}}", parts.join(" "))
}

fn describe_scenario(s: &TriangleIsoScenario) -> String {
    format!(
        "A={} B={} C={} a={} b={} c={}",
        brief(s.first.a()),
        brief(s.first.b()),
        brief(s.first.c()),
        brief_map(&s.a),
        brief_map(&s.b),
        brief_map(&s.c)
    )
}

/// The middle maps completing `a` and `c` to a scenario: a particular
/// solution `(b, h1, h2)` of squares 1 and 2 plus generators of the
/// homogeneous solutions.
struct MiddleSolutions {
    particular: Vec<Matrix>,
    directions: Vec<Vec<Matrix>>,
    degrees: Vec<i32>,
}

impl MiddleSolutions {
    fn assemble(&self, first: &Ses, second: &Ses, x: &[Matrix]) -> (ChainMap, Homotopy, Homotopy) {
        let n = self.degrees.len();
        let b = self.degrees.iter().zip(&x[..n]).map(|(&i, m)| (i, m.clone())).collect();
        let hom = |xs: &[Matrix]| Homotopy {
            comps: self
                .degrees
                .iter()
                .chain(std::iter::once(&(self.degrees[n - 1] + 1)))
                .zip(xs)
                .filter(|(_, m)| !m.is_zero())
                .map(|(&i, m)| (i, m.clone()))
                .collect(),
        };
        let b = ChainMap::new(first.b().clone(), second.b().clone(), b).expect("solved chain map");
        (b, hom(&x[n..2 * n + 1]), hom(&x[2 * n + 1..]))
    }
}

fn solve_middle(first: &Ses, second: &Ses, a: &ChainMap, c: &ChainMap) -> Option<MiddleSolutions> {
    let r = a.ring();
    let (a1, b1, c1) = (first.a(), first.b(), first.c());
    let (a2, b2, c2) = (second.a(), second.b(), second.c());
    let mut degs: Vec<i32> = [a1, b1, c1, a2, b2, c2].iter().flat_map(|x| x.degrees()).collect();
    degs.sort_unstable();
    degs.dedup();
    let (lo, hi) = match (degs.first(), degs.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0, 0),
    };
    let degrees: Vec<i32> = (lo..=hi).collect();
    let mut sys = BlockSystem::new(r);
    let bv: BTreeMap<i32, _> = (lo..=hi).map(|i| (i, sys.var(b2.rank(i), b1.rank(i)))).collect();
    let h1: BTreeMap<i32, _> = (lo..=hi + 1).map(|i| (i, sys.var(b2.rank(i - 1), a1.rank(i)))).collect();
    let h2: BTreeMap<i32, _> = (lo..=hi + 1).map(|i| (i, sys.var(c2.rank(i - 1), b1.rank(i)))).collect();
    for i in lo - 1..=hi {
        // d b^i - b^(i+1) d = 0
        let e = sys.eq(Matrix::zeros(r, b2.rank(i + 1), b1.rank(i)));
        if let Some(&v) = bv.get(&i) {
            sys.left(e, b2.d(i), v);
        }
        if let Some(&v) = bv.get(&(i + 1)) {
            sys.right(e, v, b1.d(i).neg());
        }
    }
    for i in lo..=hi {
        // b i1 + d h1 + h1 d = i2 a
        let e = sys.eq(second.i.comp(i).mul(&a.comp(i)));
        sys.right(e, bv[&i], first.i.comp(i));
        sys.left(e, b2.d(i - 1), h1[&i]);
        sys.right(e, h1[&(i + 1)], a1.d(i));
        // p2 b - d h2 - h2 d = c p1
        let e = sys.eq(c.comp(i).mul(&first.p.comp(i)));
        sys.left(e, second.p.comp(i), bv[&i]);
        sys.left(e, c2.d(i - 1).neg(), h2[&i]);
        sys.right(e, h2[&(i + 1)], b1.d(i).neg());
    }
    let particular = sys.solve()?.0;
    let directions = sys.homogeneous_generators().into_iter().map(|s| s.0).collect();
    Some(MiddleSolutions { particular, directions, degrees })
}

/// Completes `a` and `c` to a scenario by solving for `b` and all three
/// witnesses, or `None` if no completion exists.
pub fn complete_scenario(first: &Ses, second: &Ses, a: &ChainMap, c: &ChainMap) -> Option<TriangleIsoScenario> {
    let sol = solve_middle(first, second, a, c)?;
    let (b, h1, h2) = sol.assemble(first, second, &sol.particular);
    let h3 = homotopy_between(&second.connecting().compose(c), &a.shift(1).compose(&first.connecting()))?;
    Some(TriangleIsoScenario {
        first: first.clone(),
        second: second.clone(),
        a: a.clone(),
        b,
        c: c.clone(),
        h1,
        h2,
        h3,
    })
}

/// The collapse certificate over `F_p[ε]`: the triangle of `ε` on `R`,
/// the automorphism `1 + ε` on its first term, and what the resulting
/// relation does to `R^×`.
#[derive(Clone, Debug)]
pub struct CollapseCertificate {
    pub p: u64,
    pub ring: RingId,
    pub unit: Elem,
    pub unit_order: usize,
    pub relation: HarvestedRelation,
    pub quotient: QuotientReport,
}

impl CollapseCertificate {
    /// Re-runs every check from the stored data.
    pub fn verify(&self) -> Result<()> {
        let again = harvest(&self.relation.scenario)?;
        if again.ratio != self.relation.ratio {
            return Err(Error::Domain("the relation does not reproduce".into()));
        }
        let units = enumerate_units(self.ring)?;
        if units.element_order(&self.unit) != Some(self.unit_order) {
            return Err(Error::Domain("the unit order does not reproduce".into()));
        }
        if quotient_units(&units, &[again.ratio])? != self.quotient {
            return Err(Error::Domain("the quotient does not reproduce".into()));
        }
        Ok(())
    }

    pub fn witnesses_verified(&self) -> bool {
        self.verify().is_ok()
    }

    /// The stable `key = value` lines of the certificate.
    pub fn lines(&self) -> Vec<(&'static str, String)> {
        let r = self.ring;
        let s = &self.relation.scenario;
        let h = |h: &Homotopy| {
            let parts: Vec<String> = h.comps.iter().map(|(i, m)| format!("{i}:{m}")).collect();
            format!("{{{}}}", parts.join(" "))
        };
        let q = &self.quotient;
        let list = |v: &[u64]| format!("[{}]", v.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
        vec![
            ("ring", r.to_string()),
            ("p", self.p.to_string()),
            ("unit", r.format(&self.unit)),
            ("unit_order", self.unit_order.to_string()),
            ("triangle_first", brief(s.first.a())),
            ("triangle_middle", brief(s.first.b())),
            ("triangle_third", brief(s.first.c())),
            ("map_a", brief_map(&s.a)),
            ("map_b", brief_map(&s.b)),
            ("map_c", brief_map(&s.c)),
            ("homotopy_1", h(&s.h1)),
            ("homotopy_2", h(&s.h2)),
            ("homotopy_3", h(&s.h3)),
            ("ratio", self.relation.expression()),
            ("ratio_value", r.format(&self.relation.ratio)),
            ("group_order", q.group_order.to_string()),
            ("group_invariants", list(&q.group_invariants)),
            ("relation_subgroup_order", q.subgroup_order.to_string()),
            ("quotient_order", q.quotient_order.to_string()),
            ("quotient_invariants", list(&q.quotient_invariants)),
            ("injective", q.injective().to_string()),
            ("k1_exact_order", q.group_order.to_string()),
            ("k1_triangulated_order_at_most", q.quotient_order.to_string()),
            ("witnesses_verified", self.witnesses_verified().to_string()),
        ]
    }
}

impl fmt::Display for CollapseCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.lines().into_iter().map(|(k, v)| format!("{k} = {v}")).collect();
        f.write_str(&lines.join("\n"))
    }
}

/// The scenario `0 -> R -> cone(ε) -> R[1] -> 0` with `a = 1 + ε`,
/// `b = id`, `c = id` over `F_p[ε]`, and the explicit witness `h = 1` for
/// the first square.
pub fn collapse_scenario(p: u64) -> Result<TriangleIsoScenario> {
    let r = RingId::DualNum(p).validate()?;
    let unit = r.dual(1, 1);
    let eps = ChainMap::scalar(&Complex::free(r, 0, 1), &r.dual(0, 1));
    let ses = Ses::of_cone(&eps);
    let a = ChainMap::scalar(ses.a(), &unit);
    let b = ChainMap::identity(ses.b());
    let c = ChainMap::identity(ses.c());
    let h1 = Homotopy { comps: BTreeMap::from([(0, Matrix::identity(r, 1))]) };
    let s = TriangleIsoScenario {
        first: ses.clone(),
        second: ses,
        a,
        b,
        c,
        h1,
        h2: Homotopy::zero(),
        h3: Homotopy::zero(),
    };
    s.verify()?;
    Ok(s)
}

pub fn collapse_certificate(p: u64) -> Result<CollapseCertificate> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if p > 199 {
        return Err(Error::Domain(format!("p = {p} is too large to enumerate F_p[e]^x (limit 199)")));
    }
    let r = RingId::DualNum(p);
    let relation = harvest(&collapse_scenario(p)?)?;
    let units = enumerate_units(r)?;
    let unit = r.dual(1, 1);
    let unit_order = units.element_order(&unit).expect("1 + e is a unit");
    let quotient = quotient_units(&units, std::slice::from_ref(&relation.ratio))?;
    Ok(CollapseCertificate { p, ring: r, unit, unit_order, relation, quotient })
}

/// All complexes over a finite ring supported in `[lo, hi]` with total rank
/// at most `max_total`, in a fixed order.
pub fn all_complexes(r: RingId, max_total: usize, lo: i32, hi: i32) -> Result<Vec<Complex>> {
    let elems = r.elements()?;
    let width = (hi - lo + 1).max(0) as usize;
    let mut rank_vectors = vec![Vec::new()];
    for _ in 0..width {
        rank_vectors = rank_vectors
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                let used: usize = v.iter().sum();
                (0..=max_total - used).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for ranks in rank_vectors {
        let shapes: Vec<(usize, usize)> = (0..width.saturating_sub(1)).map(|k| (ranks[k + 1], ranks[k])).collect();
        let entries: usize = shapes.iter().map(|(a, b)| a * b).sum();
        let count = checked_power(elems.len(), entries)?;
        for code in 0..count {
            let mut digits = code;
            let mut diffs = Vec::new();
            for &(rows, cols) in &shapes {
                let m = Matrix::from_fn(r, rows, cols, |_, _| {
                    let x = elems[digits % elems.len()].clone();
                    digits /= elems.len();
                    x
                });
                diffs.push(m);
            }
            if let Ok(c) = Complex::new(r, lo, ranks.clone(), diffs) {
                if c.validate().is_ok() {
                    out.push(c);
                }
            }
        }
    }
    Ok(out)
}

fn checked_power(base: usize, exp: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..exp {
        n = n.checked_mul(base).filter(|&n| n <= SCENARIO_LIMIT).ok_or_else(too_many)?;
    }
    Ok(n)
}

fn too_many() -> Error {
    Error::Domain(format!("the scenario space exceeds {SCENARIO_LIMIT} cases; lower --max-rank or narrow --degrees"))
}

/// Every element of the module spanned by `gens`, deduplicated, starting
/// from `base`.
fn span(r: RingId, base: &[Matrix], gens: &[Vec<Matrix>], key_len: usize) -> Result<Vec<Vec<Matrix>>> {
    let elems = r.elements()?;
    let mut seen: HashSet<Vec<Matrix>> = HashSet::new();
    let mut out = Vec::new();
    let count = checked_power(elems.len(), gens.len())?;
    for code in 0..count {
        let mut digits = code;
        let mut x: Vec<Matrix> = base.to_vec();
        for g in gens {
            let coeff = &elems[digits % elems.len()];
            digits /= elems.len();
            if !r.is_zero(coeff) {
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi = xi.add(&gi.scale(coeff));
                }
            }
        }
        if seen.insert(x[..key_len].to_vec()) {
            out.push(x);
        }
    }
    Ok(out)
}

/// All chain maps `source -> target` over a finite ring.
pub fn all_chain_maps(source: &Complex, target: &Complex) -> Result<Vec<ChainMap>> {
    let r = source.ring();
    let gens = chain_map_generators(source, target);
    let zero = ChainMap::zero(source, target);
    let degs = zero.degrees();
    let as_vec = |m: &ChainMap| degs.iter().map(|&i| m.comp(i)).collect::<Vec<_>>();
    let g: Vec<Vec<Matrix>> = gens.iter().map(as_vec).collect();
    Ok(span(r, &as_vec(&zero), &g, degs.len())?
        .into_iter()
        .map(|x| {
            ChainMap::new(source.clone(), target.clone(), degs.iter().copied().zip(x).collect()).expect("chain map")
        })
        .collect())
}

/// Exhaustive search for non-trivial relations over a finite ring.
///
/// The space: every pair of complexes `A`, `C` supported in `[lo, hi]` with
/// `rank A + rank C <= max_rank`, every twist `θ: C -> A[1]` giving
/// `0 -> A -> B -> C -> 0` with `d_B = [[d_A, θ], [0, d_C]]`, every pair of
/// quasi-isomorphisms `a ∈ End(A)`, `c ∈ End(C)` whose third square
/// commutes up to homotopy, and every `b ∈ End(B)` completing squares 1
/// and 2. Returns one relation per distinct ratio `≠ 1`, sorted by ratio;
/// each carries the first scenario (in enumeration order) producing it.
pub fn enumerate_relations(r: RingId, max_rank: usize, lo: i32, hi: i32) -> Result<Enumeration> {
    if !r.is_finite() {
        return Err(Error::Domain(format!("{r} is infinite; exhaustive enumeration needs a finite ring")));
    }
    if lo > hi {
        return Err(Error::Domain(format!("empty degree window {lo}:{hi}")));
    }
    let complexes = all_complexes(r, max_rank, lo, hi)?;
    let mut items: Vec<Ses> = Vec::new();
    for a in &complexes {
        for c in &complexes {
            if a.total_rank() + c.total_rank() > max_rank {
                continue;
            }
            for theta in all_chain_maps(c, &a.shift(1))? {
                let blocks = c.degrees().map(|n| (n, theta.comp(n))).collect();
                items.push(Ses::twisted(a, c, &blocks)?);
                if items.len() > SCENARIO_LIMIT {
                    return Err(too_many());
                }
            }
        }
    }
    let visited = AtomicUsize::new(0);
    let per_item: Vec<Result<Vec<HarvestedRelation>>> =
        items.par_iter().map(|ses| relations_of_sequence(ses, &visited)).collect();
    let mut best: BTreeMap<Elem, HarvestedRelation> = BTreeMap::new();
    for found in per_item {
        for rel in found? {
            best.entry(rel.ratio.clone()).or_insert(rel);
        }
    }
    Ok(Enumeration { relations: best.into_values().collect(), scenarios: visited.into_inner() })
}

/// Outcome of [`enumerate_relations`].
#[derive(Clone, Debug)]
pub struct Enumeration {
    /// One relation per distinct ratio `≠ 1`, sorted by ratio.
    pub relations: Vec<HarvestedRelation>,
    /// Number of scenarios visited.
    pub scenarios: usize,
}

fn relations_of_sequence(ses: &Ses, visited: &AtomicUsize) -> Result<Vec<HarvestedRelation>> {
    let r = ses.ring();
    let qis = |x: &Complex| -> Result<Vec<ChainMap>> {
        Ok(all_chain_maps(x, x)?.into_iter().filter(ChainMap::is_qis).collect())
    };
    let (a_maps, c_maps) = (qis(ses.a())?, qis(ses.c())?);
    let conn = ses.connecting();
    let order = PivotOrder::RowMajor;
    let det_ses = det_ses_with(ses, order)?;
    let mut out: Vec<HarvestedRelation> = Vec::new();
    let mut seen: HashSet<Elem> = HashSet::new();
    for a in &a_maps {
        let det_a = det_qis_with(a, order)?.unit;
        for c in &c_maps {
            let Some(h3) = homotopy_between(&conn.compose(c), &a.shift(1).compose(&conn)) else { continue };
            let Some(sol) = solve_middle(ses, ses, a, c) else { continue };
            let det_c = det_qis_with(c, order)?.unit;
            let nb = sol.degrees.len();
            for x in span(r, &sol.particular, &sol.directions, nb)? {
                if visited.fetch_add(1, Ordering::Relaxed) >= SCENARIO_LIMIT {
                    return Err(too_many());
                }
                let (b, h1, h2) = sol.assemble(ses, ses, &x);
                let numerator = r.mul(&det_ses, &det_qis_with(&b, order)?.unit);
                let denominator = r.mul(&r.mul(&det_a, &det_c), &det_ses);
                let ratio = r.mul(&numerator, &r.inverse(&denominator).expect("unit"));
                if r.is_one(&ratio) || !seen.insert(ratio.clone()) {
                    continue;
                }
                let scenario = TriangleIsoScenario {
                    first: ses.clone(),
                    second: ses.clone(),
                    a: a.clone(),
                    b,
                    c: c.clone(),
                    h1,
                    h2,
                    h3: h3.clone(),
                };
                let origin = describe_scenario(&scenario);
                out.push(HarvestedRelation { ring: r, numerator, denominator, ratio, origin, scenario });
            }
        }
    }
    Ok(out)
}

/// A random scenario between two different twisted sequences: `A`, `C`
/// random, `Δ₂` obtained by conjugating `Δ₁` degreewise, `a`, `c` the
/// conjugations perturbed by null-homotopic maps, `b` a random completion.
pub fn random_scenario(r: RingId, bounds: Bounds, rng: &mut Rng64) -> TriangleIsoScenario {
    let (a1, c1) = (sample::complex(r, bounds, rng), sample::complex(r, bounds, rng));
    let theta = sample::chain_map(&c1, &a1.shift(1), rng);
    let (alpha, a_iso) = sample::conjugate(&a1, rng);
    let (gamma, c_iso) = sample::conjugate(&c1, rng);
    let (a2, c2) = (a_iso.target().clone(), c_iso.target().clone());
    let mut theta2 = BTreeMap::new();
    for n in c1.degrees() {
        let up = alpha.get(&(n + 1)).cloned().unwrap_or_else(|| Matrix::zeros(r, 0, 0));
        let t = if up.rows() == 0 || gamma[&n].rows() == 0 {
            Matrix::zeros(r, a2.rank(n + 1), c2.rank(n))
        } else {
            up.mul(&theta.comp(n)).mul(&inverse(&gamma[&n]).expect("invertible"))
        };
        theta2.insert(n, t);
    }
    let blocks1 = c1.degrees().map(|n| (n, theta.comp(n))).collect();
    let shift_section = |s: Ses, rng: &mut Rng64| {
        let k = s.c().degrees().map(|n| (n, sample::matrix(r, s.a().rank(n), s.c().rank(n), rng))).collect();
        s.with_section_shifted(&k).expect("shifted section")
    };
    let first = shift_section(Ses::twisted(&a1, &c1, &blocks1).expect("twist"), rng);
    let second = shift_section(Ses::twisted(&a2, &c2, &theta2).expect("conjugated twist"), rng);
    let perturb = |m: ChainMap, rng: &mut Rng64| {
        let h = sample::homotopy(m.source(), m.target(), rng);
        m.add(&h.boundary(m.source(), m.target()))
    };
    let a = perturb(a_iso, rng);
    let c = perturb(c_iso, rng);
    let sol = solve_middle(&first, &second, &a, &c).expect("the block-diagonal map completes the squares");
    let mut x = sol.particular.clone();
    for g in &sol.directions {
        if rng.gen_bool(0.5) {
            let k = sample::elem(r, rng);
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi = xi.add(&gi.scale(&k));
            }
        }
    }
    let (b, h1, h2) = sol.assemble(&first, &second, &x);
    let h3 = homotopy_between(&second.connecting().compose(&c), &a.shift(1).compose(&first.connecting()))
        .expect("third square commutes up to homotopy");
    TriangleIsoScenario { first, second, a, b, c, h1, h2, h3 }
}

/// The Euler characteristic in `K0(R) = Z`.
pub fn chi_k0(c: &Complex) -> i64 {
    c.euler_characteristic()
}

/// `dim H^even` and `dim H^odd` over a field.
pub fn parity_dims(c: &Complex) -> (usize, usize) {
    let mut dims = (0, 0);
    for i in c.degrees() {
        let h = c.cohomology_at(i).free_rank();
        if sign(i) == 1 {
            dims.0 += h;
        } else {
            dims.1 += h;
        }
    }
    dims
}

/// The unit structure `δ ∈ S^×` on `det C` induced by `t`, before taking
/// the class. `t : H^ev(C_S) -> H^od(C_S)` is written against the
/// deterministic cohomology representatives, even (resp. odd) degrees
/// concatenated in increasing order.
pub fn chi_rel_delta(
    c: &Complex,
    pair: RelPair,
    t: Option<&Matrix>,
    route: EulerRoute,
    order: PivotOrder,
) -> Result<Elem> {
    if c.ring() != pair.source() {
        return Err(Error::Ring(format!("the complex is over {}, not {}", c.ring(), pair.source())));
    }
    let s = pair.target();
    if !s.is_field() {
        return Err(Error::UnsupportedPair(format!(
            "{pair}: the trivialization needs free cohomology over {s}; use a field target"
        )));
    }
    let chi = chi_k0(c);
    if chi != 0 {
        return Err(Error::Domain(format!("chi(C) = {chi} != 0, so C has no class in relative K0")));
    }
    let cs = c.base_change(&pair)?;
    let (ev, od) = parity_dims(&cs);
    if ev != od {
        return Err(Error::Domain(format!("dim H^ev = {ev} != dim H^od = {od}")));
    }
    let t = match t {
        Some(t) => t.clone(),
        None if ev == 0 => Matrix::zeros(s, 0, 0),
        None => {
            return Err(Error::Domain(format!("C_S has cohomology of dimension {ev}+{od}; supply a trivialization")))
        }
    };
    if t.ring() != s || t.shape() != (od, ev) {
        return Err(Error::Shape(format!(
            "the trivialization must be a {od}x{ev} matrix over {s}, got {}x{} over {}",
            t.rows(),
            t.cols(),
            t.ring()
        )));
    }
    let dt = det(&t);
    if !s.is_unit(&dt) {
        return Err(Error::Domain("the trivialization is not invertible".into()));
    }
    let euler = euler_iso_with(&cs, route, order)?;
    Ok(s.mul(&s.mul(&euler, &split_sign(&cs)), &s.mul(&dt, &canonical_unit_structure(s, ev))))
}

/// Sign of regrouping `⊗ det(H^i)^((-1)^i)` into `det H^ev ⊗ (det H^od)^-1`:
/// every odd line passes the later even lines.
fn split_sign(cs: &Complex) -> Elem {
    let mut odd_seen = 0;
    let mut parity = 0;
    for i in cs.degrees() {
        let h = cs.cohomology_at(i).free_rank();
        if sign(i) == 1 {
            parity += odd_seen * h;
        } else {
            odd_seen += h;
        }
    }
    cs.ring().from_i64(if parity % 2 == 1 { -1 } else { 1 })
}

/// The relative Euler characteristic of `(C, t)` in `K0(R, S)`.
pub fn chi_rel(c: &Complex, pair: RelPair, t: Option<&Matrix>) -> Result<RelK0Class> {
    chi_rel_with(c, pair, t, EulerRoute::Splitting, PivotOrder::RowMajor)
}

pub fn chi_rel_with(
    c: &Complex,
    pair: RelPair,
    t: Option<&Matrix>,
    route: EulerRoute,
    order: PivotOrder,
) -> Result<RelK0Class> {
    let delta = chi_rel_delta(c, pair, t, route, order)?;
    class_of(&FiberObj { degree: 0, delta }, pair)
}

/// Coordinates of cocycles in the deterministic basis of `H^ev` or `H^od`.
fn parity_coordinates(c: &Complex, even: bool, vectors: &[(i32, Matrix)]) -> Result<Matrix> {
    let r = c.ring();
    let degs: Vec<i32> = c.degrees().filter(|&i| (sign(i) == 1) == even).collect();
    let groups: Vec<_> = degs.iter().map(|&i| c.cohomology_at(i)).collect();
    let total: usize = groups.iter().map(|g| g.generators.cols()).sum();
    let mut out = Matrix::zeros(r, total, vectors.len());
    for (col, (deg, v)) in vectors.iter().enumerate() {
        let mut offset = 0;
        for (g, &i) in groups.iter().zip(&degs) {
            if i == *deg {
                let coords = g.coordinates(v).ok_or_else(|| Error::Domain(format!("not a cocycle in degree {i}")))?;
                for (k, x) in coords.into_iter().enumerate() {
                    out.set(offset + k, col, x);
                }
            }
            offset += g.generators.cols();
        }
    }
    Ok(out)
}

fn parity_vectors(c: &Complex, map: &ChainMap, even: bool) -> Vec<(i32, Matrix)> {
    let mut out = Vec::new();
    for i in c.degrees().filter(|&i| (sign(i) == 1) == even) {
        let g = c.cohomology_at(i).generators;
        let image = map.comp(i).mul(&g);
        for j in 0..image.cols() {
            out.push((i, image.col(j)));
        }
    }
    out
}

/// `C ⊕ C'` over `R` and the trivialization `t ⊕ t'` rewritten against the
/// deterministic cohomology basis of `(C ⊕ C')_S`.
pub fn sum_trivialization(
    c: &Complex,
    c2: &Complex,
    pair: RelPair,
    t: &Matrix,
    t2: &Matrix,
) -> Result<(Complex, Matrix)> {
    let sum = c.direct_sum(c2);
    let (cs, cs2) = (c.base_change(&pair)?, c2.base_change(&pair)?);
    let total = sum.sum.base_change(&pair)?;
    let (inl, inr) = (sum.inl.base_change(&pair)?, sum.inr.base_change(&pair)?);
    let mut ev = parity_vectors(&cs, &inl, true);
    ev.extend(parity_vectors(&cs2, &inr, true));
    let mut od = parity_vectors(&cs, &inl, false);
    od.extend(parity_vectors(&cs2, &inr, false));
    let p = parity_coordinates(&total, true, &ev)?;
    let q = parity_coordinates(&total, false, &od)?;
    let block = t.block_diag(t2);
    let pinv = inverse(&p).ok_or_else(|| Error::Domain("cohomology bases do not match".into()))?;
    Ok((sum.sum, q.mul(&block).mul(&pinv)))
}

/// `(χ_rel(C ⊕ C', t ⊕ t'), χ_rel(C, t) · χ_rel(C', t'))`.
pub fn chi_rel_additivity(
    c: &Complex,
    c2: &Complex,
    pair: RelPair,
    t: &Matrix,
    t2: &Matrix,
) -> Result<(RelK0Class, RelK0Class)> {
    let (sum, ts) = sum_trivialization(c, c2, pair, t, t2)?;
    let lhs = chi_rel(&sum, pair, Some(&ts))?;
    let rhs = chi_rel(c, pair, Some(t))?.mul(&chi_rel(c2, pair, Some(t2))?);
    Ok((lhs, rhs))
}
