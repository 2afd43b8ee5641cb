//! Bounded cochain complexes of based free modules.
//!
//! Conventions: `(C[k])^n = C^{n+k}` with differential `(-1)^k d`, and
//! `cone(a)^n = A^{n+1} + B^n` with differential `[[-d_A, 0], [a, d_B]]`.
//! The triangle map `cone(a) -> A[1]` is minus the projection.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{kernel_presentation, snf, solve, Matrix};
use crate::picardfiber::RelPair;
use crate::rings::{Elem, RingId};
use crate::system::BlockSystem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex {
    ring: RingId,
    lo: i32,
    ranks: Vec<usize>,
    /// `diffs[k]` is `d^(lo+k)`; one entry per degree, the last maps to 0.
    diffs: Vec<Matrix>,
}

impl Complex {
    pub fn zero(ring: RingId) -> Self {
        Complex { ring, lo: 0, ranks: Vec::new(), diffs: Vec::new() }
    }

    /// Builds a complex from ranks starting at degree `lo` and the
    /// differentials `d^lo, d^(lo+1), ...` (missing ones are zero).
    pub fn new(ring: RingId, lo: i32, ranks: Vec<usize>, diffs: Vec<Matrix>) -> Result<Self> {
        if diffs.len() > ranks.len() {
            return Err(Error::Shape("more differentials than degrees".into()));
        }
        let mut full = Vec::with_capacity(ranks.len());
        for k in 0..ranks.len() {
            let next = ranks.get(k + 1).copied().unwrap_or(0);
            let d = diffs.get(k).cloned().unwrap_or_else(|| Matrix::zeros(ring, next, ranks[k]));
            if d.shape() != (next, ranks[k]) {
                return Err(Error::Shape(format!(
                    "d^{} should be {}x{}, got {}x{}",
                    lo + k as i32,
                    next,
                    ranks[k],
                    d.rows(),
                    d.cols()
                )));
            }
            if d.ring() != ring {
                return Err(Error::Shape(format!("d^{} is over {}", lo + k as i32, d.ring())));
            }
            full.push(d);
        }
        Ok(Complex { ring, lo, ranks, diffs: full }.trimmed())
    }

    /// Builds from a map `degree -> rank` and `degree -> d^degree`.
    pub fn from_parts(ring: RingId, ranks: &BTreeMap<i32, usize>, diffs: &BTreeMap<i32, Matrix>) -> Result<Self> {
        let degs: Vec<i32> = ranks.keys().chain(diffs.keys()).copied().collect();
        let (Some(&lo), Some(&hi)) = (degs.iter().min(), degs.iter().max()) else {
            return Ok(Self::zero(ring));
        };
        let hi = hi + 1;
        let rk: Vec<usize> = (lo..=hi).map(|i| ranks.get(&i).copied().unwrap_or(0)).collect();
        let ds: Vec<Matrix> = (lo..=hi)
            .map(|i| {
                diffs.get(&i).cloned().unwrap_or_else(|| {
                    Matrix::zeros(ring, ranks.get(&(i + 1)).copied().unwrap_or(0), ranks.get(&i).copied().unwrap_or(0))
                })
            })
            .collect();
        Self::new(ring, lo, rk, ds)
    }

    /// A single free module of rank `r` in degree `deg`.
    pub fn free(ring: RingId, deg: i32, r: usize) -> Self {
        Complex::new(ring, deg, vec![r], vec![]).expect("valid")
    }

    /// Two-term complex `R^m -> R^n` sitting in degrees `deg, deg+1`.
    pub fn two_term(deg: i32, d: Matrix) -> Self {
        let ring = d.ring();
        Complex::new(ring, deg, vec![d.cols(), d.rows()], vec![d]).expect("valid")
    }

    fn trimmed(mut self) -> Self {
        while self.ranks.last() == Some(&0) {
            self.ranks.pop();
            self.diffs.pop();
        }
        while self.ranks.first() == Some(&0) {
            self.ranks.remove(0);
            self.diffs.remove(0);
            self.lo += 1;
        }
        if self.ranks.is_empty() {
            self.lo = 0;
        }
        // the last differential maps into degree hi+1 = 0
        if let Some(last) = self.diffs.last_mut() {
            if last.rows() != 0 {
                *last = Matrix::zeros(self.ring, 0, last.cols());
            }
        }
        self
    }

    pub fn ring(&self) -> RingId {
        self.ring
    }

    /// Degrees with possibly non-zero modules, or `None` for the zero complex.
    pub fn support(&self) -> Option<(i32, i32)> {
        if self.ranks.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.ranks.len() as i32 - 1))
        }
    }

    /// The degrees of the support; empty for the zero complex.
    pub fn degrees(&self) -> std::ops::RangeInclusive<i32> {
        match self.support() {
            Some((lo, hi)) => lo..=hi,
            #[allow(clippy::reversed_empty_ranges)]
            None => 1..=0,
        }
    }

    pub fn rank(&self, i: i32) -> usize {
        if i < self.lo {
            return 0;
        }
        self.ranks.get((i - self.lo) as usize).copied().unwrap_or(0)
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// `d^i : C^i -> C^(i+1)`.
    pub fn d(&self, i: i32) -> Matrix {
        if i >= self.lo {
            if let Some(m) = self.diffs.get((i - self.lo) as usize) {
                if m.rows() == self.rank(i + 1) {
                    return m.clone();
                }
            }
        }
        Matrix::zeros(self.ring, self.rank(i + 1), self.rank(i))
    }

    pub fn is_zero(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Checks `d^(i+1) d^i = 0`, reporting the first failing degree.
    pub fn validate(&self) -> Result<()> {
        for i in self.degrees() {
            if !self.d(i + 1).mul(&self.d(i)).is_zero() {
                return Err(Error::NotAComplex { degree: i });
            }
        }
        Ok(())
    }

    /// Alternating sum of ranks.
    pub fn euler_characteristic(&self) -> i64 {
        self.degrees().map(|i| sign(i) * self.rank(i) as i64).sum()
    }

    pub fn shift(&self, k: i32) -> Complex {
        if self.is_zero() {
            return self.clone();
        }
        let s = self.ring.from_i64(sign(k));
        Complex {
            ring: self.ring,
            lo: self.lo - k,
            ranks: self.ranks.clone(),
            diffs: self.diffs.iter().map(|d| d.scale(&s)).collect(),
        }
    }

    pub fn direct_sum(&self, other: &Complex) -> DirectSum {
        assert_eq!(self.ring, other.ring, "direct sum over different rings");
        let r = self.ring;
        let degs: Vec<i32> = self.degrees().chain(other.degrees()).collect();
        let mut ranks = BTreeMap::new();
        let mut diffs = BTreeMap::new();
        for &i in &degs {
            ranks.insert(i, self.rank(i) + other.rank(i));
            diffs.insert(i, self.d(i).block_diag(&other.d(i)));
        }
        let sum = Complex::from_parts(r, &ranks, &diffs).expect("block sum is valid");
        let mut inl = BTreeMap::new();
        let mut inr = BTreeMap::new();
        let mut prl = BTreeMap::new();
        let mut prr = BTreeMap::new();
        for &i in &degs {
            let (a, b) = (self.rank(i), other.rank(i));
            inl.insert(i, Matrix::identity(r, a).vstack(&Matrix::zeros(r, b, a)));
            inr.insert(i, Matrix::zeros(r, a, b).vstack(&Matrix::identity(r, b)));
            prl.insert(i, Matrix::identity(r, a).hstack(&Matrix::zeros(r, a, b)));
            prr.insert(i, Matrix::zeros(r, b, a).hstack(&Matrix::identity(r, b)));
        }
        DirectSum {
            inl: ChainMap::unchecked(self.clone(), sum.clone(), inl),
            inr: ChainMap::unchecked(other.clone(), sum.clone(), inr),
            prl: ChainMap::unchecked(sum.clone(), self.clone(), prl),
            prr: ChainMap::unchecked(sum.clone(), other.clone(), prr),
            sum,
        }
    }

    /// Entrywise image along the ring map of `pair`.
    pub fn base_change(&self, pair: &RelPair) -> Result<Complex> {
        if pair.source() != self.ring {
            return Err(Error::UnsupportedPair(format!(
                "complex is over {}, pair starts at {}",
                self.ring,
                pair.source()
            )));
        }
        let diffs =
            self.diffs.iter().map(|d| d.map(pair.target(), |x| pair.map_elem(x))).collect::<Result<Vec<_>>>()?;
        Ok(Complex { ring: pair.target(), lo: self.lo, ranks: self.ranks.clone(), diffs })
    }

    /// Cohomology in every degree of the support.
    pub fn cohomology(&self) -> CohomologyData {
        CohomologyData { groups: self.degrees().map(|i| (i, self.cohomology_at(i))).collect() }
    }

    pub fn cohomology_at(&self, i: i32) -> CohomologyGroup {
        let r = self.ring;
        let (kgens, krels) = kernel_presentation(&self.d(i));
        let m = kgens.cols();
        let image = self.d(i - 1);
        // im d^(i-1) lies in ker d^i, so this always solves
        let z = solve(&kgens, &image).expect("boundaries are cycles");
        let pres = z.hstack(&Matrix::diag(r, &krels));
        let s = snf(&pres);
        let full = kgens.mul(&s.u_inv);
        let mut keep = Vec::new();
        let mut orders = Vec::new();
        for j in 0..m {
            let dj = if j < s.rank { s.d.get(j, j).clone() } else { r.zero() };
            if !r.is_unit(&dj) {
                keep.push(j);
                orders.push(dj);
            }
        }
        CohomologyGroup {
            degree: i,
            generators: full.select_cols(&keep),
            orders,
            kernel: kgens,
            to_new_basis: s.u,
            keep,
        }
    }

    /// `true` when every cohomology group vanishes.
    pub fn is_acyclic(&self) -> bool {
        self.first_nonzero_cohomology().is_none()
    }

    pub fn first_nonzero_cohomology(&self) -> Option<i32> {
        self.degrees().find(|&i| !self.cohomology_at(i).is_zero())
    }
}

pub(crate) fn sign(i: i32) -> i64 {
    if i.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug)]
pub struct DirectSum {
    pub sum: Complex,
    pub inl: ChainMap,
    pub inr: ChainMap,
    pub prl: ChainMap,
    pub prr: ChainMap,
}

/// `H^i` as a direct sum of cyclic modules `R/(order_j)` with cocycle
/// representatives. Free summands have order zero and come last.
#[derive(Clone, Debug)]
pub struct CohomologyGroup {
    pub degree: i32,
    pub generators: Matrix,
    pub orders: Vec<Elem>,
    kernel: Matrix,
    to_new_basis: Matrix,
    keep: Vec<usize>,
}

impl CohomologyGroup {
    pub fn is_zero(&self) -> bool {
        self.generators.cols() == 0
    }

    pub fn free_rank(&self) -> usize {
        let r = self.generators.ring();
        self.orders.iter().filter(|d| r.is_zero(d)).count()
    }

    /// Non-unit, non-zero elementary divisors.
    pub fn torsion(&self) -> Vec<Elem> {
        let r = self.generators.ring();
        self.orders.iter().filter(|d| !r.is_zero(d)).cloned().collect()
    }

    /// Coordinates of the class of cocycle `z` (a column) against the
    /// generators, each reduced modulo its order.
    pub fn coordinates(&self, z: &Matrix) -> Option<Vec<Elem>> {
        let r = self.generators.ring();
        let w = solve(&self.kernel, z)?;
        let w = self.to_new_basis.mul(&w);
        Some(self.keep.iter().zip(&self.orders).map(|(&j, d)| r.reduce_mod(w.get(j, 0), d)).collect())
    }

    pub fn describe(&self) -> String {
        let r = self.generators.ring();
        let mut parts: Vec<String> = self.torsion().iter().map(|d| format!("{r}/({})", r.format(d))).collect();
        match self.free_rank() {
            0 => {}
            1 => parts.push(format!("{r}")),
            n => parts.push(format!("{r}^{n}")),
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[derive(Clone, Debug)]
pub struct CohomologyData {
    pub groups: BTreeMap<i32, CohomologyGroup>,
}

impl CohomologyData {
    pub fn get(&self, i: i32) -> Option<&CohomologyGroup> {
        self.groups.get(&i)
    }

    pub fn is_zero(&self) -> bool {
        self.groups.values().all(CohomologyGroup::is_zero)
    }
}

/// A degreewise family of matrices `A^i -> B^i`.
#[derive(Clone, Debug)]
pub struct ChainMap {
    source: Complex,
    target: Complex,
    comps: BTreeMap<i32, Matrix>,
}

impl PartialEq for ChainMap {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
            && self.target == other.target
            && self.degrees().into_iter().all(|i| self.comp(i) == other.comp(i))
    }
}

impl Eq for ChainMap {}

impl ChainMap {
    /// Validates shapes and the chain-map identity.
    pub fn new(source: Complex, target: Complex, comps: BTreeMap<i32, Matrix>) -> Result<Self> {
        if source.ring() != target.ring() {
            return Err(Error::Shape("chain map between complexes over different rings".into()));
        }
        for (&i, m) in &comps {
            if m.shape() != (target.rank(i), source.rank(i)) {
                return Err(Error::Shape(format!(
                    "component at degree {i} should be {}x{}, got {}x{}",
                    target.rank(i),
                    source.rank(i),
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let map = Self::unchecked(source, target, comps);
        map.validate()?;
        Ok(map)
    }

    pub(crate) fn unchecked(source: Complex, target: Complex, comps: BTreeMap<i32, Matrix>) -> Self {
        let comps = comps.into_iter().filter(|(_, m)| m.rows() > 0 && m.cols() > 0).collect();
        ChainMap { source, target, comps }
    }

    pub fn identity(c: &Complex) -> Self {
        let comps = c.degrees().map(|i| (i, Matrix::identity(c.ring(), c.rank(i)))).collect();
        Self::unchecked(c.clone(), c.clone(), comps)
    }

    pub fn zero(source: &Complex, target: &Complex) -> Self {
        Self::unchecked(source.clone(), target.clone(), BTreeMap::new())
    }

    /// Multiplication by a scalar on every component of an endomorphism of `c`.
    pub fn scalar(c: &Complex, x: &Elem) -> Self {
        let comps = c.degrees().map(|i| (i, Matrix::identity(c.ring(), c.rank(i)).scale(x))).collect();
        Self::unchecked(c.clone(), c.clone(), comps)
    }

    pub fn source(&self) -> &Complex {
        &self.source
    }

    pub fn target(&self) -> &Complex {
        &self.target
    }

    pub fn ring(&self) -> RingId {
        self.source.ring()
    }

    pub fn comp(&self, i: i32) -> Matrix {
        self.comps
            .get(&i)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.ring(), self.target.rank(i), self.source.rank(i)))
    }

    pub(crate) fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.source.degrees().chain(self.target.degrees()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn validate(&self) -> Result<()> {
        for i in self.degrees() {
            let lhs = self.target.d(i).mul(&self.comp(i));
            let rhs = self.comp(i + 1).mul(&self.source.d(i));
            if lhs != rhs {
                return Err(Error::NotAChainMap { degree: i });
            }
        }
        for i in self.degrees() {
            let lhs = self.target.d(i - 1).mul(&self.comp(i - 1));
            let rhs = self.comp(i).mul(&self.source.d(i - 1));
            if lhs != rhs {
                return Err(Error::NotAChainMap { degree: i - 1 });
            }
        }
        Ok(())
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &ChainMap) -> ChainMap {
        assert_eq!(first.target, self.source, "composition of non-composable maps");
        let comps =
            first.degrees().into_iter().chain(self.degrees()).map(|i| (i, self.comp(i).mul(&first.comp(i)))).collect();
        Self::unchecked(first.source.clone(), self.target.clone(), comps)
    }

    fn zip(&self, other: &ChainMap, f: impl Fn(&Matrix, &Matrix) -> Matrix) -> ChainMap {
        assert!(self.source == other.source && self.target == other.target, "maps with different endpoints");
        let comps = self.degrees().into_iter().map(|i| (i, f(&self.comp(i), &other.comp(i)))).collect();
        Self::unchecked(self.source.clone(), self.target.clone(), comps)
    }

    pub fn add(&self, other: &ChainMap) -> ChainMap {
        self.zip(other, Matrix::add)
    }

    pub fn sub(&self, other: &ChainMap) -> ChainMap {
        self.zip(other, Matrix::sub)
    }

    pub fn scale(&self, x: &Elem) -> ChainMap {
        let comps = self.comps.iter().map(|(&i, m)| (i, m.scale(x))).collect();
        Self::unchecked(self.source.clone(), self.target.clone(), comps)
    }

    /// `a[k]`, with components `a^(n+k)` and no sign.
    pub fn shift(&self, k: i32) -> ChainMap {
        let comps = self.comps.iter().map(|(&i, m)| (i - k, m.clone())).collect();
        Self::unchecked(self.source.shift(k), self.target.shift(k), comps)
    }

    pub fn base_change(&self, pair: &RelPair) -> Result<ChainMap> {
        let comps = self
            .comps
            .iter()
            .map(|(&i, m)| Ok((i, m.map(pair.target(), |x| pair.map_elem(x))?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Self::unchecked(self.source.base_change(pair)?, self.target.base_change(pair)?, comps))
    }

    /// `true` when every component is an isomorphism.
    pub fn is_degreewise_iso(&self) -> bool {
        self.degrees().into_iter().all(|i| {
            let m = self.comp(i);
            m.is_square() && self.ring().is_unit(&crate::linalg::det(&m))
        })
    }

    /// Matrix of `H^i(self)` against the cohomology generators.
    pub fn induced_map(&self, i: i32) -> Matrix {
        let hs = self.source.cohomology_at(i);
        let ht = self.target.cohomology_at(i);
        let r = self.ring();
        let cols = hs.generators.cols();
        let mut out = Matrix::zeros(r, ht.generators.cols(), cols);
        for j in 0..cols {
            let z = self.comp(i).mul(&hs.generators.col(j));
            let c = ht.coordinates(&z).expect("chain maps send cocycles to cocycles");
            for (k, x) in c.into_iter().enumerate() {
                out.set(k, j, x);
            }
        }
        out
    }

    /// Mapping cone with its triangle maps.
    pub fn cone(&self) -> Cone {
        let (a, b) = (&self.source, &self.target);
        let r = self.ring();
        let degs: Vec<i32> = a.degrees().map(|i| i - 1).chain(b.degrees()).collect();
        let mut ranks = BTreeMap::new();
        let mut diffs = BTreeMap::new();
        for &n in &degs {
            ranks.insert(n, a.rank(n + 1) + b.rank(n));
            let d = Matrix::block(
                &a.d(n + 1).neg(),
                &Matrix::zeros(r, a.rank(n + 2), b.rank(n)),
                &self.comp(n + 1),
                &b.d(n),
            );
            diffs.insert(n, d);
        }
        let cone = Complex::from_parts(r, &ranks, &diffs).expect("cone is a complex");
        let a1 = a.shift(1);
        let mut incl = BTreeMap::new();
        let mut proj = BTreeMap::new();
        for &n in &degs {
            incl.insert(n, Matrix::zeros(r, a.rank(n + 1), b.rank(n)).vstack(&Matrix::identity(r, b.rank(n))));
            proj.insert(
                n,
                Matrix::identity(r, a.rank(n + 1)).neg().hstack(&Matrix::zeros(r, a.rank(n + 1), b.rank(n))),
            );
        }
        Cone {
            incl: ChainMap::unchecked(b.clone(), cone.clone(), incl),
            proj: ChainMap::unchecked(cone.clone(), a1, proj),
            cone,
        }
    }

    /// Decides whether `self` induces isomorphisms on all cohomology, via
    /// acyclicity of the cone.
    pub fn is_qis(&self) -> bool {
        self.cone().cone.is_acyclic()
    }
}

#[derive(Clone, Debug)]
pub struct Cone {
    pub cone: Complex,
    pub incl: ChainMap,
    /// Minus the canonical projection onto `A[1]`.
    pub proj: ChainMap,
}

/// Maps `h^i : A^i -> B^(i-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homotopy {
    pub comps: BTreeMap<i32, Matrix>,
}

impl Homotopy {
    pub fn zero() -> Self {
        Homotopy { comps: BTreeMap::new() }
    }

    pub fn comp(&self, source: &Complex, target: &Complex, i: i32) -> Matrix {
        self.comps.get(&i).cloned().unwrap_or_else(|| Matrix::zeros(source.ring(), target.rank(i - 1), source.rank(i)))
    }

    /// The null-homotopic map `d h + h d`.
    pub fn boundary(&self, source: &Complex, target: &Complex) -> ChainMap {
        let degs: Vec<i32> = source.degrees().chain(target.degrees()).collect();
        let comps = degs
            .into_iter()
            .map(|i| {
                let dh = target.d(i - 1).mul(&self.comp(source, target, i));
                let hd = self.comp(source, target, i + 1).mul(&source.d(i));
                (i, dh.add(&hd))
            })
            .collect();
        ChainMap::unchecked(source.clone(), target.clone(), comps)
    }

    /// Checks `a - b = d h + h d`.
    pub fn witnesses(&self, a: &ChainMap, b: &ChainMap) -> bool {
        if a.source != b.source || a.target != b.target {
            return false;
        }
        let shapes_ok = self.comps.iter().all(|(&i, m)| m.shape() == (a.target.rank(i - 1), a.source.rank(i)));
        shapes_ok && a.sub(b) == self.boundary(&a.source, &a.target)
    }
}

/// Some `h` with `a - b = d h + h d`, or `None` if none exists over the ring.
pub fn homotopy_between(a: &ChainMap, b: &ChainMap) -> Option<Homotopy> {
    if a.source != b.source || a.target != b.target {
        return None;
    }
    let (src, tgt) = (&a.source, &a.target);
    let r = a.ring();
    let mut sys = BlockSystem::new(r);
    let degs = a.degrees();
    let (Some(&lo), Some(&hi)) = (degs.first(), degs.last()) else {
        return Some(Homotopy::zero());
    };
    let hvars: BTreeMap<i32, _> = (lo..=hi + 1).map(|i| (i, sys.var(tgt.rank(i - 1), src.rank(i)))).collect();
    for i in lo..=hi {
        let e = sys.eq(a.comp(i).sub(&b.comp(i)));
        sys.left(e, tgt.d(i - 1), hvars[&i]);
        sys.right(e, hvars[&(i + 1)], src.d(i));
    }
    let sol = sys.solve()?;
    let comps = hvars.iter().map(|(&i, &v)| (i, sol.get(v).clone())).filter(|(_, m)| !m.is_zero()).collect();
    Some(Homotopy { comps })
}

/// For a quasi-isomorphism `s: A -> B` and any `b: P -> B`, some chain map
/// `a: P -> A` with `s ∘ a` homotopic to `b`, together with the homotopy.
pub fn lift_through_qis(s: &ChainMap, b: &ChainMap) -> Option<(ChainMap, Homotopy)> {
    assert_eq!(s.target, b.target, "lift: targets differ");
    let (a_cx, b_cx, p_cx) = (&s.source, &s.target, &b.source);
    let r = s.ring();
    let mut degs: Vec<i32> = a_cx.degrees().chain(b_cx.degrees()).chain(p_cx.degrees()).collect();
    degs.sort_unstable();
    let (Some(&lo), Some(&hi)) = (degs.first(), degs.last()) else {
        return Some((ChainMap::zero(p_cx, a_cx), Homotopy::zero()));
    };
    let mut sys = BlockSystem::new(r);
    let avars: BTreeMap<i32, _> = (lo - 1..=hi + 1).map(|i| (i, sys.var(a_cx.rank(i), p_cx.rank(i)))).collect();
    let hvars: BTreeMap<i32, _> = (lo - 1..=hi + 1).map(|i| (i, sys.var(b_cx.rank(i - 1), p_cx.rank(i)))).collect();
    for i in lo - 1..=hi {
        // d_A a^i - a^(i+1) d_P = 0
        let e = sys.eq(Matrix::zeros(r, a_cx.rank(i + 1), p_cx.rank(i)));
        sys.left(e, a_cx.d(i), avars[&i]);
        sys.right(e, avars[&(i + 1)], p_cx.d(i).neg());
        // s a^i - d_B h^i - h^(i+1) d_P = b^i
        let e = sys.eq(b.comp(i));
        sys.left(e, s.comp(i), avars[&i]);
        sys.left(e, b_cx.d(i - 1).neg(), hvars[&i]);
        sys.right(e, hvars[&(i + 1)], p_cx.d(i).neg());
    }
    let sol = sys.solve()?;
    let a =
        ChainMap::unchecked(p_cx.clone(), a_cx.clone(), avars.iter().map(|(&i, &v)| (i, sol.get(v).clone())).collect());
    let h = Homotopy {
        comps: hvars.iter().map(|(&i, &v)| (i, sol.get(v).clone())).filter(|(_, m)| !m.is_zero()).collect(),
    };
    Some((a, h))
}

/// Generators of the module of chain maps `source -> target`.
pub fn chain_map_generators(source: &Complex, target: &Complex) -> Vec<ChainMap> {
    let r = source.ring();
    let mut degs: Vec<i32> = source.degrees().chain(target.degrees()).collect();
    degs.sort_unstable();
    let (Some(&lo), Some(&hi)) = (degs.first(), degs.last()) else {
        return Vec::new();
    };
    let mut sys = BlockSystem::new(r);
    let vars: BTreeMap<i32, _> = (lo..=hi).map(|i| (i, sys.var(target.rank(i), source.rank(i)))).collect();
    for i in lo - 1..=hi {
        let e = sys.eq(Matrix::zeros(r, target.rank(i + 1), source.rank(i)));
        if let Some(&v) = vars.get(&i) {
            sys.left(e, target.d(i), v);
        }
        if let Some(&v) = vars.get(&(i + 1)) {
            sys.right(e, v, source.d(i).neg());
        }
    }
    sys.homogeneous_generators()
        .into_iter()
        .map(|s| {
            let comps = vars.iter().map(|(&i, &v)| (i, s.get(v).clone())).collect();
            ChainMap::unchecked(source.clone(), target.clone(), comps)
        })
        .collect()
}

/// Free resolution of `coker(presentation)` over a regular ring in scope,
/// as a two-term complex in degrees -1, 0.
pub fn resolve_presented(presentation: &Matrix) -> Result<Complex> {
    let r = presentation.ring();
    if !r.is_regular() {
        return Err(Error::Domain(format!(
            "modules over {r} need not have finite free resolutions; supply a free complex"
        )));
    }
    // the image of a matrix over a PID is free; keep a basis of it
    let s = snf(presentation);
    let basis = s.u_inv.mul(&s.d).select_cols(&(0..s.rank).collect::<Vec<_>>());
    Ok(Complex::two_term(-1, basis))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> RingId {
        RingId::Int
    }

    fn tor(n: i64) -> Complex {
        Complex::two_term(0, Matrix::from_i64(z(), &[&[n]]))
    }

    #[test]
    fn validate_examples() {
        assert!(Complex::zero(z()).validate().is_ok());
        assert!(tor(5).validate().is_ok());
        let one = Matrix::from_i64(z(), &[&[1]]);
        let bad = Complex::new(z(), 0, vec![1, 1, 1], vec![one.clone(), one]).unwrap();
        assert_eq!(bad.validate(), Err(Error::NotAComplex { degree: 0 }));
    }

    #[test]
    fn shift_examples() {
        assert!(Complex::zero(z()).shift(3).is_zero());
        let s = tor(5).shift(1);
        assert_eq!(s.support(), Some((-1, 0)));
        assert_eq!(s.d(-1), Matrix::from_i64(z(), &[&[-5]]));
        assert_eq!(s.shift(-1), tor(5));
    }

    #[test]
    fn cone_examples() {
        let f2 = RingId::PrimeField(2);
        let c = Complex::free(f2, 0, 1);
        assert!(ChainMap::identity(&c).cone().cone.is_acyclic());

        let r = RingId::DualNum(3);
        let rr = Complex::free(r, 0, 1);
        let eps = ChainMap::scalar(&rr, &r.dual(0, 1));
        let cone = eps.cone().cone;
        assert_eq!(cone.support(), Some((-1, 0)));
        assert_eq!(cone.rank(-1), 1);
        assert_eq!(cone.rank(0), 1);
        assert_eq!(cone.d(-1), Matrix::diag(r, &[r.dual(0, 1)]));

        let zero_to_c = ChainMap::zero(&Complex::zero(z()), &tor(7));
        assert_eq!(zero_to_c.cone().cone, tor(7));
    }

    #[test]
    fn cone_maps_are_chain_maps() {
        let r = RingId::DualNum(3);
        let rr = Complex::free(r, 0, 1);
        let cone = ChainMap::scalar(&rr, &r.dual(0, 1)).cone();
        cone.incl.validate().unwrap();
        cone.proj.validate().unwrap();
        assert!(cone.proj.compose(&cone.incl).comps.values().all(Matrix::is_zero));
    }

    #[test]
    fn cohomology_examples() {
        let c = Complex::two_term(0, Matrix::from_i64(z(), &[&[5, 0], &[0, 3]]));
        let h = c.cohomology();
        assert!(h.get(0).unwrap().is_zero());
        let h1 = h.get(1).unwrap();
        assert_eq!(h1.torsion(), vec![z().from_i64(15)]);
        assert_eq!(h1.free_rank(), 0);

        let free = Complex::new(z(), 0, vec![2, 3], vec![]).unwrap();
        let h = free.cohomology();
        assert_eq!(h.get(0).unwrap().free_rank(), 2);
        assert_eq!(h.get(1).unwrap().free_rank(), 3);

        let r = RingId::DualNum(3);
        let e = r.dual(0, 1);
        let cone = ChainMap::scalar(&Complex::free(r, 0, 1), &e).cone().cone;
        let h = cone.cohomology();
        let hm1 = h.get(-1).unwrap();
        let h0 = h.get(0).unwrap();
        assert_eq!(hm1.orders, vec![e.clone()]);
        assert_eq!(h0.orders, vec![e.clone()]);
        assert_eq!(hm1.generators, Matrix::diag(r, std::slice::from_ref(&e)));
        assert_eq!(h0.generators, Matrix::diag(r, &[r.one()]));
    }

    #[test]
    fn cohomology_euler_characteristic_over_fields() {
        let f = RingId::PrimeField(3);
        let d0 = Matrix::from_i64(f, &[&[1, 0], &[0, 0], &[2, 0]]);
        let d1 = Matrix::from_i64(f, &[&[1, 0, 1]]);
        let c = Complex::new(f, 0, vec![2, 3, 1], vec![d0, d1]).unwrap();
        c.validate().unwrap();
        let h = c.cohomology();
        let alt: i64 = h.groups.iter().map(|(&i, g)| sign(i) * g.free_rank() as i64).sum();
        assert_eq!(alt, c.euler_characteristic());
        assert!(h.groups.values().all(|g| g.torsion().is_empty()));
    }

    #[test]
    fn homotopy_examples() {
        let r = RingId::DualNum(3);
        let rr = Complex::free(r, 0, 1);
        let cone = ChainMap::scalar(&rr, &r.dual(0, 1)).cone();
        let a = cone.incl.compose(&ChainMap::scalar(&rr, &r.dual(1, 1)));
        let b = cone.incl.clone();
        let h = homotopy_between(&a, &b).unwrap();
        assert!(h.witnesses(&a, &b));
        assert_eq!(h.comps.len(), 1);
        assert_eq!(h.comps[&0], Matrix::diag(r, &[r.one()]));

        assert_eq!(homotopy_between(&a, &a), Some(Homotopy::zero()));

        let f2 = RingId::PrimeField(2);
        let c = Complex::free(f2, 0, 1);
        assert!(homotopy_between(&ChainMap::identity(&c), &ChainMap::zero(&c, &c)).is_none());
    }

    #[test]
    fn qis_examples() {
        let f2 = RingId::PrimeField(2);
        let c = Complex::free(f2, 0, 1);
        assert!(ChainMap::identity(&c).is_qis());
        assert!(!ChainMap::zero(&c, &c).is_qis());
        let r = RingId::DualNum(3);
        let rr = Complex::free(r, 0, 1);
        assert!(ChainMap::scalar(&rr, &r.dual(1, 1)).is_qis());
        assert!(!ChainMap::scalar(&rr, &r.dual(0, 1)).is_qis());
    }

    #[test]
    fn base_change_examples() {
        let zq = RelPair::new(z(), RingId::Rat).unwrap();
        let c = tor(5).base_change(&zq).unwrap();
        assert!(c.is_acyclic());
        assert!(Complex::zero(z()).base_change(&zq).unwrap().is_zero());
        let z6 = RelPair::new(z(), RingId::IntInv(2)).unwrap();
        let c = tor(6).base_change(&z6).unwrap();
        let h1 = c.cohomology_at(1);
        assert_eq!(h1.torsion(), vec![RingId::IntInv(2).from_i64(3)]);
    }

    #[test]
    fn direct_sum_examples() {
        let c = tor(4);
        let s = c.direct_sum(&Complex::zero(z()));
        assert_eq!(s.sum, c);
        let d = Complex::new(z(), -1, vec![2, 1], vec![]).unwrap();
        let s = c.direct_sum(&d);
        for i in -1..=1 {
            assert_eq!(s.sum.rank(i), c.rank(i) + d.rank(i));
        }
        for m in [&s.inl, &s.inr, &s.prl, &s.prr] {
            m.validate().unwrap();
        }
    }

    #[test]
    fn induced_maps_on_cohomology() {
        let c = tor(6);
        let two = ChainMap::scalar(&c, &z().from_i64(2));
        assert_eq!(two.induced_map(1), Matrix::from_i64(z(), &[&[2]]));
        let seven = ChainMap::scalar(&c, &z().from_i64(7));
        assert_eq!(seven.induced_map(1), Matrix::from_i64(z(), &[&[1]]));
    }

    #[test]
    fn resolution_of_presented_module() {
        // Z/6 presented by [6] and Z/2 + Z by [[2],[0]]
        let c = resolve_presented(&Matrix::from_i64(z(), &[&[2, 4], &[0, 0]])).unwrap();
        let h0 = c.cohomology_at(0);
        assert_eq!(h0.torsion(), vec![z().from_i64(2)]);
        assert_eq!(h0.free_rank(), 1);
        assert!(c.cohomology_at(-1).is_zero());
        let r = RingId::DualNum(2);
        assert!(resolve_presented(&Matrix::diag(r, &[r.dual(0, 1)])).is_err());
    }

    #[test]
    fn lift_through_identity() {
        let f = RingId::PrimeField(3);
        let c = Complex::two_term(0, Matrix::from_i64(f, &[&[1], &[0]]));
        let id = ChainMap::identity(&c);
        let (a, h) = lift_through_qis(&id, &id).unwrap();
        a.validate().unwrap();
        assert!(h.witnesses(&a, &id));
    }

    #[test]
    fn chain_maps_of_a_free_module() {
        let f = RingId::PrimeField(5);
        let c = Complex::free(f, 0, 2);
        assert_eq!(chain_map_generators(&c, &c).len(), 4);
        let t = tor(3);
        // chain self-maps of [Z -3-> Z] are pairs (x, x)
        let gens = chain_map_generators(&t, &t);
        assert_eq!(gens.len(), 1);
        gens[0].validate().unwrap();
    }
}
