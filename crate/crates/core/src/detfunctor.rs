//! The determinant functor into graded lines.
//!
//! Every free module comes with its standard basis, so a determinant line is
//! just its degree and a morphism between lines is a unit. Sign conventions:
//!
//! * a line of rank `r` has degree `r`; `det C = ⊗ det(C^i)^((-1)^i)`,
//!   tensored in increasing degree;
//! * the symmetry `L ⊗ M -> M ⊗ L` is `(-1)^(deg L · deg M)`;
//! * `[R -u-> R]` in degrees 0, 1 has torsion `u`;
//! * `det_qis(a)` is the inverse torsion of `cone(a)` up to a sign that
//!   depends only on ranks; for acyclic ends it is `τ(A) / τ(B)`.

use std::collections::BTreeMap;

use crate::complexes::{sign, ChainMap, Complex};
use crate::error::{Error, Result};
use crate::linalg::{det_with, snf_with, solve_with, Matrix, PivotOrder};
use crate::rings::{Elem, RingId};

/// An object of the graded-line category: only its degree matters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradedLineObj {
    pub degree: i64,
}

impl GradedLineObj {
    pub fn tensor(self, other: Self) -> Self {
        GradedLineObj { degree: self.degree + other.degree }
    }

    pub fn inverse(self) -> Self {
        GradedLineObj { degree: -self.degree }
    }
}

/// An automorphism of a graded line: a unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GLMor {
    pub ring: RingId,
    pub degree: i64,
    pub unit: Elem,
}

impl GLMor {
    pub fn identity(ring: RingId, degree: i64) -> Self {
        GLMor { ring, degree, unit: ring.one() }
    }

    pub fn compose(&self, other: &GLMor) -> GLMor {
        assert_eq!(self.degree, other.degree, "composing across degrees");
        GLMor { ring: self.ring, degree: self.degree, unit: self.ring.mul(&self.unit, &other.unit) }
    }

    pub fn tensor(&self, other: &GLMor) -> GLMor {
        GLMor { ring: self.ring, degree: self.degree + other.degree, unit: self.ring.mul(&self.unit, &other.unit) }
    }

    pub fn inverse(&self) -> GLMor {
        GLMor { ring: self.ring, degree: self.degree, unit: self.ring.inverse(&self.unit).expect("unit") }
    }

    /// The symmetry `L ⊗ M -> M ⊗ L` for lines of degrees `m` and `n`.
    pub fn symmetry(ring: RingId, m: i64, n: i64) -> GLMor {
        GLMor { ring, degree: m + n, unit: ring.from_i64(if (m * n).rem_euclid(2) == 0 { 1 } else { -1 }) }
    }
}

pub fn det_obj(c: &Complex) -> GradedLineObj {
    GradedLineObj { degree: c.euler_characteristic() }
}

fn signed(ring: RingId, odd: bool) -> Elem {
    ring.from_i64(if odd { -1 } else { 1 })
}

fn alt_pow(ring: RingId, x: &Elem, i: i32) -> Elem {
    if sign(i) == 1 {
        x.clone()
    } else {
        ring.inverse(x).expect("unit")
    }
}

/// A basis of `im d^(i-1)` as the columns of a matrix.
fn boundary_basis(c: &Complex, i: i32, order: PivotOrder) -> Matrix {
    let d = c.d(i - 1);
    let s = snf_with(&d, order);
    s.u_inv.select_cols(&(0..s.rank).collect::<Vec<_>>())
}

/// Torsion of an acyclic complex of free modules.
pub fn torsion_acyclic(c: &Complex) -> Result<Elem> {
    torsion_acyclic_with(c, PivotOrder::RowMajor)
}

/// As [`torsion_acyclic`], with the given pivot order for every internal
/// elimination; the result does not depend on it.
pub fn torsion_acyclic_with(c: &Complex, order: PivotOrder) -> Result<Elem> {
    if let Some(i) = c.first_nonzero_cohomology() {
        return Err(Error::NotAcyclic { degree: i });
    }
    let r = c.ring();
    let mut tau = r.one();
    for i in c.degrees() {
        let b = boundary_basis(c, i, order);
        let next = boundary_basis(c, i + 1, order);
        let lift = solve_with(&c.d(i), &next, order).expect("acyclic: boundaries lift");
        let m = b.hstack(&lift);
        let x = det_with(&m, order);
        if !r.is_unit(&x) {
            return Err(Error::Arithmetic(format!("splitting in degree {i} is not a basis")));
        }
        tau = r.mul(&tau, &alt_pow(r, &x, i + 1));
    }
    Ok(tau)
}

/// Sign turning the inverse torsion of `cone(a)` into `τ(A) / τ(B)` when both ends
/// are acyclic: `sum_n a_(n+1) b_n + sum_k P_A(k) (1 + P_B(k))`, where
/// `P_X(k)` is the parity of `sum_(j<k) rank X^j`. Only ranks enter, and
/// the terms vanish outside the supports because `χ(A) = χ(B)` mod 2.
fn cone_sign(a: &ChainMap) -> bool {
    let (src, tgt) = (a.source(), a.target());
    let degs = a.degrees();
    let (Some(&lo), Some(&hi)) = (degs.first(), degs.last()) else {
        return false;
    };
    let mut total = 0;
    let (mut pa, mut pb) = (0, 0);
    for k in lo - 1..=hi + 1 {
        total += src.rank(k + 1) * tgt.rank(k) + pa * (1 + pb);
        pa = (pa + src.rank(k)) % 2;
        pb = (pb + tgt.rank(k)) % 2;
    }
    total % 2 == 1
}

/// `det(a)` for a quasi-isomorphism, as the unit of `det A -> det B`.
pub fn det_qis(a: &ChainMap) -> Result<GLMor> {
    det_qis_with(a, PivotOrder::RowMajor)
}

pub fn det_qis_with(a: &ChainMap, order: PivotOrder) -> Result<GLMor> {
    let r = a.ring();
    let cone = a.cone().cone;
    let tau = match torsion_acyclic_with(&cone, order) {
        Ok(t) => t,
        Err(Error::NotAcyclic { .. }) => return Err(Error::NotQis),
        Err(e) => return Err(e),
    };
    let unit = r.mul(&r.inverse(&tau).expect("unit"), &signed(r, cone_sign(a)));
    Ok(GLMor { ring: r, degree: a.source().euler_characteristic(), unit })
}

/// A degreewise split short exact sequence `0 -> A -i-> B -p-> C -> 0`
/// with a chosen degreewise section `sigma` of `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ses {
    pub i: ChainMap,
    pub p: ChainMap,
    pub sigma: BTreeMap<i32, Matrix>,
}

impl Ses {
    pub fn new(i: ChainMap, p: ChainMap, sigma: BTreeMap<i32, Matrix>) -> Result<Self> {
        if i.target() != p.source() {
            return Err(Error::InvalidSes("i and p are not composable".into()));
        }
        i.validate()?;
        p.validate()?;
        let ses = Ses { i, p, sigma };
        let r = ses.ring();
        for n in ses.degrees() {
            let s = ses.sigma_at(n);
            if s.shape() != (ses.b().rank(n), ses.c().rank(n)) {
                return Err(Error::InvalidSes(format!("section has the wrong shape in degree {n}")));
            }
            if !ses.p.comp(n).mul(&ses.i.comp(n)).is_zero() {
                return Err(Error::InvalidSes(format!("p i != 0 in degree {n}")));
            }
            if ses.p.comp(n).mul(&s) != Matrix::identity(r, ses.c().rank(n)) {
                return Err(Error::InvalidSes(format!("sigma is not a section of p in degree {n}")));
            }
            let m = ses.i.comp(n).hstack(&s);
            if !m.is_square() || !r.is_unit(&crate::linalg::det(&m)) {
                return Err(Error::InvalidSes(format!("[i | sigma] is not invertible in degree {n}")));
            }
        }
        Ok(ses)
    }

    /// Finds a section of `p` by solving `p sigma = 1` degreewise.
    pub fn from_maps(i: ChainMap, p: ChainMap) -> Result<Self> {
        let r = i.ring();
        let mut sigma = BTreeMap::new();
        for n in p.degrees() {
            let id = Matrix::identity(r, p.target().rank(n));
            let s = crate::linalg::solve(&p.comp(n), &id)
                .ok_or_else(|| Error::InvalidSes(format!("p is not split surjective in degree {n}")))?;
            sigma.insert(n, s);
        }
        Self::new(i, p, sigma)
    }

    /// `0 -> A -> A + C -> C -> 0`.
    pub fn split(a: &Complex, c: &Complex) -> Self {
        let s = a.direct_sum(c);
        let sigma = s.inr.degrees().into_iter().map(|n| (n, s.inr.comp(n))).collect();
        Ses::new(s.inl, s.prr, sigma).expect("split sequence")
    }

    /// `0 -> A -> B -> C -> 0` with `B^n = A^n + C^n` and
    /// `d_B = [[d_A, theta], [0, d_C]]`, `theta^n : C^n -> A^(n+1)`.
    pub fn twisted(a: &Complex, c: &Complex, theta: &BTreeMap<i32, Matrix>) -> Result<Self> {
        let r = a.ring();
        let mut ranks = BTreeMap::new();
        let mut diffs = BTreeMap::new();
        let degs: Vec<i32> = a.degrees().chain(c.degrees()).collect();
        for &n in &degs {
            ranks.insert(n, a.rank(n) + c.rank(n));
            let t = theta.get(&n).cloned().unwrap_or_else(|| Matrix::zeros(r, a.rank(n + 1), c.rank(n)));
            if t.shape() != (a.rank(n + 1), c.rank(n)) {
                return Err(Error::Shape(format!("twisting block in degree {n} has the wrong shape")));
            }
            diffs.insert(n, Matrix::block(&a.d(n), &t, &Matrix::zeros(r, c.rank(n + 1), a.rank(n)), &c.d(n)));
        }
        let b = Complex::from_parts(r, &ranks, &diffs)?;
        b.validate()?;
        let mut i = BTreeMap::new();
        let mut p = BTreeMap::new();
        let mut sigma = BTreeMap::new();
        for &n in &degs {
            let (x, y) = (a.rank(n), c.rank(n));
            i.insert(n, Matrix::identity(r, x).vstack(&Matrix::zeros(r, y, x)));
            p.insert(n, Matrix::zeros(r, y, x).hstack(&Matrix::identity(r, y)));
            sigma.insert(n, Matrix::zeros(r, x, y).vstack(&Matrix::identity(r, y)));
        }
        Ses::new(ChainMap::new(a.clone(), b.clone(), i)?, ChainMap::new(b, c.clone(), p)?, sigma)
    }

    /// The triangle sequence `0 -> B -> cone(f) -> A[1] -> 0` of `f: A -> B`.
    pub fn of_cone(f: &ChainMap) -> Self {
        let cone = f.cone();
        Ses::from_maps(cone.incl, cone.proj).expect("cone sequence is split")
    }

    pub fn ring(&self) -> RingId {
        self.i.ring()
    }

    pub fn a(&self) -> &Complex {
        self.i.source()
    }

    pub fn b(&self) -> &Complex {
        self.i.target()
    }

    pub fn c(&self) -> &Complex {
        self.p.target()
    }

    pub fn sigma_at(&self, n: i32) -> Matrix {
        self.sigma.get(&n).cloned().unwrap_or_else(|| Matrix::zeros(self.ring(), self.b().rank(n), self.c().rank(n)))
    }

    fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.a().degrees().chain(self.b().degrees()).chain(self.c().degrees()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Replaces the section by `sigma + i k` for degreewise `k: C -> A`.
    pub fn with_section_shifted(&self, k: &BTreeMap<i32, Matrix>) -> Result<Self> {
        let sigma = self
            .degrees()
            .into_iter()
            .map(|n| {
                let s = self.sigma_at(n);
                let s = match k.get(&n) {
                    Some(k) => s.add(&self.i.comp(n).mul(k)),
                    None => s,
                };
                (n, s)
            })
            .collect();
        Ses::new(self.i.clone(), self.p.clone(), sigma)
    }

    /// The connecting map `C -> A[1]`, `i^-1 (d_B sigma - sigma d_C)`.
    pub fn connecting(&self) -> ChainMap {
        let a1 = self.a().shift(1);
        let mut comps = BTreeMap::new();
        for n in self.degrees() {
            let x = self.b().d(n).mul(&self.sigma_at(n)).sub(&self.sigma_at(n + 1).mul(&self.c().d(n)));
            let y = crate::linalg::solve(&self.i.comp(n + 1), &x).expect("lands in the image of i");
            comps.insert(n, y);
        }
        ChainMap::new(self.c().clone(), a1, comps).expect("connecting map is a chain map")
    }
}

/// Parity of `rank B^i` for an acyclic complex, read off from module ranks:
/// `rank B^i = rank C^(i-1) - rank B^(i-1)`.
fn boundary_rank_parity(c: &Complex, i: i32) -> usize {
    c.degrees().filter(|&j| j < i).map(|j| c.rank(j)).sum::<usize>() % 2
}

/// Moving the lifts of `A`-boundaries past the `C`-boundaries in each
/// degree: `sum_i rank B_A^(i+1) * rank B_C^i`.
fn ses_sign(ses: &Ses) -> bool {
    let (a, c) = (ses.a(), ses.c());
    ses.degrees().iter().map(|&i| boundary_rank_parity(a, i + 1) * boundary_rank_parity(c, i)).sum::<usize>() % 2 == 1
}

/// The unit of `det B -> det A ⊗ det C` for a short exact sequence.
pub fn det_ses(ses: &Ses) -> Result<Elem> {
    det_ses_with(ses, PivotOrder::RowMajor)
}

pub fn det_ses_with(ses: &Ses, order: PivotOrder) -> Result<Elem> {
    let r = ses.ring();
    let mut out = signed(r, ses_sign(ses));
    for n in ses.degrees() {
        let m = ses.i.comp(n).hstack(&ses.sigma_at(n));
        let x = det_with(&m, order);
        if !r.is_unit(&x) {
            return Err(Error::InvalidSes(format!("[i | sigma] is singular in degree {n}")));
        }
        out = r.mul(&out, &alt_pow(r, &x, n));
    }
    Ok(out)
}

/// Which algorithm computes [`euler_iso`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EulerRoute {
    /// Split every `C^i` as boundaries + cohomology representatives + lifts.
    Splitting,
    /// Invert the determinant of the inclusion of cohomology representatives.
    Inclusion,
}

/// Cohomology representatives of `c` over a field, and `H(C)` as a complex
/// with zero differential.
pub fn cohomology_inclusion(c: &Complex) -> Result<ChainMap> {
    let r = c.ring();
    if !r.is_field() {
        return Err(Error::Domain(format!("{r} is not a field")));
    }
    let mut ranks = BTreeMap::new();
    let mut comps = BTreeMap::new();
    for i in c.degrees() {
        let g = c.cohomology_at(i).generators;
        ranks.insert(i, g.cols());
        comps.insert(i, g);
    }
    let h = Complex::from_parts(r, &ranks, &BTreeMap::new())?;
    ChainMap::new(h, c.clone(), comps)
}

/// The unit of `det C -> det H(C)` over a field, against the deterministic
/// cohomology representatives. For acyclic `C` this is the torsion.
pub fn euler_iso(c: &Complex, route: EulerRoute) -> Result<Elem> {
    euler_iso_with(c, route, PivotOrder::RowMajor)
}

pub fn euler_iso_with(c: &Complex, route: EulerRoute, order: PivotOrder) -> Result<Elem> {
    let r = c.ring();
    if !r.is_field() {
        return Err(Error::Domain(format!("{r} is not a field")));
    }
    match route {
        EulerRoute::Inclusion => {
            let iota = cohomology_inclusion(c)?;
            Ok(det_qis_with(&iota, order)?.inverse().unit)
        }
        EulerRoute::Splitting => {
            // Each C^i is split as [boundaries | cohomology | lifts]; pulling
            // the cohomology lines out in front of all later lift lines costs
            // sum_(i <= j) dim H^i * (number of lifts in degree j).
            let mut out = r.one();
            let (mut h_seen, mut parity) = (0, 0);
            for i in c.degrees() {
                let b = boundary_basis(c, i, order);
                let h = c.cohomology_at(i).generators;
                let next = boundary_basis(c, i + 1, order);
                let lift = solve_with(&c.d(i), &next, order).expect("boundaries lift over a field");
                let x = det_with(&b.hstack(&h).hstack(&lift), order);
                out = r.mul(&out, &alt_pow(r, &x, i + 1));
                h_seen += h.cols();
                parity += h_seen * lift.cols();
            }
            Ok(r.mul(&out, &signed(r, parity % 2 == 1)))
        }
    }
}

/// The scalar of `det M ⊗ det M^-1 -> 1` for `M` of rank `h` placed in
/// degrees 0 and 1.
pub fn canonical_unit_structure(ring: RingId, h: usize) -> Elem {
    signed(ring, (h * h.saturating_sub(1) / 2) % 2 == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{self, Bounds};

    fn z() -> RingId {
        RingId::Int
    }

    fn q(n: i64) -> Elem {
        RingId::Rat.from_i64(n)
    }

    #[test]
    fn det_obj_examples() {
        assert_eq!(det_obj(&Complex::free(z(), 0, 3)).degree, 3);
        let c = Complex::two_term(0, Matrix::from_i64(z(), &[&[1, 2], &[3, 4]]));
        assert_eq!(det_obj(&c).degree, 0);
        let d = Complex::new(z(), 0, vec![2, 3, 1], vec![]).unwrap();
        assert_eq!(det_obj(&d.shift(1)).degree, -det_obj(&d).degree);
    }

    #[test]
    fn torsion_examples() {
        assert_eq!(torsion_acyclic(&Complex::zero(z())).unwrap(), z().one());
        let one = Complex::two_term(0, Matrix::from_i64(z(), &[&[1]]));
        assert_eq!(torsion_acyclic(&one).unwrap(), z().one());
        let neg = Complex::two_term(0, Matrix::from_i64(z(), &[&[-1]]));
        assert_eq!(torsion_acyclic(&neg).unwrap(), z().from_i64(-1));
        let r = RingId::DualNum(3);
        let c = Complex::two_term(0, Matrix::diag(r, &[r.dual(1, 1)]));
        assert_eq!(torsion_acyclic(&c).unwrap(), r.dual(1, 1));
        let five = Complex::two_term(0, Matrix::diag(RingId::Rat, &[q(5)]));
        assert_eq!(torsion_acyclic(&five).unwrap(), q(5));
        // moving the complex by one degree inverts the torsion
        assert_eq!(torsion_acyclic(&five.shift(1)).unwrap(), RingId::Rat.parse("-1/5").unwrap());
        let tor = Complex::two_term(0, Matrix::from_i64(z(), &[&[5]]));
        assert_eq!(torsion_acyclic(&tor), Err(Error::NotAcyclic { degree: 1 }));
    }

    #[test]
    fn det_qis_examples() {
        let r = RingId::DualNum(3);
        let c = Complex::free(r, 0, 1);
        assert_eq!(det_qis(&ChainMap::identity(&c)).unwrap().unit, r.one());
        let a = ChainMap::scalar(&c, &r.dual(1, 1));
        assert_eq!(det_qis(&a).unwrap().unit, r.dual(1, 1));
        let eps = ChainMap::scalar(&c, &r.dual(0, 1));
        assert_eq!(det_qis(&eps), Err(Error::NotQis));

        let five = Complex::two_term(0, Matrix::diag(RingId::Rat, &[q(5)]));
        let zero = ChainMap::zero(&five, &Complex::zero(RingId::Rat));
        assert_eq!(det_qis(&zero).unwrap().unit, q(5));
    }

    #[test]
    fn det_ses_examples() {
        let a = Complex::two_term(0, Matrix::from_i64(z(), &[&[3]]));
        let c = Complex::free(z(), 1, 2);
        assert_eq!(det_ses(&Ses::split(&a, &c)).unwrap(), z().one());

        // i(x) = (2x, 0) has no unit-determinant completion over Z
        let zz = Complex::free(z(), 0, 1);
        let z2 = Complex::free(z(), 0, 2);
        let i =
            ChainMap::new(zz.clone(), z2.clone(), BTreeMap::from([(0, Matrix::from_i64(z(), &[&[2], &[0]]))])).unwrap();
        let p = ChainMap::new(z2, zz, BTreeMap::from([(0, Matrix::from_i64(z(), &[&[0, 1]]))])).unwrap();
        let sigma = BTreeMap::from([(0, Matrix::from_i64(z(), &[&[0], &[1]]))]);
        assert!(matches!(Ses::new(i, p, sigma), Err(Error::InvalidSes(_))));
    }

    #[test]
    fn det_ses_ignores_the_section() {
        let f2 = RingId::PrimeField(2);
        let mut rng = sample::rng(5);
        for _ in 0..30 {
            let a = sample::complex(f2, Bounds::new(3, 0, 2), &mut rng);
            let c = sample::complex(f2, Bounds::new(3, 0, 2), &mut rng);
            let s = sample::ses(&a, &c, &mut rng);
            let k = c.degrees().map(|n| (n, sample::matrix(f2, a.rank(n), c.rank(n), &mut rng))).collect();
            let t = s.with_section_shifted(&k).unwrap();
            assert_eq!(det_ses(&s).unwrap(), det_ses(&t).unwrap());
        }
    }

    #[test]
    fn euler_examples() {
        let rat = RingId::Rat;
        let c = Complex::new(rat, 0, vec![2, 1], vec![]).unwrap();
        for route in [EulerRoute::Splitting, EulerRoute::Inclusion] {
            assert_eq!(euler_iso(&c, route).unwrap(), rat.one());
        }
        let five = Complex::two_term(0, Matrix::diag(rat, &[q(5)]));
        for route in [EulerRoute::Splitting, EulerRoute::Inclusion] {
            assert_eq!(euler_iso(&five, route).unwrap(), torsion_acyclic(&five).unwrap());
        }
        let p = Complex::two_term(0, Matrix::from_i64(rat, &[&[1, 0], &[0, 0]]));
        assert_eq!(euler_iso(&p, EulerRoute::Splitting).unwrap(), euler_iso(&p, EulerRoute::Inclusion).unwrap());
        assert!(euler_iso(&Complex::zero(z()), EulerRoute::Splitting).is_err());
    }

    #[test]
    fn unit_structure_signs() {
        let r = RingId::Rat;
        assert_eq!(canonical_unit_structure(r, 0), r.one());
        let u1 = canonical_unit_structure(r, 1);
        assert_eq!(r.mul(&u1, &u1), r.one());
        // u(h + h') = u(h) u(h') (-1)^(h h')
        for h in 0..6 {
            for k in 0..6 {
                let lhs = canonical_unit_structure(r, h + k);
                let sym = GLMor::symmetry(r, h as i64, k as i64).unit;
                let rhs = r.mul(&r.mul(&canonical_unit_structure(r, h), &canonical_unit_structure(r, k)), &sym);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn connecting_map_of_the_cone_sequence() {
        let r = RingId::DualNum(3);
        let c = Complex::free(r, 0, 1);
        let s = Ses::of_cone(&ChainMap::scalar(&c, &r.dual(0, 1)));
        let conn = s.connecting();
        conn.validate().unwrap();
        // the triangle continues with -eps[1] when p is minus the projection
        assert_eq!(conn.comp(-1), Matrix::diag(r, &[r.dual(0, 2)]));
    }
}
