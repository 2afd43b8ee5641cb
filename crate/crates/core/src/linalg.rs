//! Dense exact matrices and elementary-divisor normal forms.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rings::{Elem, RingId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    ring: RingId,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl Matrix {
    pub fn zeros(ring: RingId, rows: usize, cols: usize) -> Self {
        Matrix { ring, rows, cols, data: vec![ring.zero(); rows * cols] }
    }

    pub fn identity(ring: RingId, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.set(i, i, ring.one());
        }
        m
    }

    pub fn from_fn(ring: RingId, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { ring, rows, cols, data }
    }

    pub fn from_rows(ring: RingId, rows: Vec<Vec<Elem>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Ok(Matrix { ring, rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Integer entries, mostly for tests and fixtures.
    pub fn from_i64(ring: RingId, rows: &[&[i64]]) -> Self {
        let c = rows.first().map_or(0, |r| r.len());
        Self::from_fn(ring, rows.len(), c, |i, j| ring.from_i64(rows[i][j]))
    }

    pub fn diag(ring: RingId, entries: &[Elem]) -> Self {
        let n = entries.len();
        Self::from_fn(ring, n, n, |i, j| if i == j { entries[i].clone() } else { ring.zero() })
    }

    pub fn ring(&self) -> RingId {
        self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Elem {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Elem] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| self.ring.is_zero(x))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.ring, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product shape {:?} * {:?}", self.shape(), other.shape());
        let r = self.ring;
        let mut out = Matrix::zeros(r, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if r.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if r.is_zero(b) {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = r.add(&out.data[idx], &r.mul(a, b));
                }
            }
        }
        out
    }

    fn zip(&self, other: &Matrix, f: impl Fn(&Elem, &Elem) -> Elem) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "elementwise shape mismatch");
        Matrix {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| self.ring.add(a, b))
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| self.ring.sub(a, b))
    }

    pub fn neg(&self) -> Matrix {
        self.scale(&self.ring.from_i64(-1))
    }

    pub fn scale(&self, c: &Elem) -> Matrix {
        Matrix {
            ring: self.ring,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| self.ring.mul(a, c)).collect(),
        }
    }

    /// Entrywise image under a ring map.
    pub fn map(&self, target: RingId, f: impl Fn(&Elem) -> Result<Elem>) -> Result<Matrix> {
        let data = self.data.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Matrix { ring: target, rows: self.rows, cols: self.cols, data })
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
        Matrix::from_fn(self.ring, rows.len(), cols.len(), |i, j| self.get(rows.start + i, cols.start + j).clone())
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.ring, self.rows, cols.len(), |i, j| self.get(i, cols[j]).clone())
    }

    pub fn col(&self, j: usize) -> Matrix {
        self.select_cols(&[j])
    }

    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Matrix::from_fn(self.ring, self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        Matrix::from_fn(self.ring, self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j).clone()
            } else {
                other.get(i - self.rows, j).clone()
            }
        })
    }

    /// `[[a, b], [c, d]]` assembled from blocks.
    pub fn block(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Matrix {
        a.hstack(b).vstack(&c.hstack(d))
    }

    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        let r = self.ring;
        Matrix::block(self, &Matrix::zeros(r, self.rows, other.cols), &Matrix::zeros(r, other.rows, self.cols), other)
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let r = self.ring;
        Matrix::from_fn(r, self.rows * other.rows, self.cols * other.cols, |i, j| {
            r.mul(self.get(i / other.rows, j / other.cols), other.get(i % other.rows, j % other.cols))
        })
    }

    /// Column-major flattening into a single column.
    pub fn vec(&self) -> Matrix {
        Matrix::from_fn(self.ring, self.rows * self.cols, 1, |k, _| {
            self.get(k % self.rows.max(1), k / self.rows.max(1)).clone()
        })
    }

    /// Inverse of [`Matrix::vec`].
    pub fn unvec(ring: RingId, col: &[Elem], rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(ring, rows, cols, |i, j| col[j * rows + i].clone())
    }

    pub fn format(&self) -> String {
        if self.rows == 0 || self.cols == 0 {
            return format!("[]{}x{}", self.rows, self.cols);
        }
        let rows: Vec<String> = (0..self.rows)
            .map(|i| {
                let cells: Vec<String> = (0..self.cols).map(|j| self.ring.format(self.get(i, j))).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        format!("[{}]", rows.join(","))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row_dst += c * row_src
    fn add_row(&mut self, dst: usize, src: usize, c: &Elem) {
        let r = self.ring;
        for j in 0..self.cols {
            let v = r.add(self.get(dst, j), &r.mul(c, self.get(src, j)));
            self.set(dst, j, v);
        }
    }

    /// col_dst += c * col_src
    fn add_col(&mut self, dst: usize, src: usize, c: &Elem) {
        let r = self.ring;
        for i in 0..self.rows {
            let v = r.add(self.get(i, dst), &r.mul(c, self.get(i, src)));
            self.set(i, dst, v);
        }
    }

    fn scale_row(&mut self, i: usize, c: &Elem) {
        for j in 0..self.cols {
            let v = self.ring.mul(self.get(i, j), c);
            self.set(i, j, v);
        }
    }

    fn scale_col(&mut self, j: usize, c: &Elem) {
        for i in 0..self.rows {
            let v = self.ring.mul(self.get(i, j), c);
            self.set(i, j, v);
        }
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

/// How elimination picks among equally good pivots.
///
/// `RowMajor` is the reproducible default. `Shuffled` picks uniformly among
/// the legal candidates; results that are choice-independent must not
/// change under it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotOrder {
    #[default]
    RowMajor,
    Shuffled(u64),
}

pub(crate) struct PivotChooser {
    rng: Option<ChaCha8Rng>,
}

impl PivotChooser {
    pub(crate) fn new(order: PivotOrder) -> Self {
        PivotChooser {
            rng: match order {
                PivotOrder::RowMajor => None,
                PivotOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            },
        }
    }

    pub(crate) fn pick<T: Clone>(&mut self, candidates: &[T]) -> Option<T> {
        match &mut self.rng {
            None => candidates.first().cloned(),
            Some(rng) => candidates.choose(rng).cloned(),
        }
    }
}

/// `u * a * v = d` with `u`, `v` invertible and `d` diagonal in canonical
/// form. Inverses and the determinants of `u`, `v` are tracked alongside.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: Matrix,
    pub u_inv: Matrix,
    pub d: Matrix,
    pub v: Matrix,
    pub v_inv: Matrix,
    pub rank: usize,
    pub det_u: Elem,
    pub det_v: Elem,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<Elem> {
        (0..self.d.rows.min(self.d.cols)).map(|i| self.d.get(i, i).clone()).collect()
    }
}

struct SnfCalc {
    s: Snf,
    chooser: PivotChooser,
}

impl SnfCalc {
    fn ring(&self) -> RingId {
        self.s.d.ring
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.s.d.swap_rows(a, b);
        self.s.u.swap_rows(a, b);
        self.s.u_inv.swap_cols(a, b);
        self.s.det_u = self.ring().neg(&self.s.det_u);
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.s.d.swap_cols(a, b);
        self.s.v.swap_cols(a, b);
        self.s.v_inv.swap_rows(a, b);
        self.s.det_v = self.ring().neg(&self.s.det_v);
    }

    fn add_row(&mut self, dst: usize, src: usize, c: &Elem) {
        let r = self.ring();
        self.s.d.add_row(dst, src, c);
        self.s.u.add_row(dst, src, c);
        self.s.u_inv.add_col(src, dst, &r.neg(c));
    }

    fn add_col(&mut self, dst: usize, src: usize, c: &Elem) {
        let r = self.ring();
        self.s.d.add_col(dst, src, c);
        self.s.v.add_col(dst, src, c);
        self.s.v_inv.add_row(src, dst, &r.neg(c));
    }

    fn scale_row(&mut self, i: usize, unit: &Elem) {
        let r = self.ring();
        let inv = r.inverse(unit).expect("row scaling by a unit");
        self.s.d.scale_row(i, unit);
        self.s.u.scale_row(i, unit);
        self.s.u_inv.scale_col(i, &inv);
        self.s.det_u = r.mul(&self.s.det_u, unit);
    }

    /// Non-zero entry of minimal norm in the trailing block.
    fn choose_pivot(&mut self, t: usize) -> Option<(usize, usize)> {
        let r = self.ring();
        let d = &self.s.d;
        let mut best = None;
        let mut candidates = Vec::new();
        for i in t..d.rows {
            for j in t..d.cols {
                if let Some(n) = r.norm(d.get(i, j)) {
                    match &best {
                        Some(b) if n > *b => {}
                        Some(b) if n == *b => candidates.push((i, j)),
                        _ => {
                            best = Some(n);
                            candidates.clear();
                            candidates.push((i, j));
                        }
                    }
                }
            }
        }
        self.chooser.pick(&candidates)
    }

    fn run(&mut self) {
        let r = self.ring();
        let (m, n) = self.s.d.shape();
        let mut t = 0;
        while t < m.min(n) {
            let Some((pi, pj)) = self.choose_pivot(t) else { break };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let pivot = self.s.d.get(t, t).clone();
                let mut dirty = false;
                for i in t + 1..m {
                    let x = self.s.d.get(i, t).clone();
                    if r.is_zero(&x) {
                        continue;
                    }
                    let (q, rem) = r.div_rem(&x, &pivot);
                    self.add_row(i, t, &r.neg(&q));
                    dirty |= !r.is_zero(&rem);
                }
                for j in t + 1..n {
                    let x = self.s.d.get(t, j).clone();
                    if r.is_zero(&x) {
                        continue;
                    }
                    let (q, rem) = r.div_rem(&x, &pivot);
                    self.add_col(j, t, &r.neg(&q));
                    dirty |= !r.is_zero(&rem);
                }
                if dirty {
                    // a remainder of smaller norm becomes the new pivot
                    let mut best: Option<(num_bigint::BigUint, usize, usize)> = None;
                    let cells = (t + 1..m).map(|i| (i, t)).chain((t + 1..n).map(|j| (t, j)));
                    for (i, j) in cells {
                        if let Some(nrm) = r.norm(self.s.d.get(i, j)) {
                            if best.as_ref().is_none_or(|b| nrm < b.0) {
                                best = Some((nrm, i, j));
                            }
                        }
                    }
                    let (_, i, j) = best.expect("dirty implies a remainder");
                    self.swap_rows(t, i);
                    self.swap_cols(t, j);
                    continue;
                }
                // divisibility of the trailing block
                let bad_row = (t + 1..m).find(|&i| (t + 1..n).any(|j| r.divide(self.s.d.get(i, j), &pivot).is_none()));
                if let Some(i) = bad_row {
                    self.add_row(t, i, &r.one());
                    continue;
                }
                break;
            }
            let (unit, _) = r.normalize(self.s.d.get(t, t));
            let inv = r.inverse(&unit).expect("normalising unit");
            self.scale_row(t, &inv);
            t += 1;
        }
        self.s.rank = t;
    }
}

pub fn snf(a: &Matrix) -> Snf {
    snf_with(a, PivotOrder::RowMajor)
}

pub fn snf_with(a: &Matrix, order: PivotOrder) -> Snf {
    let r = a.ring;
    let (m, n) = a.shape();
    let mut calc = SnfCalc {
        s: Snf {
            u: Matrix::identity(r, m),
            u_inv: Matrix::identity(r, m),
            d: a.clone(),
            v: Matrix::identity(r, n),
            v_inv: Matrix::identity(r, n),
            rank: 0,
            det_u: r.one(),
            det_v: r.one(),
        },
        chooser: PivotChooser::new(order),
    };
    calc.run();
    calc.s
}

/// Some `x` with `a * x = b`, or `None` if the system has no solution over
/// the ring.
pub fn solve(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    solve_with(a, b, PivotOrder::RowMajor)
}

pub fn solve_with(a: &Matrix, b: &Matrix, order: PivotOrder) -> Option<Matrix> {
    assert_eq!(a.rows, b.rows, "solve: row mismatch");
    let r = a.ring;
    let s = snf_with(a, order);
    let rhs = s.u.mul(b);
    let mut y = Matrix::zeros(r, a.cols, b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let v = rhs.get(i, j);
            if i < s.rank {
                y.set(i, j, r.divide(v, s.d.get(i, i))?);
            } else if !r.is_zero(v) {
                return None;
            }
        }
    }
    Some(s.v.mul(&y))
}

/// Columns generating the kernel of `a`.
pub fn kernel(a: &Matrix) -> Matrix {
    kernel_with(a, PivotOrder::RowMajor)
}

pub fn kernel_with(a: &Matrix, order: PivotOrder) -> Matrix {
    let r = a.ring;
    let s = snf_with(a, order);
    let mut cols = Vec::new();
    for j in 0..a.cols {
        let g = if j < s.rank { r.annihilator(s.d.get(j, j)) } else { Some(r.one()) };
        if let Some(g) = g {
            cols.push(s.v.col(j).scale(&g));
        }
    }
    cols.into_iter().reduce(|acc, c| acc.hstack(&c)).unwrap_or_else(|| Matrix::zeros(r, a.cols, 0))
}

/// Kernel generators with, for each, a generator of its annihilator
/// (zero for free generators). Together they present `ker a` as
/// `R^m / (diag(relations))`.
pub fn kernel_presentation(a: &Matrix) -> (Matrix, Vec<Elem>) {
    let r = a.ring;
    let s = snf(a);
    let mut gens = Matrix::zeros(r, a.cols, 0);
    let mut rels = Vec::new();
    for j in 0..a.cols {
        let (g, rel) = if j < s.rank {
            match r.annihilator(s.d.get(j, j)) {
                // ann(ann(d)) = (d) in a chain ring
                Some(g) => (g, s.d.get(j, j).clone()),
                None => continue,
            }
        } else {
            (r.one(), r.zero())
        };
        gens = gens.hstack(&s.v.col(j).scale(&g));
        rels.push(rel);
    }
    (gens, rels)
}

pub fn det(a: &Matrix) -> Elem {
    det_with(a, PivotOrder::RowMajor)
}

pub fn det_with(a: &Matrix, order: PivotOrder) -> Elem {
    assert!(a.is_square(), "det of a non-square matrix");
    let r = a.ring;
    let s = snf_with(a, order);
    if s.rank < a.rows {
        // over chain rings the trailing diagonal is zero too
        return r.zero();
    }
    let diag = s.diagonal().iter().fold(r.one(), |acc, x| r.mul(&acc, x));
    let uv = r.mul(&s.det_u, &s.det_v);
    r.mul(&diag, &r.inverse(&uv).expect("transforms are invertible"))
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    if !a.is_square() {
        return None;
    }
    let d = det(a);
    if !a.ring.is_unit(&d) {
        return None;
    }
    solve(a, &Matrix::identity(a.ring, a.rows))
}

pub fn rank(a: &Matrix) -> usize {
    snf(a).rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rings() -> Vec<RingId> {
        vec![
            RingId::Int,
            RingId::Rat,
            RingId::IntInv(6),
            RingId::PrimeField(5),
            RingId::LocalZ(2, 3),
            RingId::LocalZ(3, 2),
            RingId::DualNum(3),
        ]
    }

    pub(crate) fn random_elem(ring: RingId, rng: &mut ChaCha8Rng) -> Elem {
        match ring {
            RingId::Rat | RingId::IntInv(_) => {
                let n: i64 = rng.gen_range(-6..=6);
                let dens: &[i64] = if ring == RingId::Rat { &[1, 2, 3, 5, 7] } else { &[1, 2, 3, 4] };
                let d = dens[rng.gen_range(0..dens.len())];
                ring.parse(&format!("{n}/{d}")).unwrap()
            }
            RingId::DualNum(p) => ring.dual(rng.gen_range(0..p as i64), rng.gen_range(0..p as i64)),
            _ => ring.from_i64(rng.gen_range(-6..=6)),
        }
    }

    fn random_matrix(ring: RingId, rng: &mut ChaCha8Rng) -> Matrix {
        let m = rng.gen_range(0..=4);
        let n = rng.gen_range(0..=4);
        Matrix::from_fn(ring, m, n, |_, _| random_elem(ring, rng))
    }

    fn leibniz(a: &Matrix) -> Elem {
        let r = a.ring();
        let n = a.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = r.zero();
        permute(&mut perm, 0, &mut |p| {
            let mut inversions = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            let mut term = if inversions % 2 == 0 { r.one() } else { r.from_i64(-1) };
            for (i, &pi) in p.iter().enumerate() {
                term = r.mul(&term, a.get(i, pi));
            }
            total = r.add(&total, &term);
        });
        total
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    fn is_diagonal(d: &Matrix) -> bool {
        (0..d.rows()).all(|i| (0..d.cols()).all(|j| i == j || d.ring().is_zero(d.get(i, j))))
    }

    #[test]
    fn snf_examples() {
        let z = RingId::Int;
        let s = snf(&Matrix::from_i64(z, &[&[5, 0], &[0, 3]]));
        assert_eq!(s.diagonal(), vec![z.from_i64(1), z.from_i64(15)]);
        let f2 = RingId::PrimeField(2);
        let s = snf(&Matrix::from_i64(f2, &[&[1, 1], &[1, 1]]));
        assert_eq!(s.diagonal(), vec![f2.one(), f2.zero()]);
        for r in rings() {
            let id = Matrix::identity(r, 3);
            let s = snf(&id);
            assert_eq!(s.d, id);
        }
    }

    #[test]
    fn snf_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for ring in rings() {
            for k in 0..200 {
                let a = random_matrix(ring, &mut rng);
                let order = if k % 2 == 0 { PivotOrder::RowMajor } else { PivotOrder::Shuffled(k) };
                let s = snf_with(&a, order);
                assert_eq!(s.u.mul(&a).mul(&s.v), s.d, "{ring} {a}");
                assert!(is_diagonal(&s.d));
                assert_eq!(s.u.mul(&s.u_inv), Matrix::identity(ring, a.rows()));
                assert_eq!(s.v.mul(&s.v_inv), Matrix::identity(ring, a.cols()));
                let diag = s.diagonal();
                for (i, x) in diag.iter().enumerate() {
                    assert_eq!(ring.normalize(x).0, ring.one(), "diagonal not canonical");
                    if i + 1 < diag.len() {
                        assert!(ring.divide(&diag[i + 1], x).is_some(), "divisibility chain broken {a}");
                    }
                }
                if a.is_square() {
                    assert_eq!(s.det_u, leibniz(&s.u));
                    assert_eq!(s.det_v, leibniz(&s.v));
                }
            }
        }
    }

    #[test]
    fn solve_examples() {
        let z = RingId::Int;
        let x = solve(&Matrix::from_i64(z, &[&[2]]), &Matrix::from_i64(z, &[&[4]])).unwrap();
        assert_eq!(x, Matrix::from_i64(z, &[&[2]]));
        assert!(solve(&Matrix::from_i64(z, &[&[2]]), &Matrix::from_i64(z, &[&[3]])).is_none());
        let r = RingId::DualNum(3);
        let e = Matrix::diag(r, &[r.dual(0, 1)]);
        let x = solve(&e, &e).unwrap();
        assert_eq!(e.mul(&x), e);
    }

    fn all_matrices(ring: RingId, rows: usize, cols: usize) -> Vec<Matrix> {
        let elems = ring.elements().unwrap();
        let n = rows * cols;
        let mut out = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            out.push(Matrix::from_fn(ring, rows, cols, |i, j| elems[idx[i * cols + j]].clone()));
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < elems.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                return out;
            }
        }
    }

    #[test]
    fn solve_matches_exhaustive_search() {
        for ring in [RingId::PrimeField(2), RingId::DualNum(3)] {
            let shapes: &[(usize, usize)] = &[(1, 1), (1, 2), (2, 1), (2, 2)];
            for &(m, n) in shapes {
                let xs = all_matrices(ring, n, 1);
                let bs = all_matrices(ring, m, 1);
                let mats = all_matrices(ring, m, n);
                // subsample the 2x2 dual-number case to keep this quick
                let step = if mats.len() > 2000 { 37 } else { 1 };
                for a in mats.iter().step_by(step) {
                    for b in &bs {
                        let exists = xs.iter().any(|x| a.mul(x) == *b);
                        match solve(a, b) {
                            Some(x) => assert_eq!(a.mul(&x), *b),
                            None => assert!(!exists, "missed solution for {a} x = {b}"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let f2 = RingId::PrimeField(2);
        assert_eq!(kernel(&Matrix::zeros(f2, 2, 2)), Matrix::identity(f2, 2));
        let z = RingId::Int;
        assert_eq!(kernel(&Matrix::from_i64(z, &[&[5]])).cols(), 0);
        let r = RingId::DualNum(3);
        let k = kernel(&Matrix::diag(r, &[r.dual(0, 1)]));
        assert_eq!(k, Matrix::diag(r, &[r.dual(0, 1)]));
    }

    #[test]
    fn kernel_is_annihilated_and_complete_small() {
        for ring in [RingId::PrimeField(2), RingId::DualNum(3), RingId::LocalZ(2, 2)] {
            for a in all_matrices(ring, 1, 2).iter().chain(all_matrices(ring, 2, 1).iter()) {
                let k = kernel(a);
                assert!(a.mul(&k).is_zero());
                // every kernel vector is a combination of the generators
                for x in all_matrices(ring, a.cols(), 1) {
                    if a.mul(&x).is_zero() {
                        assert!(solve(&k, &x).is_some(), "{a}: {x} not generated");
                    }
                }
            }
        }
    }

    #[test]
    fn det_examples() {
        let z = RingId::Int;
        assert_eq!(det(&Matrix::from_i64(z, &[&[5, 0], &[0, 3]])), z.from_i64(15));
        let r = RingId::DualNum(3);
        assert_eq!(det(&Matrix::diag(r, &[r.dual(1, 1)])), r.dual(1, 1));
        assert_eq!(det(&Matrix::zeros(z, 0, 0)), z.one());
    }

    #[test]
    fn det_matches_leibniz() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for ring in rings() {
            for n in 0..=4 {
                for k in 0..30 {
                    let a = Matrix::from_fn(ring, n, n, |_, _| random_elem(ring, &mut rng));
                    let order = if k % 2 == 0 { PivotOrder::RowMajor } else { PivotOrder::Shuffled(k) };
                    assert_eq!(det_with(&a, order), leibniz(&a), "{ring} {a}");
                }
            }
        }
    }

    #[test]
    fn det_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for ring in rings() {
            for _ in 0..30 {
                let a = Matrix::from_fn(ring, 3, 3, |_, _| random_elem(ring, &mut rng));
                let b = Matrix::from_fn(ring, 3, 3, |_, _| random_elem(ring, &mut rng));
                assert_eq!(det(&a.mul(&b)), ring.mul(&det(&a), &det(&b)));
            }
        }
    }

    #[test]
    fn vec_round_trip() {
        let z = RingId::Int;
        let a = Matrix::from_i64(z, &[&[1, 2, 3], &[4, 5, 6]]);
        let v = a.vec();
        assert_eq!(Matrix::unvec(z, v.entries(), 2, 3), a);
        // vec(A X B) = (B^T kron A) vec(X)
        let x = Matrix::from_i64(z, &[&[1, -1], &[0, 2], &[3, 1]]);
        let b = Matrix::from_i64(z, &[&[2, 0, 1], &[1, 1, 0]]);
        let lhs = a.mul(&x).mul(&b).vec();
        let rhs = b.transpose().kron(&a).mul(&x.vec());
        assert_eq!(lhs, rhs);
    }
}
