//! Linear systems whose unknowns and equations are matrix blocks.
//!
//! Every term has the form `L * X * R` for a fixed unknown block `X`;
//! flattening uses `vec(L X R) = (R^T kron L) vec(X)`.

use crate::linalg::{kernel, solve_with, Matrix, PivotOrder};
use crate::rings::RingId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Eq(usize);

pub struct BlockSystem {
    ring: RingId,
    vars: Vec<(usize, usize)>,
    eqs: Vec<(usize, usize)>,
    terms: Vec<(usize, usize, Matrix, Matrix)>,
    rhs: Vec<Matrix>,
}

impl BlockSystem {
    pub fn new(ring: RingId) -> Self {
        BlockSystem { ring, vars: Vec::new(), eqs: Vec::new(), terms: Vec::new(), rhs: Vec::new() }
    }

    pub fn var(&mut self, rows: usize, cols: usize) -> Var {
        self.vars.push((rows, cols));
        Var(self.vars.len() - 1)
    }

    pub fn var_shape(&self, v: Var) -> (usize, usize) {
        self.vars[v.0]
    }

    /// Equation block `sum of terms = rhs`.
    pub fn eq(&mut self, rhs: Matrix) -> Eq {
        self.eqs.push(rhs.shape());
        self.rhs.push(rhs);
        Eq(self.eqs.len() - 1)
    }

    /// Adds `left * x * right` to equation `e`.
    pub fn term(&mut self, e: Eq, left: Matrix, x: Var, right: Matrix) {
        let (er, ec) = self.eqs[e.0];
        let (vr, vc) = self.vars[x.0];
        assert_eq!((left.rows(), left.cols()), (er, vr), "left factor shape");
        assert_eq!((right.rows(), right.cols()), (vc, ec), "right factor shape");
        self.terms.push((e.0, x.0, left, right));
    }

    /// `left * x`
    pub fn left(&mut self, e: Eq, left: Matrix, x: Var) {
        let c = self.vars[x.0].1;
        self.term(e, left, x, Matrix::identity(self.ring, c));
    }

    /// `x * right`
    pub fn right(&mut self, e: Eq, x: Var, right: Matrix) {
        let r = self.vars[x.0].0;
        self.term(e, Matrix::identity(self.ring, r), x, right);
    }

    fn offsets(shapes: &[(usize, usize)]) -> Vec<usize> {
        let mut acc = 0;
        let mut out = Vec::with_capacity(shapes.len() + 1);
        for (r, c) in shapes {
            out.push(acc);
            acc += r * c;
        }
        out.push(acc);
        out
    }

    fn assemble(&self) -> (Matrix, Matrix) {
        let r = self.ring;
        let vo = Self::offsets(&self.vars);
        let eo = Self::offsets(&self.eqs);
        let mut m = Matrix::zeros(r, *eo.last().unwrap(), *vo.last().unwrap());
        for (e, x, left, right) in &self.terms {
            let block = right.transpose().kron(left);
            for i in 0..block.rows() {
                for j in 0..block.cols() {
                    let (gi, gj) = (eo[*e] + i, vo[*x] + j);
                    let v = r.add(m.get(gi, gj), block.get(i, j));
                    m.set(gi, gj, v);
                }
            }
        }
        let mut rhs = Matrix::zeros(r, *eo.last().unwrap(), 1);
        for (k, b) in self.rhs.iter().enumerate() {
            let v = b.vec();
            for i in 0..v.rows() {
                rhs.set(eo[k] + i, 0, v.get(i, 0).clone());
            }
        }
        (m, rhs)
    }

    fn unpack(&self, x: &Matrix, col: usize) -> Vec<Matrix> {
        let vo = Self::offsets(&self.vars);
        self.vars
            .iter()
            .enumerate()
            .map(|(k, &(rows, cols))| {
                let slice: Vec<_> = (vo[k]..vo[k + 1]).map(|i| x.get(i, col).clone()).collect();
                Matrix::unvec(self.ring, &slice, rows, cols)
            })
            .collect()
    }

    pub fn solve(&self) -> Option<Solution> {
        self.solve_with(PivotOrder::RowMajor)
    }

    pub fn solve_with(&self, order: PivotOrder) -> Option<Solution> {
        let (m, rhs) = self.assemble();
        let x = solve_with(&m, &rhs, order)?;
        Some(Solution(self.unpack(&x, 0)))
    }

    /// Generators of the solution module of the homogeneous system.
    pub fn homogeneous_generators(&self) -> Vec<Solution> {
        let (m, _) = self.assemble();
        let k = kernel(&m);
        (0..k.cols()).map(|j| Solution(self.unpack(&k, j))).collect()
    }

    /// Number of scalar unknowns.
    pub fn unknowns(&self) -> usize {
        self.vars.iter().map(|(r, c)| r * c).sum()
    }

    /// Checks a candidate assignment directly against the blocks.
    pub fn satisfied_by(&self, values: &[Matrix]) -> bool {
        let mut lhs: Vec<Matrix> = self.eqs.iter().map(|&(r, c)| Matrix::zeros(self.ring, r, c)).collect();
        for (e, x, left, right) in &self.terms {
            lhs[*e] = lhs[*e].add(&left.mul(&values[*x]).mul(right));
        }
        lhs.iter().zip(&self.rhs).all(|(l, r)| l == r)
    }
}

#[derive(Clone, Debug)]
pub struct Solution(pub Vec<Matrix>);

impl Solution {
    pub fn get(&self, v: Var) -> &Matrix {
        &self.0[v.0]
    }
}
