use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use proptest::prelude::*;

use kdet_core::linalg::{det, det_with, inverse, snf, snf_with};
use kdet_core::picardfiber::{RelK0Class, RelPair};
use kdet_core::{Elem, Matrix, PivotOrder, RingId};

fn int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-9i64..=9, cols), rows)
}

fn square() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=4).prop_flat_map(|n| int_matrix(n, n))
}

fn to_matrix(rows: &[Vec<i64>]) -> Matrix {
    let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    Matrix::from_i64(RingId::Int, &refs)
}

/// The Leibniz expansion, as an independent integer oracle.
fn leibniz(m: &[Vec<i64>]) -> i64 {
    fn go(m: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
        if row == m.len() {
            return 1;
        }
        let mut total = 0;
        let mut sign = 1;
        for j in 0..m.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            total += sign * m[row][j] * go(m, row + 1, used);
            used[j] = false;
            sign = -sign;
        }
        total
    }
    go(m, 0, &mut vec![false; m.len()])
}

fn int(e: &Elem) -> BigInt {
    RingId::Int.to_rational(e).expect("integer").to_integer()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn determinant_matches_leibniz(m in square(), seed in any::<u64>()) {
        let expected = RingId::Int.from_i64(leibniz(&m));
        prop_assert_eq!(det(&to_matrix(&m)), expected.clone());
        prop_assert_eq!(det_with(&to_matrix(&m), PivotOrder::Shuffled(seed)), expected);
    }

    #[test]
    fn smith_form_is_a_factorization(
        (rows, cols) in (1usize..=4, 1usize..=4),
        seed in any::<u64>(),
        entries in int_matrix(4, 4),
    ) {
        let m: Vec<Vec<i64>> = entries[..rows].iter().map(|r| r[..cols].to_vec()).collect();
        let a = to_matrix(&m);
        for s in [snf(&a), snf_with(&a, PivotOrder::Shuffled(seed))] {
            prop_assert_eq!(s.u.mul(&a).mul(&s.v), s.d.clone());
            prop_assert_eq!(s.u.mul(&s.u_inv), Matrix::identity(RingId::Int, rows));
            prop_assert_eq!(s.v.mul(&s.v_inv), Matrix::identity(RingId::Int, cols));
            let diag: Vec<BigInt> = s.diagonal().iter().map(int).collect();
            for w in diag.windows(2) {
                prop_assert!(w[1].is_multiple_of(&w[0]), "{:?} is not a divisor chain", diag);
            }
            prop_assert_eq!(diag.iter().filter(|x| **x != BigInt::from(0)).count(), s.rank);
        }
        // The invariant factors do not depend on the pivot order.
        prop_assert_eq!(snf(&a).diagonal(), snf_with(&a, PivotOrder::Shuffled(seed)).diagonal());
    }

    #[test]
    fn inverses_over_dual_numbers(a in 0i64..3, b in 0i64..3, c in 0i64..3, d in 0i64..3, x in 0i64..3, y in 0i64..3) {
        let r = RingId::DualNum(3);
        let m = Matrix::from_rows(r, vec![vec![r.dual(a, x), r.dual(b, 0)], vec![r.dual(c, y), r.dual(d, 1)]]).unwrap();
        match inverse(&m) {
            Some(inv) => {
                prop_assert_eq!(m.mul(&inv), Matrix::identity(r, 2));
                prop_assert!(r.is_unit(&det(&m)));
            }
            None => prop_assert!(!r.is_unit(&det(&m))),
        }
    }

    #[test]
    fn relative_classes_are_multiplicative(p in 1i64..200, q in 1i64..200, s in 1i64..200, t in 1i64..200, neg in any::<bool>()) {
        let pair = RelPair::new(RingId::Int, RingId::Rat).unwrap();
        let sign = if neg { -1 } else { 1 };
        let rat = |n: i64, d: i64| RingId::Rat.from_rational(&BigRational::new(n.into(), d.into())).unwrap();
        let x = RelK0Class::of_unit(pair, &rat(sign * p, q)).unwrap();
        let y = RelK0Class::of_unit(pair, &rat(s, t)).unwrap();
        let xy = RelK0Class::of_unit(pair, &rat(sign * p * s, q * t)).unwrap();
        prop_assert_eq!(x.mul(&y), xy);
        prop_assert!(x.mul(&x.inverse()).is_trivial());
    }

    #[test]
    fn elements_print_and_parse_back(a in -50i64..50, b in 1i64..50, k in 0usize..4) {
        let rings = [RingId::Rat, RingId::IntInv(6), RingId::DualNum(5), RingId::LocalZ(3, 2)];
        let r = rings[k];
        let x = match r {
            RingId::Rat => RingId::Rat.from_rational(&BigRational::new(a.into(), b.into())).unwrap(),
            RingId::IntInv(_) => r.from_rational(&BigRational::new(a.into(), BigInt::from(6).pow(b as u32 % 3))).unwrap(),
            RingId::DualNum(_) => r.dual(a, b),
            _ => r.from_i64(a),
        };
        prop_assert_eq!(r.parse(&r.format(&x)).unwrap(), x);
    }
}
