//! The simplex solver against exhaustive vertex enumeration in exact
//! rational arithmetic.
#![allow(clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use vlbcac::lp::{LinearProgram, LpOutcome, Relation, Sense};

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Rows `a . x (rel) b` over nonnegative `x`, maximize `c . x`.
#[derive(Debug, Clone)]
struct Problem {
    c: Vec<i64>,
    rows: Vec<(Vec<i64>, Relation, i64)>,
}

/// Solve `m x = rhs` exactly; `None` if singular.
fn solve_square(
    mut m: Vec<Vec<BigRational>>,
    mut rhs: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[col][col];
                for k in col..n {
                    let v = &f * &m[col][k];
                    m[r][k] -= v;
                }
                let v = &f * &rhs[col];
                rhs[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| &rhs[i] / &m[i][i]).collect())
}

/// Best vertex of the (bounded) feasible region, or `None` if it is empty.
fn enumerate(p: &Problem) -> Option<BigRational> {
    let nv = p.c.len();
    // Hyperplanes: every row plus every x_k = 0.
    let mut planes: Vec<(Vec<BigRational>, BigRational)> = p
        .rows
        .iter()
        .map(|(a, _, b)| (a.iter().map(|&v| q(v)).collect(), q(*b)))
        .collect();
    for k in 0..nv {
        planes.push((
            (0..nv)
                .map(|i| {
                    if i == k {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect(),
            BigRational::zero(),
        ));
    }
    let feasible = |x: &[BigRational]| {
        x.iter().all(|v| !v.is_negative())
            && p.rows.iter().all(|(a, rel, b)| {
                let lhs: BigRational = a.iter().zip(x).map(|(&ai, xi)| q(ai) * xi).sum();
                match rel {
                    Relation::Le => lhs <= q(*b),
                    Relation::Ge => lhs >= q(*b),
                    Relation::Eq => lhs == q(*b),
                }
            })
    };
    let mut best: Option<BigRational> = None;
    let total = planes.len();
    let mut pick = (0..nv).collect::<Vec<_>>();
    loop {
        let m = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let rhs = pick.iter().map(|&i| planes[i].1.clone()).collect();
        if let Some(x) = solve_square(m, rhs) {
            if feasible(&x) {
                let obj: BigRational = p.c.iter().zip(&x).map(|(&c, xi)| q(c) * xi).sum();
                if best.as_ref().is_none_or(|b| obj > *b) {
                    best = Some(obj);
                }
            }
        }
        // Next combination of nv planes out of total.
        let mut i = nv;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - nv + i {
                pick[i] += 1;
                for k in i + 1..nv {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn build<S: vlbcac::scalar::Scalar>(p: &Problem, conv: impl Fn(i64) -> S) -> LinearProgram<S> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let vars: Vec<_> =
        p.c.iter()
            .enumerate()
            .map(|(k, &c)| lp.add_nonneg(format!("x{k}"), conv(c)).unwrap())
            .collect();
    for (a, rel, b) in &p.rows {
        let terms = vars
            .iter()
            .zip(a)
            .filter(|(_, &v)| v != 0)
            .map(|(&id, &v)| (id, conv(v)))
            .collect();
        lp.add_constraint(terms, *rel, conv(*b)).unwrap();
    }
    lp
}

fn problem() -> impl Strategy<Value = Problem> {
    (2usize..=4).prop_flat_map(|nv| {
        let row = (
            proptest::collection::vec(-5i64..=9, nv),
            prop_oneof![3 => Just(Relation::Le), 1 => Just(Relation::Ge), 1 => Just(Relation::Eq)],
            0i64..=30,
        );
        (
            proptest::collection::vec(-6i64..=10, nv),
            proptest::collection::vec(row, 1..=4),
        )
            .prop_map(move |(c, mut rows)| {
                // A box keeps every instance bounded.
                rows.push((vec![1; nv], Relation::Le, 40));
                Problem { c, rows }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration(p in problem()) {
        let oracle = enumerate(&p);
        let exact = build(&p, q).solve().unwrap();
        let float = build(&p, |v| v as f64).solve().unwrap();
        match oracle {
            None => {
                prop_assert_eq!(exact, LpOutcome::Infeasible);
                prop_assert!(matches!(float, LpOutcome::Infeasible));
            }
            Some(best) => {
                let LpOutcome::Optimal(sol) = exact else { return Err(TestCaseError::fail(format!("exact solver: {exact:?}"))) };
                prop_assert_eq!(&sol.objective, &best);
                let LpOutcome::Optimal(fsol) = float else { return Err(TestCaseError::fail("float solver not optimal")) };
                prop_assert!((fsol.objective - best.to_f64().unwrap()).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn enumeration_sanity() {
    // max x + y, x + 2y <= 4, 3x + y <= 6 -> (1.6, 1.2), 2.8
    let p = Problem {
        c: vec![1, 1],
        rows: vec![(vec![1, 2], Relation::Le, 4), (vec![3, 1], Relation::Le, 6)],
    };
    assert_eq!(
        enumerate(&p),
        Some(BigRational::new(BigInt::from(14), BigInt::from(5)))
    );
    let empty = Problem {
        c: vec![1, 1],
        rows: vec![(vec![1, 1], Relation::Ge, 5), (vec![1, 1], Relation::Le, 3)],
    };
    assert_eq!(enumerate(&empty), None);
}
