//! Simplex results checked against brute-force vertex enumeration on small
//! boxed LPs.

use proptest::prelude::*;
use sigvuln_core::lp::{self, LpModel, LpStatus, Relation, Sense, Tolerances};

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when (nearly) singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Best objective over all basic feasible points, or `None` if the
/// (bounded) feasible set is empty.
fn vertex_oracle(model: &LpModel) -> Option<f64> {
    let n = model.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &model.constraints {
        let mut row = vec![0.0; n];
        for &(j, a) in &c.coeffs {
            row[j] += a;
        }
        planes.push((row, c.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), model.lower[j]));
        planes.push((e, model.upper[j]));
    }
    let mut best: Option<f64> = None;
    for subset in combinations(planes.len(), n) {
        let a = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b = subset.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        if model.max_violation(&x) > 1e-7 {
            continue;
        }
        let v = model.objective_value(&x);
        best = Some(match (best, model.sense) {
            (None, _) => v,
            (Some(b), Sense::Minimize) => b.min(v),
            (Some(b), Sense::Maximize) => b.max(v),
        });
    }
    best
}

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)]
}

prop_compose! {
    fn boxed_lp()(n in 1usize..=5, m in 0usize..=5)
        (lo in prop::collection::vec(-4i32..=1, n),
         width in prop::collection::vec(1i32..=6, n),
         obj in prop::collection::vec(-5i32..=5, n),
         rows in prop::collection::vec((prop::collection::vec(-4i32..=4, n), relation(), -8i32..=8), m),
         maximize in any::<bool>()) -> LpModel {
        let mut model = LpModel::new(if maximize { Sense::Maximize } else { Sense::Minimize });
        for j in 0..lo.len() {
            model.add_var(format!("x{j}"), lo[j] as f64, (lo[j] + width[j]) as f64, obj[j] as f64);
        }
        for (coeffs, rel, rhs) in rows {
            let c = coeffs.iter().enumerate().filter(|(_, &a)| a != 0).map(|(j, &a)| (j, a as f64)).collect();
            model.add_constraint(c, rel, rhs as f64);
        }
        model
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(model in boxed_lp()) {
        let sol = lp::solve_lp(&model, &Tolerances::default()).unwrap();
        match vertex_oracle(&model) {
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()),
                    "simplex {} vs oracle {}", sol.objective, best);
                prop_assert!(model.max_violation(&sol.x) <= 1e-7);
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn strong_duality_at_optimum(model in boxed_lp()) {
        let sol = lp::solve_lp(&model, &Tolerances::default()).unwrap();
        if sol.status == LpStatus::Optimal {
            let d = lp::dual_objective(&model, &sol);
            prop_assert!((d - sol.objective).abs() <= 1e-7 * (1.0 + sol.objective.abs()),
                "dual {} primal {}", d, sol.objective);
        }
    }

    #[test]
    fn solves_are_deterministic(model in boxed_lp()) {
        let a = lp::solve_lp(&model, &Tolerances::default()).unwrap();
        let b = lp::solve_lp(&model, &Tolerances::default()).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.iterations, b.iterations);
        if a.status == LpStatus::Optimal {
            prop_assert_eq!(a.x, b.x);
        }
    }

    #[test]
    fn warm_start_agrees_with_cold(model in boxed_lp(), j in 0usize..5, shrink in 0.0f64..1.0) {
        let tol = Tolerances::default();
        let first = lp::solve_lp(&model, &tol).unwrap();
        prop_assume!(first.status == LpStatus::Optimal);
        let j = j % model.num_vars();
        let mut lower = model.lower.clone();
        let upper = model.upper.clone();
        lower[j] += shrink * (upper[j] - lower[j]);
        let warm = lp::solve_with_bounds(&model, &lower, &upper, first.basis.as_ref(), &tol).unwrap();
        let cold = lp::solve_with_bounds(&model, &lower, &upper, None, &tol).unwrap();
        prop_assert_eq!(warm.status, cold.status);
        if cold.status == LpStatus::Optimal {
            prop_assert!((warm.objective - cold.objective).abs() <= 1e-7 * (1.0 + cold.objective.abs()));
        }
    }
}

#[test]
fn degenerate_cycling_example_terminates() {
    // Beale's classic cycling instance under textbook Dantzig pricing
    let mut m = LpModel::new(Sense::Minimize);
    let x: Vec<usize> = [-0.75, 150.0, -0.02, 6.0]
        .iter()
        .enumerate()
        .map(|(i, &c)| m.add_var(format!("x{i}"), 0.0, f64::INFINITY, c))
        .collect();
    m.add_constraint(vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Relation::Le, 0.0);
    m.add_constraint(vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Relation::Le, 0.0);
    m.add_constraint(vec![(x[2], 1.0)], Relation::Le, 1.0);
    let s = lp::solve_lp(&m, &Tolerances { bland_after: 1, ..Default::default() }).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 0.05).abs() < 1e-9);
    let s = lp::solve_lp(&m, &Tolerances::default()).unwrap();
    assert!((s.objective + 0.05).abs() < 1e-9);
}
