//! Independent optimum for small transport problems: the full coupling LP
//! over every (i, j) pair, solved with a general simplex solver. It knows
//! nothing about monotonicity, so it can catch a greedy solver that is
//! merely plausible.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Minimum of `sum pi_ij (x_i - y_j)^2` over couplings of the two discrete
/// measures given as `(freq, mass)` pairs.
pub fn min_cost(x: &[(f64, f64)], y: &[(f64, f64)]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = x
        .iter()
        .map(|(fx, _)| {
            y.iter()
                .map(|(fy, _)| lp.add_var((fx - fy).powi(2), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for (i, (_, a)) in x.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|v| (*v, 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, *a);
    }
    for (j, (_, b)) in y.iter().enumerate() {
        let column: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(column.as_slice(), ComparisonOp::Eq, *b);
    }
    lp.solve()
        .expect("coupling LP is always feasible")
        .objective()
}

/// Closed form for two points per side: `pi_00 = t` fixes every other entry
/// and the objective is linear in `t`, so the optimum sits at an end of the
/// feasible interval.
#[allow(dead_code)]
pub fn two_by_two(x: [(f64, f64); 2], y: [(f64, f64); 2]) -> f64 {
    let lo = 0f64.max(x[0].1 - y[1].1);
    let hi = x[0].1.min(y[0].1);
    let c = |i: usize, j: usize| (x[i].0 - y[j].0).powi(2);
    let at = |t: f64| {
        t * c(0, 0)
            + (x[0].1 - t) * c(0, 1)
            + (y[0].1 - t) * c(1, 0)
            + (x[1].1 - y[0].1 + t) * c(1, 1)
    };
    at(lo).min(at(hi))
}
