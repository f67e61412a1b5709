use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::plan::PlanValueVector;

/// Vectors closer than this in every component are duplicates, and an LP
/// margin at or below it counts as "never strictly best".
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

/// Keeps the plans whose value vector is the unique maximum at some belief.
pub fn dominance_prune(vectors: Vec<PlanValueVector>) -> Vec<PlanValueVector> {
    let alphas: Vec<&[f64]> = vectors.iter().map(|v| v.alpha.as_slice()).collect();
    let keep = dominance_prune_indices(&alphas);
    let mut keep = keep.into_iter().peekable();
    vectors
        .into_iter()
        .enumerate()
        .filter_map(|(i, v)| {
            if keep.peek() == Some(&i) {
                keep.next();
                Some(v)
            } else {
                None
            }
        })
        .collect()
}

fn equal(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= DOMINANCE_TOLERANCE)
}

fn covers(w: &[f64], v: &[f64]) -> bool {
    w.iter().zip(v).all(|(x, y)| *x >= y - DOMINANCE_TOLERANCE)
}

/// Indices (ascending) of the vectors [`dominance_prune`] keeps.
pub fn dominance_prune_indices(vectors: &[&[f64]]) -> Vec<usize> {
    let mut alive: Vec<usize> = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        if !alive.iter().any(|&j| equal(vectors[j], v)) {
            alive.push(i);
        }
    }
    let mut k = 0;
    while k < alive.len() {
        let v = vectors[alive[k]];
        if alive
            .iter()
            .any(|&j| j != alive[k] && covers(vectors[j], v))
        {
            alive.remove(k);
        } else {
            k += 1;
        }
    }
    if alive.len() <= 1 {
        return alive;
    }
    let dim = vectors[alive[0]].len();
    let mut k = 0;
    while k < alive.len() && alive.len() > 1 {
        let p = alive[k];
        let v = vectors[p];
        let others: Vec<&[f64]> = alive
            .iter()
            .filter(|&&j| j != p)
            .map(|&j| vectors[j])
            .collect();
        let best_at_corner =
            (0..dim).any(|s| others.iter().all(|w| v[s] > w[s] + DOMINANCE_TOLERANCE));
        if best_at_corner || witness_margin(v, &others) > DOMINANCE_TOLERANCE {
            k += 1;
        } else {
            alive.remove(k);
        }
    }
    alive
}

/// `max_b min_q b·(v − w_q)` over the belief simplex. An LP failure is
/// reported as an infinite margin so the vector is kept.
fn witness_margin(v: &[f64], others: &[&[f64]]) -> f64 {
    let scale = v
        .iter()
        .chain(others.iter().flat_map(|w| w.iter()))
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let bound = 2.0 * scale + 1.0;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let b: Vec<_> = v.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let delta = lp.add_var(1.0, (-bound, bound));
    let simplex: Vec<_> = b.iter().map(|&x| (x, 1.0)).collect();
    lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
    for w in others {
        let mut row: Vec<_> = b
            .iter()
            .zip(v.iter().zip(w.iter()))
            .map(|(&x, (vi, wi))| (x, vi - wi))
            .collect();
        row.push((delta, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 0.0);
    }
    match lp.solve().map(|o| o.into_solution()) {
        Ok(Ok(sol)) => sol.objective(),
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kept(vs: &[Vec<f64>]) -> Vec<usize> {
        let refs: Vec<&[f64]> = vs.iter().map(Vec::as_slice).collect();
        dominance_prune_indices(&refs)
    }

    #[test]
    fn corner_winners_survive() {
        assert_eq!(kept(&[vec![1.0, 0.0], vec![0.0, 1.0]]), vec![0, 1]);
    }

    #[test]
    fn pointwise_dominated_vector_goes() {
        assert_eq!(kept(&[vec![1.0, 1.0], vec![0.0, 0.0]]), vec![0]);
        assert_eq!(kept(&[vec![0.0, 0.0], vec![1.0, 1.0]]), vec![1]);
    }

    #[test]
    fn vector_below_the_upper_surface_goes() {
        // max of the corners is >= 0.5 everywhere on the simplex
        assert_eq!(
            kept(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.4, 0.4]]),
            vec![0, 1]
        );
        // ... while 0.6 pokes above it in the middle
        assert_eq!(
            kept(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.6]]),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn duplicates_keep_the_earliest() {
        assert_eq!(kept(&[vec![1.0, 2.0], vec![1.0, 2.0 + 1e-14]]), vec![0]);
    }

    #[test]
    fn vector_touching_the_surface_at_one_point_goes() {
        assert_eq!(
            kept(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]),
            vec![0, 1]
        );
    }

    #[test]
    fn three_state_interior_winner_is_found() {
        let vs = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.4, 0.4, 0.4],
            vec![0.3, 0.3, 0.3],
        ];
        assert_eq!(kept(&vs), vec![0, 1, 2, 3]);
    }

    #[test]
    fn plan_vectors_are_filtered_in_order() {
        use super::super::plan::ConditionalPlan;
        let pv = |a: usize, alpha: Vec<f64>| PlanValueVector {
            plan: ConditionalPlan::leaf(a),
            alpha,
        };
        let out = dominance_prune(vec![
            pv(0, vec![0.0, 0.0]),
            pv(1, vec![2.0, 0.0]),
            pv(2, vec![0.0, 2.0]),
        ]);
        let actions: Vec<_> = out.iter().map(|p| p.plan.action).collect();
        assert_eq!(actions, vec![1, 2]);
    }
}
