//! The LP bounds checked against brute-force vertex enumeration of the
//! polytope `{q >= 0 : forward(q) = d}`.

use causal_bounds::bounds::{instrumental_lower, instrumental_upper, tight_bounds_lp};
use causal_bounds::classical::{cells, decision, forward, outcome, random_model, ResponseType};
use causal_bounds::epr::{toy_distribution, PolarizerAngles};
use causal_bounds::trial_data::ObservedDistribution;

/// Columns of the constraint matrix: the observed cell `(z, y, x)` hit by
/// each latent type, as row indices `4 z + 2 y + x`.
fn columns() -> Vec<[usize; 2]> {
    cells()
        .map(|(b, r)| {
            [0u8, 1].map(|z| {
                let x = decision(b, z);
                let y = outcome(r, x);
                4 * z as usize + 2 * y as usize + x as usize
            })
        })
        .collect()
}

/// Solves the 8 x k system restricted to `basis` by Gaussian elimination;
/// returns the solution if it is unique and reproduces every equation.
fn solve_basis(basis: &[usize], cols: &[[usize; 2]], b: &[f64; 8]) -> Option<Vec<f64>> {
    let k = basis.len();
    let mut m = vec![vec![0.0; k + 1]; 8];
    for (j, &c) in basis.iter().enumerate() {
        for &row in &cols[c] {
            m[row][j] = 1.0;
        }
    }
    for (row, v) in b.iter().enumerate() {
        m[row][k] = *v;
    }
    for (pivot_row, col) in (0..k).enumerate() {
        let p = (pivot_row..8).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[p][col].abs() < 1e-12 {
            return None;
        }
        m.swap(p, pivot_row);
        let pivot = m[pivot_row].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != pivot_row {
                let f = row[col] / pivot[col];
                for (v, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *v -= f * p;
                }
            }
        }
    }
    if m[k..].iter().any(|row| row[k].abs() > 1e-9) {
        return None;
    }
    Some((0..k).map(|j| m[j][k] / m[j][j]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum and maximum ACE over all basic feasible solutions, or `None` if
/// no vertex exists.
fn vertex_bounds(d: &ObservedDistribution) -> Option<(f64, f64)> {
    let cols = columns();
    let weights: Vec<f64> = cells()
        .map(|(_, r)| match r {
            ResponseType::Helped => 1.0,
            ResponseType::Hurt => -1.0,
            _ => 0.0,
        })
        .collect();
    let mut b = [0.0; 8];
    for z in 0..2 {
        for y in 0..2 {
            for x in 0..2 {
                b[4 * z + 2 * y + x] = d.prob(y, x, z);
            }
        }
    }
    // The 8 equalities have rank 7.
    let mut best: Option<(f64, f64)> = None;
    for basis in subsets(16, 7) {
        let Some(q) = solve_basis(&basis, &cols, &b) else { continue };
        if q.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let ace: f64 = basis.iter().zip(&q).map(|(&c, v)| weights[c] * v).sum();
        best = Some(match best {
            None => (ace, ace),
            Some((lo, hi)) => (lo.min(ace), hi.max(ace)),
        });
    }
    best
}

fn check_against_oracle(d: &ObservedDistribution) {
    let lp = tight_bounds_lp(d);
    let (lo, hi) = vertex_bounds(d).expect("feasible distribution has a vertex");
    assert!(lp.feasible);
    assert!((lp.lower.unwrap() - lo).abs() < 1e-9, "lower {:?} vs {lo}", lp.lower);
    assert!((lp.upper.unwrap() - hi).abs() < 1e-9, "upper {:?} vs {hi}", lp.upper);
    let max_lower = instrumental_lower(d).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_upper = instrumental_upper(d).iter().copied().fold(f64::INFINITY, f64::min);
    assert!((lo - max_lower).abs() < 1e-9 && (hi - min_upper).abs() < 1e-9);
}

#[test]
fn random_forward_images() {
    for seed in 0..12 {
        check_against_oracle(&forward(&random_model(seed)));
    }
}

#[test]
fn degenerate_distributions() {
    check_against_oracle(&ObservedDistribution::uniform());
    let mut p = [[[0.0; 2]; 2]; 2];
    // Perfect compliance: x = z.
    p[0][0][0] = 0.7;
    p[1][0][0] = 0.3;
    p[0][1][1] = 0.4;
    p[1][1][1] = 0.6;
    check_against_oracle(&ObservedDistribution::new(p, 0.5).unwrap());
}

#[test]
fn toy_distribution_is_classically_feasible() {
    let d = toy_distribution(&PolarizerAngles::VIOLATION);
    check_against_oracle(&d);
    let (lo, _) = vertex_bounds(&d).unwrap();
    assert!(lo > 0.13);
}

#[test]
fn unachievable_distribution_has_no_vertex() {
    // Everyone takes the drug and recovers under z0, nobody recovers under z1.
    let mut p = [[[0.0; 2]; 2]; 2];
    p[1][1][0] = 1.0;
    p[0][1][1] = 1.0;
    let d = ObservedDistribution::new(p, 0.5).unwrap();
    assert!(vertex_bounds(&d).is_none());
    assert!(!tight_bounds_lp(&d).feasible);
}
