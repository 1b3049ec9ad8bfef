//! Complete path enumeration plus a dense interior-point solve.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::corpus::TinyGraphCase;
use super::OracleError;

/// Refuses families with more simple paths than this.
pub const MAX_PATHS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    /// Energy of the final interior point (an upper bound).
    pub value: f64,
    /// Dual value of the barrier multipliers (a lower bound).
    pub lower_bound: f64,
    pub paths: usize,
    pub newton_steps: usize,
}

/// All simple paths that start in `E`, end at their first `F` vertex and do
/// not revisit `E`. Longer curves contain one of these, so they carry every
/// constraint of the full family.
pub fn enumerate_paths(case: &TinyGraphCase) -> Result<Vec<Vec<usize>>, OracleError> {
    let n = case.vertices;
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in &case.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let in_e = |v: usize| case.e.contains(&v);
    let in_f = |v: usize| case.f.contains(&v);
    let mut out = Vec::new();
    for &s in &case.e {
        let mut stack = vec![(s, 0usize)];
        let mut on = vec![false; n];
        on[s] = true;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next == adj[v].len() {
                on[v] = false;
                stack.pop();
                continue;
            }
            let w = adj[v][*next];
            *next += 1;
            if on[w] || in_e(w) {
                continue;
            }
            if in_f(w) {
                let mut p: Vec<usize> = stack.iter().map(|&(u, _)| u).collect();
                p.push(w);
                out.push(p);
                if out.len() > MAX_PATHS {
                    return Err(OracleError::TooManyPaths(case.name.clone()));
                }
                continue;
            }
            on[w] = true;
            stack.push((w, 0));
        }
    }
    Ok(out)
}

fn edge_len(case: &TinyGraphCase, a: usize, b: usize) -> f64 {
    case.edges
        .iter()
        .filter(|&&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a))
        .map(|&(_, _, l)| l)
        .fold(f64::INFINITY, f64::min)
}

/// Dual value at the central-path multipliers `λ_i = 1/(t s_i)`, after the
/// best rescaling `λ -> cλ`.
fn dual_value(a: &DMatrix<f64>, w: &DVector<f64>, x: &DVector<f64>, t: f64, p: f64) -> f64 {
    let s = a * x;
    let lambda: DVector<f64> = s.map(|si| 1.0 / (t * (si - 1.0)));
    let agg = a.transpose() * &lambda;
    let linear = lambda.sum();
    let mut curv = 0.0;
    for j in 0..x.len() {
        let rho = (agg[j] / (p * w[j])).powf(1.0 / (p - 1.0));
        curv += (p - 1.0) * w[j] * rho.powf(p);
    }
    // g(cλ) = c L - c^q K with q = p/(p-1)
    let q = p / (p - 1.0);
    if !(linear > 0.0 && curv > 0.0 && linear.is_finite() && curv.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let c = (linear / (q * curv)).powf(1.0 / (q - 1.0));
    c * linear - c.powf(q) * curv
}

/// `min Σ μ_v ρ_v^p` over `ρ >= 0` with trapezoid length `>= 1` on every
/// enumerated path, solved by a primal log-barrier method.
pub fn brute_force_modulus(case: &TinyGraphCase, p: f64) -> Result<BruteForceResult, OracleError> {
    case.validate()?;
    let paths = enumerate_paths(case)?;
    if paths.is_empty() {
        return Ok(BruteForceResult { value: 0.0, lower_bound: 0.0, paths: 0, newton_steps: 0 });
    }
    // only vertices on some path carry density
    let mut col = vec![usize::MAX; case.vertices];
    let mut vars = Vec::new();
    for path in &paths {
        for &v in path {
            if col[v] == usize::MAX {
                col[v] = vars.len();
                vars.push(v);
            }
        }
    }
    let (m, n) = (paths.len(), vars.len());
    let mut a = DMatrix::<f64>::zeros(m, n);
    for (i, path) in paths.iter().enumerate() {
        for st in path.windows(2) {
            let l = edge_len(case, st[0], st[1]);
            a[(i, col[st[0]])] += 0.5 * l;
            a[(i, col[st[1]])] += 0.5 * l;
        }
    }
    let w = DVector::from_iterator(n, vars.iter().map(|&v| case.measure[v]));
    let energy = |x: &DVector<f64>| x.iter().zip(w.iter()).map(|(xi, wi)| wi * xi.powf(p)).sum::<f64>();

    let min_row = (0..m).map(|i| a.row(i).sum()).fold(f64::INFINITY, f64::min);
    let mut x = DVector::from_element(n, 2.0 / min_row);
    let mut t = 1.0;
    let mut steps = 0;
    let mut lower = f64::NEG_INFINITY;
    let phi = |x: &DVector<f64>, t: f64| -> f64 {
        let s = &a * x;
        if s.iter().any(|&si| si <= 1.0) || x.iter().any(|&xi| xi <= 0.0) {
            return f64::INFINITY;
        }
        t * energy(x) - s.iter().map(|si| (si - 1.0).ln()).sum::<f64>() - x.iter().map(|xi| xi.ln()).sum::<f64>()
    };
    loop {
        for _ in 0..200 {
            let s = &a * &x;
            let inv: DVector<f64> = s.map(|si| 1.0 / (si - 1.0));
            let mut grad = a.transpose() * &inv;
            grad.neg_mut();
            let mut hess = a.transpose() * DMatrix::from_diagonal(&inv.component_mul(&inv)) * &a;
            for j in 0..n {
                grad[j] += t * p * w[j] * x[j].powf(p - 1.0) - 1.0 / x[j];
                hess[(j, j)] += t * p * (p - 1.0) * w[j] * x[j].powf(p - 2.0) + 1.0 / (x[j] * x[j]);
            }
            let Some(chol) = hess.cholesky() else {
                return Err(OracleError::Numerical(format!("{}: Hessian not positive definite", case.name)));
            };
            let dx = -chol.solve(&grad);
            let decrement = -grad.dot(&dx);
            steps += 1;
            if decrement / 2.0 <= 1e-14 {
                break;
            }
            let f0 = phi(&x, t);
            let mut step = 1.0;
            loop {
                let trial = &x + &dx * step;
                if phi(&trial, t) <= f0 - 0.25 * step * decrement {
                    x = trial;
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    break;
                }
            }
            if step < 1e-20 {
                break;
            }
        }
        let value = energy(&x);
        lower = lower.max(dual_value(&a, &w, &x, t, p));
        if value - lower <= 1e-10 * value || t > 1e16 {
            break;
        }
        t *= 8.0;
    }
    Ok(BruteForceResult { value: energy(&x), lower_bound: lower, paths: m, newton_steps: steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_case(n: usize) -> TinyGraphCase {
        TinyGraphCase {
            name: "path".into(),
            vertices: n + 1,
            edges: (0..n).map(|i| (i, i + 1, 1.0)).collect(),
            measure: (0..=n).map(|i| if i == 0 || i == n { 0.5 } else { 1.0 }).collect(),
            e: vec![0],
            f: vec![n],
            p: 2.0,
            expected: Some(1.0 / n as f64),
        }
    }

    #[test]
    fn single_path_is_one_over_n() {
        let r = brute_force_modulus(&path_case(5), 2.0).unwrap();
        assert_eq!(r.paths, 1);
        assert!((r.value - 0.2).abs() < 1e-9, "{r:?}");
        assert!(r.value - r.lower_bound <= 1e-9 * r.value);
    }

    #[test]
    fn enumeration_counts_cycle_paths() {
        // 4-cycle from 0 to 2: two paths
        let case = TinyGraphCase {
            name: "c4".into(),
            vertices: 4,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
            measure: vec![1.0; 4],
            e: vec![0],
            f: vec![2],
            p: 2.0,
            expected: None,
        };
        assert_eq!(enumerate_paths(&case).unwrap().len(), 2);
    }
}
