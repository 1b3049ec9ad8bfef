//! Cut modulus through its dual potential problem.
//!
//! Admissible edge densities for the cut family are exactly the `ρ` with a
//! unit `E`-`F` flow `φ` satisfying `|φ_e| <= a_e ρ_e`, so the modulus is
//! `min Σ c_e |φ_e|^q` over unit flows with `c_e = len_e a_e^{1-q}`. Its
//! concave dual runs over potentials `v` with `v = 0` on `E`, `v = 1` on `F`:
//!
//! `Mod = max_v (1/q) (p K(v))^{-(q-1)}`, `K(v) = Σ k_e |v_b - v_a|^p`,
//!
//! where `p = q/(q-1)` and `k_e = (q-1) c_e^{1-p} q^{-p}`. Every potential
//! therefore gives a lower bound, and the minimiser of `K` yields the flow.

use nalgebra::DVector;
use nalgebra_sparse::factorization::{CscCholesky, CscSymbolicCholesky};
use nalgebra_sparse::pattern::SparsityPattern;

use crate::network::Network;

pub(crate) struct CapacityOutcome {
    /// Unit-flow density `|φ_e| / a_e` before the admissibility check.
    pub rho: Vec<f64>,
    pub potential: Vec<f64>,
    pub lower_bound: f64,
    pub newton_steps: usize,
    pub converged: bool,
}

struct Edge {
    a: usize,
    b: usize,
    k: f64,
    c: f64,
}

/// `fixed[v]` is `Some(0)` on `E`, `Some(1)` on `F`.
pub(crate) fn capacity_cut_modulus(net: &Network, fixed: &[Option<f64>], q: f64, tol: f64) -> CapacityOutcome {
    let p = q / (q - 1.0);
    let n = net.vertex_count();
    let edges: Vec<Edge> = net
        .graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let a_e = net.edge_area[i].max(1e-300);
            let c = rec.len * a_e.powf(1.0 - q);
            Edge { a: rec.a as usize, b: rec.b as usize, k: (q - 1.0) * c.powf(1.0 - p) * q.powf(-p), c }
        })
        .collect();

    let mut var = vec![usize::MAX; n];
    let mut nv = 0;
    for v in 0..n {
        if fixed[v].is_none() {
            var[v] = nv;
            nv += 1;
        }
    }
    let mut x: Vec<f64> = (0..n).map(|v| fixed[v].unwrap_or(0.5)).collect();

    let mut cols: Vec<Vec<usize>> = (0..nv).map(|j| vec![j]).collect();
    for e in &edges {
        let (ia, ib) = (var[e.a], var[e.b]);
        if ia != usize::MAX && ib != usize::MAX {
            cols[ia].push(ib);
            cols[ib].push(ia);
        }
    }
    let mut offsets = vec![0];
    let mut indices = Vec::new();
    for col in &mut cols {
        col.sort_unstable();
        col.dedup();
        indices.extend_from_slice(col);
        offsets.push(indices.len());
    }
    let slot =
        |row: usize, col: usize| offsets[col] + indices[offsets[col]..offsets[col + 1]].binary_search(&row).unwrap();
    let edge_slots: Vec<[usize; 4]> = edges
        .iter()
        .map(|e| {
            let (ia, ib) = (var[e.a], var[e.b]);
            let s = |r: usize, c: usize| if r == usize::MAX || c == usize::MAX { usize::MAX } else { slot(r, c) };
            [s(ia, ia), s(ib, ib), s(ia, ib), s(ib, ia)]
        })
        .collect();
    let nnz = indices.len();
    let pattern =
        SparsityPattern::try_from_offsets_and_indices(nv, nv, offsets.clone(), indices.clone()).expect("valid pattern");
    let mut symbolic = Some(CscSymbolicCholesky::factor(pattern));
    let mut factor: Option<CscCholesky<f64>> = None;

    let exact_k = |x: &[f64]| edges.iter().map(|e| e.k * (x[e.b] - x[e.a]).abs().powf(p)).sum::<f64>();
    let smooth_k = |x: &[f64], eta: f64| {
        edges.iter().map(|e| e.k * ((x[e.b] - x[e.a]).powi(2) + eta * eta).powf(p / 2.0)).sum::<f64>()
    };
    let bound = |kv: f64| if kv > 0.0 { (p * kv).powf(-(q - 1.0)) / q } else { 0.0 };

    let stiff = stiff_forest(n, &edges, fixed);

    let mut eta = 1.0;
    let mut steps = 0;
    let mut lower: f64 = 0.0;
    let mut converged = false;
    let mut values = vec![0.0; nnz];
    let mut grad = vec![0.0; nv];
    let mut flow = vec![0.0; edges.len()];
    let mut outflow = 0.0;
    'stages: for _ in 0..40 {
        for _ in 0..100 {
            values.iter_mut().for_each(|v| *v = 0.0);
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (e, sl) in edges.iter().zip(&edge_slots) {
                let d = x[e.b] - x[e.a];
                let r2 = d * d + eta * eta;
                let g = e.k * p * r2.powf(p / 2.0 - 1.0) * d;
                let h = e.k * p * r2.powf(p / 2.0 - 2.0) * ((p - 1.0) * d * d + eta * eta);
                if var[e.b] != usize::MAX {
                    grad[var[e.b]] += g;
                    values[sl[1]] += h;
                }
                if var[e.a] != usize::MAX {
                    grad[var[e.a]] -= g;
                    values[sl[0]] += h;
                }
                if sl[2] != usize::MAX {
                    values[sl[2]] -= h;
                    values[sl[3]] -= h;
                }
            }
            let ok = match factor.as_mut() {
                Some(f) => f.refactor(&values).is_ok(),
                None => match CscCholesky::factor_numerical(symbolic.take().unwrap(), &values) {
                    Ok(f) => {
                        factor = Some(f);
                        true
                    }
                    Err(_) => false,
                },
            };
            if !ok {
                break 'stages;
            }
            let rhs = DVector::from_iterator(nv, grad.iter().map(|g| -g));
            let dx = factor.as_ref().unwrap().solve(&rhs);
            let decrement: f64 = -grad.iter().zip(dx.iter()).map(|(g, d)| g * d).sum::<f64>();
            steps += 1;
            let f0 = smooth_k(&x, eta);
            if !(decrement / 2.0 > 1e-20 * f0) {
                break;
            }
            let mut alpha = 1.0;
            let mut trial = x.clone();
            loop {
                for v in 0..n {
                    if var[v] != usize::MAX {
                        trial[v] = x[v] + alpha * dx[var[v]];
                    }
                }
                if smooth_k(&trial, eta) <= f0 - 0.25 * alpha * decrement {
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    break;
                }
            }
            if alpha < 1e-12 {
                break;
            }
            x = trial;
        }
        lower = lower.max(bound(exact_k(&x)));

        for (i, e) in edges.iter().enumerate() {
            let d = x[e.b] - x[e.a];
            flow[i] = e.k * p * (d * d + eta * eta).powf(p / 2.0 - 1.0) * d;
        }
        stiff.rebalance(&edges, &mut flow);
        outflow = 0.0;
        for (i, e) in edges.iter().enumerate() {
            match (fixed[e.a], fixed[e.b]) {
                (Some(va), _) if va == 0.0 => outflow += flow[i],
                (_, Some(vb)) if vb == 0.0 => outflow -= flow[i],
                _ => {}
            }
        }
        if outflow > 0.0 {
            let upper: f64 = edges.iter().zip(&flow).map(|(e, f)| e.c * (f / outflow).abs().powf(q)).sum();
            if std::env::var_os("CAPMOD_TRACE").is_some() {
                eprintln!("eta {eta:.3e} steps {steps} lower {lower:.6e} upper {upper:.6e}");
            }
            if upper - lower <= 0.25 * tol * upper {
                converged = true;
                break;
            }
        }
        eta /= 8.0;
    }
    let rho = (0..edges.len())
        .map(|i| if outflow > 0.0 { (flow[i] / outflow).abs() / net.edge_area[i].max(1e-300) } else { 0.0 })
        .collect();
    CapacityOutcome { rho, potential: x, lower_bound: lower, newton_steps: steps, converged }
}

/// Edges whose conductance exceeds the typical one by this factor have
/// their flow recovered from conservation instead of from the potential.
const STIFF_RATIO: f64 = 1e6;

/// Spanning forest of the stiff edges, in leaf-to-root order.
struct StiffForest {
    /// `(vertex, edge to its parent)` for every non-root forest vertex.
    order: Vec<(usize, usize)>,
    /// Stiff edges off the forest; they carry no flow.
    dropped: Vec<usize>,
    n: usize,
}

fn stiff_forest(n: usize, edges: &[Edge], fixed: &[Option<f64>]) -> StiffForest {
    let mut ks: Vec<f64> = edges.iter().map(|e| e.k).filter(|k| *k > 0.0).collect();
    let limit = if ks.is_empty() {
        f64::INFINITY
    } else {
        let mid = ks.len() / 2;
        ks.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
        ks[mid] * STIFF_RATIO
    };
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut is_stiff = vec![false; edges.len()];
    for (i, e) in edges.iter().enumerate() {
        if e.k > limit {
            is_stiff[i] = true;
            adj[e.a].push((e.b, i));
            adj[e.b].push((e.a, i));
        }
    }
    let mut seen = vec![false; n];
    let mut used = vec![false; edges.len()];
    let mut order = Vec::new();
    // roots at fixed vertices first so their components drain into them
    let roots = (0..n).filter(|&v| fixed[v].is_some()).chain((0..n).filter(|&v| fixed[v].is_none()));
    for r in roots {
        if seen[r] || adj[r].is_empty() {
            continue;
        }
        seen[r] = true;
        let mut stack = vec![r];
        let mut visit = Vec::new();
        while let Some(v) = stack.pop() {
            for &(w, i) in &adj[v] {
                if !seen[w] && fixed[w].is_none() {
                    seen[w] = true;
                    used[i] = true;
                    visit.push((w, i));
                    stack.push(w);
                }
            }
        }
        order.extend(visit.into_iter().rev());
    }
    let dropped = (0..edges.len()).filter(|&i| is_stiff[i] && !used[i]).collect();
    StiffForest { order, dropped, n }
}

impl StiffForest {
    /// Resets the stiff flows so every free forest vertex is balanced.
    fn rebalance(&self, edges: &[Edge], flow: &mut [f64]) {
        if self.order.is_empty() {
            return;
        }
        for &i in &self.dropped {
            flow[i] = 0.0;
        }
        for &(_, i) in &self.order {
            flow[i] = 0.0;
        }
        let mut div = vec![0.0; self.n];
        for (i, e) in edges.iter().enumerate() {
            div[e.a] += flow[i];
            div[e.b] -= flow[i];
        }
        for &(v, i) in &self.order {
            let e = &edges[i];
            // push the surplus of v across its parent edge
            let f = if e.a == v { -div[v] } else { div[v] };
            flow[i] = f;
            div[e.a] += f;
            div[e.b] -= f;
        }
    }
}
