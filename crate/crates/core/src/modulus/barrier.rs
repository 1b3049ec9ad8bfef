//! Log-barrier Newton method for the potential form of the path problem:
//!
//! `min Σ_v w_v ρ_v^p` over `ρ >= 0` and potentials `u` with `u = 0` on `E`,
//! `u = 1` on `F` and `|u_a - u_b| <= len_ab (ρ_a + ρ_b)/2` on every edge.
//!
//! A density is feasible for some `u` exactly when every `E`-`F` path has
//! trapezoid `ρ`-length at least one (take `u` = `ρ`-distance from `E`,
//! capped at one), so both problems have the same optimum.

use nalgebra::DVector;
use nalgebra_sparse::factorization::{CscCholesky, CscSymbolicCholesky};
use nalgebra_sparse::pattern::SparsityPattern;
use std::collections::VecDeque;

use crate::network::Network;

/// Vertices of larger degree are ordered last to limit fill.
const HUB_DEGREE: usize = 32;
const BARRIER_GROWTH: f64 = 16.0;

/// `s = Σ coef·x + offset > 0`.
struct Constraint {
    vars: [u32; 4],
    coef: [f64; 4],
    len: usize,
    offset: f64,
}

impl Constraint {
    fn slack(&self, x: &[f64]) -> f64 {
        (0..self.len).map(|k| self.coef[k] * x[self.vars[k] as usize]).sum::<f64>() + self.offset
    }
}

pub(crate) struct BarrierOutcome {
    pub rho: Vec<f64>,
    pub value: f64,
    /// `value` minus the central-path duality-gap bound.
    pub lower_bound: f64,
    pub newton_steps: usize,
    pub converged: bool,
}

struct Layout {
    rho_var: Vec<usize>,
    u_var: Vec<Option<usize>>,
    n_vars: usize,
    is_rho: Vec<bool>,
    weight_of_var: Vec<f64>,
}

fn layout(net: &Network, fixed: &[Option<f64>]) -> Layout {
    let n = net.vertex_count();
    let g = &net.graph;
    let (regular, hubs): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| g.degree(v) <= HUB_DEGREE);
    let mut rho_var = vec![0; n];
    let mut u_var = vec![None; n];
    let mut is_rho = Vec::new();
    let mut weight_of_var = Vec::new();
    for v in regular.into_iter().chain(hubs) {
        rho_var[v] = is_rho.len();
        is_rho.push(true);
        weight_of_var.push(net.measure[v]);
        if fixed[v].is_none() {
            u_var[v] = Some(is_rho.len());
            is_rho.push(false);
            weight_of_var.push(0.0);
        }
    }
    Layout { rho_var, u_var, n_vars: is_rho.len(), is_rho, weight_of_var }
}

fn constraints(net: &Network, fixed: &[Option<f64>], lay: &Layout) -> Vec<Constraint> {
    let mut out = Vec::new();
    for rec in net.graph.edges() {
        let (a, b) = (rec.a as usize, rec.b as usize);
        let half = 0.5 * rec.len;
        for sign in [1.0, -1.0] {
            // s = half (ρ_a + ρ_b) - sign (u_b - u_a)
            let mut c = Constraint {
                vars: [lay.rho_var[a] as u32, lay.rho_var[b] as u32, 0, 0],
                coef: [half, half, 0.0, 0.0],
                len: 2,
                offset: 0.0,
            };
            for (v, s) in [(b, -sign), (a, sign)] {
                match (lay.u_var[v], fixed[v]) {
                    (Some(j), _) => {
                        c.vars[c.len] = j as u32;
                        c.coef[c.len] = s;
                        c.len += 1;
                    }
                    (None, Some(val)) => c.offset += s * val,
                    (None, None) => unreachable!(),
                }
            }
            // with both ends fixed only the binding orientation matters
            if c.len == 2 && c.offset >= 0.0 {
                continue;
            }
            out.push(c);
        }
    }
    out
}

/// Hop-count interpolation between `E` and `F`, strictly inside `(0, 1)` on
/// free vertices.
fn initial_potential(net: &Network, fixed: &[Option<f64>]) -> Vec<f64> {
    let hops = |target: f64| {
        let n = net.vertex_count();
        let mut d = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        for v in 0..n {
            if fixed[v] == Some(target) {
                d[v] = 0;
                q.push_back(v);
            }
        }
        while let Some(v) = q.pop_front() {
            for (w, _) in net.graph.neighbors(v) {
                if d[w] == usize::MAX {
                    d[w] = d[v] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    };
    let (de, df) = (hops(0.0), hops(1.0));
    (0..net.vertex_count())
        .map(|v| match fixed[v] {
            Some(val) => val,
            None if de[v] == usize::MAX => 0.0,
            None if df[v] == usize::MAX => 0.5,
            None => de[v] as f64 / (de[v] + df[v]) as f64,
        })
        .collect()
}

/// Symmetric pattern of the Newton matrix with, per constraint, the value
/// slots of its `len²` entries.
fn newton_pattern(n_vars: usize, cons: &[Constraint]) -> (SparsityPattern, Vec<Vec<usize>>) {
    let mut cols: Vec<Vec<u32>> = (0..n_vars).map(|j| vec![j as u32]).collect();
    for c in cons {
        for i in 0..c.len {
            for k in 0..c.len {
                cols[c.vars[k] as usize].push(c.vars[i]);
            }
        }
    }
    let mut offsets = Vec::with_capacity(n_vars + 1);
    let mut indices = Vec::new();
    offsets.push(0);
    for col in &mut cols {
        col.sort_unstable();
        col.dedup();
        indices.extend(col.iter().map(|&r| r as usize));
        offsets.push(indices.len());
    }
    let slot = |row: usize, col: usize| {
        let range = offsets[col]..offsets[col + 1];
        range.start + indices[range].binary_search(&row).expect("entry in pattern")
    };
    let slots: Vec<Vec<usize>> = cons
        .iter()
        .map(|c| {
            let mut s = Vec::with_capacity(c.len * c.len);
            for k in 0..c.len {
                for i in 0..c.len {
                    s.push(slot(c.vars[i] as usize, c.vars[k] as usize));
                }
            }
            s
        })
        .collect();
    let diag = (0..n_vars).map(|j| slot(j, j)).collect();
    let mut all = slots;
    all.push(diag);
    let pattern =
        SparsityPattern::try_from_offsets_and_indices(n_vars, n_vars, offsets, indices).expect("valid pattern");
    (pattern, all)
}

/// Solves the potential form on `net` with `fixed[v] = Some(0)` on `E` and
/// `Some(1)` on `F`.
pub(crate) fn barrier_path_modulus(net: &Network, fixed: &[Option<f64>], p: f64, tol: f64) -> BarrierOutcome {
    let lay = layout(net, fixed);
    let cons = constraints(net, fixed, &lay);
    let nv = lay.n_vars;
    let (pattern, mut slots) = newton_pattern(nv, &cons);
    let diag_slots = slots.pop().unwrap();
    let nnz = pattern.nnz();
    let mut symbolic = Some(CscSymbolicCholesky::factor(pattern));
    let mut factor: Option<CscCholesky<f64>> = None;

    // strictly feasible start
    let u0 = initial_potential(net, fixed);
    let mut x = vec![0.0; nv];
    let mut steep = vec![0.0f64; net.vertex_count()];
    for rec in net.graph.edges() {
        let grad = (u0[rec.a as usize] - u0[rec.b as usize]).abs() / rec.len;
        steep[rec.a as usize] = steep[rec.a as usize].max(grad);
        steep[rec.b as usize] = steep[rec.b as usize].max(grad);
    }
    let mean = steep.iter().sum::<f64>() / steep.len().max(1) as f64;
    for v in 0..net.vertex_count() {
        x[lay.rho_var[v]] = 1.5 * steep[v] + 1e-2 * mean.max(1e-12);
        if let Some(j) = lay.u_var[v] {
            x[j] = u0[v];
        }
    }

    let energy =
        |x: &[f64]| -> f64 { (0..nv).filter(|&j| lay.is_rho[j]).map(|j| lay.weight_of_var[j] * x[j].powf(p)).sum() };
    let barrier_count = (cons.len() + net.vertex_count()) as f64;
    let phi = |x: &[f64], t: f64| -> f64 {
        let mut total = t * energy(x);
        for j in 0..nv {
            if lay.is_rho[j] {
                if x[j] <= 0.0 {
                    return f64::INFINITY;
                }
                total -= x[j].ln();
            }
        }
        for c in &cons {
            let s = c.slack(x);
            if s <= 0.0 {
                return f64::INFINITY;
            }
            total -= s.ln();
        }
        total
    };

    let mut t = barrier_count / energy(&x).max(1e-300);
    let mut steps = 0;
    let mut converged = false;
    let mut values = vec![0.0; nnz];
    let mut grad = vec![0.0; nv];
    'outer: for _ in 0..200 {
        for _ in 0..100 {
            values.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..nv {
                grad[j] = 0.0;
                if lay.is_rho[j] {
                    let (w, r) = (lay.weight_of_var[j], x[j]);
                    grad[j] = t * p * w * r.powf(p - 1.0) - 1.0 / r;
                    values[diag_slots[j]] += t * p * (p - 1.0) * w * r.powf(p - 2.0) + 1.0 / (r * r);
                }
            }
            // keeps the potential block definite on vertices with no edges
            for j in 0..nv {
                values[diag_slots[j]] += 1e-14;
            }
            for (c, sl) in cons.iter().zip(&slots) {
                let s = c.slack(&x);
                let (inv, inv2) = (1.0 / s, 1.0 / (s * s));
                for k in 0..c.len {
                    grad[c.vars[k] as usize] -= c.coef[k] * inv;
                    for i in 0..c.len {
                        values[sl[k * c.len + i]] += c.coef[k] * c.coef[i] * inv2;
                    }
                }
            }
            let chol = match factor.as_mut() {
                Some(f) => f.refactor(&values).map(|_| ()),
                None => CscCholesky::factor_numerical(symbolic.take().unwrap(), &values).map(|f| {
                    factor = Some(f);
                }),
            };
            if chol.is_err() {
                break 'outer;
            }
            let rhs = DVector::from_iterator(nv, grad.iter().map(|g| -g));
            let dx = factor.as_ref().unwrap().solve(&rhs);
            let dx: Vec<f64> = dx.iter().copied().collect();
            let decrement: f64 = -grad.iter().zip(&dx).map(|(g, d)| g * d).sum::<f64>();
            steps += 1;
            if decrement / 2.0 <= 1e-9 {
                break;
            }
            // largest step keeping every slack positive
            let mut alpha: f64 = 1.0;
            for j in 0..nv {
                if lay.is_rho[j] && dx[j] < 0.0 {
                    alpha = alpha.min(-0.99 * x[j] / dx[j]);
                }
            }
            for c in &cons {
                let ds: f64 = (0..c.len).map(|k| c.coef[k] * dx[c.vars[k] as usize]).sum();
                if ds < 0.0 {
                    alpha = alpha.min(-0.99 * c.slack(&x) / ds);
                }
            }
            let f0 = phi(&x, t);
            let mut trial = x.clone();
            loop {
                for j in 0..nv {
                    trial[j] = x[j] + alpha * dx[j];
                }
                if phi(&trial, t) <= f0 - 0.25 * alpha * decrement {
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-16 {
                    break 'outer;
                }
            }
            std::mem::swap(&mut x, &mut trial);
        }
        let value = energy(&x);
        if barrier_count / t <= tol * value {
            converged = true;
            break;
        }
        t *= BARRIER_GROWTH;
    }
    let value = energy(&x);
    let rho = (0..net.vertex_count()).map(|v| x[lay.rho_var[v]]).collect();
    BarrierOutcome { rho, value, lower_bound: value - barrier_count / t, newton_steps: steps, converged }
}
