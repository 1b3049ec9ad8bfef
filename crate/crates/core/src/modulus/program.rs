//! Dual coordinate ascent for
//! `min Σ_j w_j ρ_j^p  s.t.  Σ_j a_ij ρ_j >= 1,  ρ >= 0`.
//!
//! For multipliers `λ >= 0` the Lagrangian minimizer is
//! `ρ_j = (s_j / (p w_j))^{1/(p-1)}` with `s = Aᵀλ`, and the dual function is
//! `g(λ) = Σ λ_i - (p-1) Σ w_j ρ_j^p`. Each step maximizes `g` exactly in one
//! coordinate.

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub idx: Vec<u32>,
    pub coef: Vec<f64>,
}

impl Row {
    /// Sums repeated indices and drops zero coefficients.
    pub fn new(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|e| e.0);
        let mut idx = Vec::with_capacity(pairs.len());
        let mut coef: Vec<f64> = Vec::with_capacity(pairs.len());
        for (j, c) in pairs {
            if idx.last() == Some(&j) {
                *coef.last_mut().unwrap() += c;
            } else {
                idx.push(j);
                coef.push(c);
            }
        }
        let keep: Vec<bool> = coef.iter().map(|&c| c > 0.0).collect();
        let mut k = keep.iter();
        idx.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        coef.retain(|_| *k.next().unwrap());
        Self { idx, coef }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.coef).map(|(&j, &c)| c * x[j as usize]).sum()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Program {
    p: f64,
    weight: Vec<f64>,
    rows: Vec<Row>,
    lambda: Vec<f64>,
    s: Vec<f64>,
    /// Dual value after every completed sweep.
    pub dual_history: Vec<f64>,
    pub sweeps: usize,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct InnerStats {
    pub dual: f64,
    /// Energy of the primal point rescaled to satisfy every row.
    pub primal: f64,
    pub kkt: f64,
    pub converged: bool,
}

impl Program {
    pub fn new(p: f64, weight: Vec<f64>) -> Self {
        let n = weight.len();
        Self { p, weight, rows: Vec::new(), lambda: Vec::new(), s: vec![0.0; n], dual_history: Vec::new(), sweeps: 0 }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, row: Row) {
        self.rows.push(row);
        self.lambda.push(0.0);
    }

    #[inline]
    fn rho_at(&self, j: usize, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (s / (self.p * self.weight[j])).powf(1.0 / (self.p - 1.0))
        }
    }

    pub fn primal(&self) -> Vec<f64> {
        (0..self.weight.len()).map(|j| self.rho_at(j, self.s[j])).collect()
    }

    pub fn energy(&self, rho: &[f64]) -> f64 {
        rho.iter().zip(&self.weight).map(|(r, w)| w * r.powf(self.p)).sum()
    }

    pub fn dual(&self, rho: &[f64]) -> f64 {
        self.lambda.iter().sum::<f64>() - (self.p - 1.0) * self.energy(rho)
    }

    /// Row value `Σ a_ij ρ_j(s_j + δ a_ij)` and its derivative in `δ`.
    fn row_response(&self, i: usize, delta: f64) -> (f64, f64) {
        let row = &self.rows[i];
        let mut val = 0.0;
        let mut der = 0.0;
        for (&j, &c) in row.idx.iter().zip(&row.coef) {
            let j = j as usize;
            let s = self.s[j] + delta * c;
            let r = self.rho_at(j, s);
            val += c * r;
            if s > 0.0 {
                der += c * c * r / ((self.p - 1.0) * s);
            }
        }
        (val, der)
    }

    /// Exact maximization of the dual along coordinate `i`.
    fn update(&mut self, i: usize) {
        let lam = self.lambda[i];
        let delta = if self.row_response(i, -lam).0 >= 1.0 {
            -lam
        } else {
            // with every s_j = 0 the response is φ(1)·δ^{1/(p-1)}
            let unit = self.row_response(i, 1.0).0.max(1e-300);
            let mut lo = -lam;
            let mut hi = lam.max(unit.powf(1.0 - self.p));
            while self.row_response(i, hi).0 < 1.0 {
                lo = hi;
                hi *= 4.0;
                if !hi.is_finite() {
                    return;
                }
            }
            let mut x = hi;
            for _ in 0..100 {
                let (v, d) = self.row_response(i, x);
                let f = v - 1.0;
                if f.abs() <= 1e-15 {
                    break;
                }
                if f < 0.0 {
                    lo = x;
                } else {
                    hi = x;
                }
                let newton = if d > 0.0 { x - f / d } else { f64::NAN };
                x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if hi - lo <= 1e-16 * (hi.abs() + lam) {
                    break;
                }
            }
            x
        };
        if delta == 0.0 {
            return;
        }
        self.lambda[i] = (lam + delta).max(0.0);
        let applied = self.lambda[i] - lam;
        let row = &self.rows[i];
        for (&j, &c) in row.idx.iter().zip(&row.coef) {
            let s = &mut self.s[j as usize];
            *s = (*s + applied * c).max(0.0);
        }
    }

    /// Recomputes `s = Aᵀλ` to shed accumulated rounding.
    fn refresh(&mut self) {
        self.s.iter_mut().for_each(|s| *s = 0.0);
        for (row, &l) in self.rows.iter().zip(&self.lambda) {
            for (&j, &c) in row.idx.iter().zip(&row.coef) {
                self.s[j as usize] += l * c;
            }
        }
    }

    fn stats(&self) -> InnerStats {
        let rho = self.primal();
        let dual = self.dual(&rho);
        let mut min_row = f64::INFINITY;
        let mut kkt: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let l = row.dot(&rho);
            min_row = min_row.min(l);
            // complementarity residual of λ_i ⟂ (l - 1)
            kkt = kkt.max((1.0 - l).max(0.0)).max((self.lambda[i] * (l - 1.0)).abs());
        }
        let energy = self.energy(&rho);
        let primal = if min_row > 0.0 { energy / min_row.powf(self.p) } else { f64::INFINITY };
        InnerStats { dual, primal, kkt, converged: false }
    }

    /// Sweeps all rows until `primal - dual <= tol * primal` or the sweep
    /// budget is spent.
    pub fn solve(&mut self, tol: f64, max_sweeps: usize) -> InnerStats {
        if self.rows.is_empty() {
            return InnerStats { dual: 0.0, primal: 0.0, kkt: 0.0, converged: true };
        }
        let mut st = self.stats();
        for _ in 0..max_sweeps {
            if st.primal.is_finite() && st.primal - st.dual <= tol * st.primal {
                st.converged = true;
                return st;
            }
            for i in 0..self.rows.len() {
                self.update(i);
            }
            self.refresh();
            self.sweeps += 1;
            st = self.stats();
            self.dual_history.push(st.dual);
        }
        st.converged = st.primal.is_finite() && st.primal - st.dual <= tol * st.primal;
        st
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows_strategy() -> impl Strategy<Value = Vec<Vec<(u32, f64)>>> {
        proptest::collection::vec(proptest::collection::vec((0u32..6, 0.1f64..2.0), 1..5), 2..8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn nested_constraints_increase_the_value(rows in rows_strategy(), split in 1usize..8, p in 1.5f64..4.0) {
            let weight = vec![1.0, 0.5, 2.0, 1.5, 0.8, 1.2];
            let k = split.min(rows.len());
            let solve = |rows: &[Vec<(u32, f64)>]| {
                let mut prog = Program::new(p, weight.clone());
                for r in rows {
                    prog.add_row(Row::new(r.clone()));
                }
                let st = prog.solve(1e-10, 100_000);
                assert!(st.converged);
                st.primal
            };
            let (fewer, all) = (solve(&rows[..k]), solve(&rows));
            prop_assert!(all >= fewer * (1.0 - 1e-8), "{} < {}", all, fewer);
        }
    }

    #[test]
    fn single_row_closed_form() {
        // min Σ ρ_j^2 s.t. Σ ρ_j >= 1 over n variables: ρ = 1/n, value 1/n
        let n = 5;
        let mut prog = Program::new(2.0, vec![1.0; n]);
        prog.add_row(Row::new((0..n as u32).map(|j| (j, 1.0)).collect()));
        let st = prog.solve(1e-12, 100);
        assert!(st.converged);
        assert!((st.primal - 0.2).abs() < 1e-12 && (st.dual - 0.2).abs() < 1e-12);
    }

    #[test]
    fn dual_is_monotone() {
        let mut prog = Program::new(3.0, vec![1.0, 2.0, 0.5, 1.5]);
        prog.add_row(Row::new(vec![(0, 1.0), (1, 1.0)]));
        prog.add_row(Row::new(vec![(1, 1.0), (2, 2.0)]));
        prog.add_row(Row::new(vec![(0, 0.5), (2, 1.0), (3, 1.0)]));
        let st = prog.solve(1e-12, 10_000);
        assert!(st.converged);
        assert!(prog.dual_history.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!(st.kkt < 1e-6);
    }

    #[test]
    fn redundant_row_gets_zero_multiplier() {
        let mut prog = Program::new(2.0, vec![1.0, 1.0]);
        prog.add_row(Row::new(vec![(0, 1.0), (1, 1.0)]));
        prog.add_row(Row::new(vec![(0, 0.1), (1, 0.1)]));
        prog.add_row(Row::new(vec![(0, 2.0), (1, 2.0), (0, 1.0)]));
        let st = prog.solve(1e-12, 1000);
        // only the second row binds: ρ = (5, 5), value 50
        assert!((st.primal - 50.0).abs() < 1e-9);
        assert_eq!(prog.rows[2].coef, vec![3.0, 2.0]);
    }
}
