use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::barrier::barrier_path_modulus;
use super::program::{InnerStats, Program, Row};
use super::{numeric_energy, Density, ModulusError, ModulusRecord};
use crate::graph::{dijkstra_with, Graph};
use crate::network::Network;

/// How the path problem is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Path generation on small supports, the barrier method otherwise.
    Auto,
    /// Shortest-path constraint generation with dual coordinate ascent.
    PathGeneration,
    /// Log-barrier Newton method on the potential form.
    Barrier,
}

/// Supports up to this many vertices use path generation under
/// [`Method::Auto`].
pub const AUTO_PATH_LIMIT: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub p: f64,
    /// Admissibility slack and relative duality-gap target.
    pub tol: f64,
    /// Violated constraints added per round.
    pub batch: usize,
    pub max_rounds: usize,
    pub method: Method,
}

impl SolverOptions {
    pub fn new(p: f64, tol: f64) -> Self {
        Self { p, tol, batch: 64, max_rounds: 2000, method: Method::Auto }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    fn validate(&self) -> Result<(), ModulusError> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(ModulusError::Parameter(format!("exponent p={} must exceed 1", self.p)));
        }
        if !(self.tol > 0.0 && self.tol < 0.5) {
            return Err(ModulusError::Parameter(format!("tolerance {} outside (0, 1/2)", self.tol)));
        }
        if self.batch == 0 {
            return Err(ModulusError::Parameter("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusResult {
    pub p: f64,
    /// Energy of the returned, admissible density.
    pub value: f64,
    /// Lower bound: the dual value on the generated paths, or the barrier
    /// value minus its duality-gap bound.
    pub lower_bound: f64,
    pub gap: f64,
    /// Inner primal-dual gap on the generated paths alone.
    pub inner_gap: f64,
    pub density: Density,
    /// Generated constraint paths (path generation) or the tight shortest
    /// paths of the final density (barrier), in network vertex ids.
    pub active_paths: Vec<Vec<usize>>,
    pub iterations: usize,
    pub sweeps: usize,
    /// Shortest `ρ`-length of the returned density (recomputed on the full
    /// network).
    pub min_length: f64,
    /// Shortest length before the final rescaling.
    pub raw_min_length: f64,
    pub kkt: f64,
    pub converged: bool,
    pub certified: bool,
    /// Dual value after every inner sweep.
    pub dual_history: Vec<f64>,
}

impl ModulusResult {
    pub fn record(&self, family: &str) -> ModulusRecord {
        ModulusRecord {
            family: family.to_string(),
            p: self.p,
            value: self.value,
            iterations: self.iterations,
            gap: self.gap,
            certified: self.certified,
        }
    }

    fn empty(p: f64, n: usize) -> Self {
        Self {
            p,
            value: 0.0,
            lower_bound: 0.0,
            gap: 0.0,
            inner_gap: 0.0,
            density: Density::zeros(n),
            active_paths: Vec::new(),
            iterations: 0,
            sweeps: 0,
            min_length: f64::INFINITY,
            raw_min_length: f64::INFINITY,
            kkt: 0.0,
            converged: true,
            certified: true,
            dual_history: Vec::new(),
        }
    }
}

pub(crate) fn check_sets(n: usize, e: &[usize], f: &[usize]) -> Result<(Vec<bool>, Vec<bool>), ModulusError> {
    if e.is_empty() || f.is_empty() {
        return Err(ModulusError::Family("E and F must be nonempty".into()));
    }
    let mut in_e = vec![false; n];
    let mut in_f = vec![false; n];
    for &v in e {
        if v >= n {
            return Err(ModulusError::Family(format!("vertex {v} out of range")));
        }
        in_e[v] = true;
    }
    for &v in f {
        if v >= n {
            return Err(ModulusError::Family(format!("vertex {v} out of range")));
        }
        if in_e[v] {
            return Err(ModulusError::Family(format!("vertex {v} lies in both E and F")));
        }
        in_f[v] = true;
    }
    Ok((in_e, in_f))
}

/// Vertices reachable from `E` without passing through `F`, plus the `F`
/// vertices where such walks stop. Every curve of the family has a prefix
/// inside this set, so restricting to it changes neither the path nor the
/// cut family.
pub(crate) fn support(graph: &Graph, in_e: &[bool], in_f: &[bool]) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| in_e[v]).collect();
    for &v in &queue {
        seen[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        if in_f[v] {
            continue;
        }
        for (w, _) in graph.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..n).filter(|&v| seen[v]).collect()
}

const LOOSE_TOL: f64 = 1e-2;

fn sweep_cap(prog: &Program) -> usize {
    10 * (prog.row_count() + 100)
}

fn relabel(keep: &[usize], set: &[bool]) -> Vec<usize> {
    keep.iter().enumerate().filter(|(_, &v)| set[v]).map(|(i, _)| i).collect()
}

fn step_weight<'a>(graph: &'a Graph, rho: &'a [f64]) -> impl Fn(usize) -> f64 + 'a {
    move |e| {
        let r = graph.edge(e);
        r.len * 0.5 * (rho[r.a as usize] + rho[r.b as usize])
    }
}

/// Shortest `ρ`-length of a path from `E` to `F`.
pub fn min_path_length(net: &Network, rho: &Density, e: &[usize], f: &[usize]) -> f64 {
    let g = &net.graph;
    let sp = dijkstra_with(g, e, step_weight(g, &rho.values), |_| true);
    f.iter().map(|&v| sp.dist[v]).fold(f64::INFINITY, f64::min)
}

fn path_row(graph: &Graph, path: &[usize]) -> Row {
    let mut pairs = Vec::with_capacity(2 * path.len());
    for w in path.windows(2) {
        let len = graph.edge(graph.find_edge(w[0], w[1]).expect("path step")).len;
        pairs.push((w[0] as u32, 0.5 * len));
        pairs.push((w[1] as u32, 0.5 * len));
    }
    Row::new(pairs)
}

struct Inner {
    rho: Vec<f64>,
    lower_bound: f64,
    inner_gap: f64,
    paths: Vec<Vec<usize>>,
    iterations: usize,
    sweeps: usize,
    kkt: f64,
    converged: bool,
    dual_history: Vec<f64>,
}

fn trace() -> bool {
    std::env::var_os("CAPMOD_TRACE").is_some()
}

fn generate_paths(sub: &Network, se: &[usize], sf: &[usize], opts: &SolverOptions) -> Inner {
    let g = &sub.graph;
    let mut prog = Program::new(opts.p, sub.measure.clone());
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    // intermediate rounds only need the inner solve to be accurate relative
    // to the current violation; the final round uses `floor`
    let mut floor = opts.tol / 4.0;
    let mut inner_tol = LOOSE_TOL.max(floor);
    let mut converged = false;
    let mut rounds = 0;
    let mut stats: Option<InnerStats> = None;
    while rounds < opts.max_rounds {
        rounds += 1;
        let rho = if paths.is_empty() { vec![1.0; sub.vertex_count()] } else { prog.primal() };
        let sp = dijkstra_with(g, se, step_weight(g, &rho), |_| true);
        let mut targets: Vec<usize> = sf.iter().copied().filter(|&t| sp.dist[t].is_finite()).collect();
        targets.sort_by(|&a, &b| sp.dist[a].total_cmp(&sp.dist[b]).then(a.cmp(&b)));
        if !paths.is_empty() {
            targets.retain(|&t| sp.dist[t] < 1.0 - opts.tol);
            if targets.is_empty() {
                if inner_tol <= floor && stats.is_some_and(|s| s.converged) {
                    converged = true;
                    break;
                }
                inner_tol = floor;
                stats = Some(prog.solve(inner_tol, sweep_cap(&prog)));
                continue;
            }
        }
        let mut added = 0;
        for &t in &targets {
            if added == opts.batch {
                break;
            }
            let path = sp.path_to(t).expect("finite distance");
            if seen.insert(path.clone()) {
                prog.add_row(path_row(g, &path));
                paths.push(path);
                added += 1;
            }
        }
        if added == 0 {
            // every violated path is already a constraint: the inner solve is
            // not accurate enough yet
            if inner_tol < 1e-14 {
                break;
            }
            floor = floor.min(inner_tol / 10.0);
            inner_tol = floor;
        } else if !targets.is_empty() && paths.len() > added {
            let violation = 1.0 - sp.dist[targets[0]];
            inner_tol = (0.1 * violation).clamp(floor, LOOSE_TOL.max(floor));
        }
        stats = Some(prog.solve(inner_tol, sweep_cap(&prog)));
        if trace() {
            eprintln!(
                "round {rounds}: {} rows, {} sweeps, tol {inner_tol:.1e}, {stats:?}",
                prog.row_count(),
                prog.sweeps
            );
        }
    }
    let inner = stats.expect("at least one round");
    Inner {
        rho: prog.primal(),
        lower_bound: inner.dual.max(0.0),
        inner_gap: inner.primal - inner.dual,
        paths,
        iterations: rounds,
        sweeps: prog.sweeps,
        kkt: inner.kkt,
        converged: converged && inner.primal - inner.dual <= opts.tol * inner.primal,
        dual_history: prog.dual_history.clone(),
    }
}

/// Shortest `ρ`-paths to the `F` vertices whose length is within `tol` of
/// the minimum, at most `limit` of them.
fn tight_paths(g: &Graph, rho: &[f64], se: &[usize], sf: &[usize], tol: f64, limit: usize) -> Vec<Vec<usize>> {
    let sp = dijkstra_with(g, se, step_weight(g, rho), |_| true);
    let best = sf.iter().map(|&t| sp.dist[t]).fold(f64::INFINITY, f64::min);
    let mut targets: Vec<usize> = sf.iter().copied().filter(|&t| sp.dist[t] <= best * (1.0 + tol)).collect();
    targets.sort_by(|&a, &b| sp.dist[a].total_cmp(&sp.dist[b]).then(a.cmp(&b)));
    targets.truncate(limit);
    targets.iter().filter_map(|&t| sp.path_to(t)).collect()
}

fn barrier(sub: &Network, se: &[usize], sf: &[usize], opts: &SolverOptions) -> Inner {
    let mut fixed = vec![None; sub.vertex_count()];
    for &v in se {
        fixed[v] = Some(0.0);
    }
    for &v in sf {
        fixed[v] = Some(1.0);
    }
    let out = barrier_path_modulus(sub, &fixed, opts.p, opts.tol / 4.0);
    if trace() {
        eprintln!("barrier: {} Newton steps, value {:.6e}, lower {:.6e}", out.newton_steps, out.value, out.lower_bound);
    }
    let paths = tight_paths(&sub.graph, &out.rho, se, sf, opts.tol, opts.batch);
    Inner {
        lower_bound: out.lower_bound.max(0.0),
        inner_gap: out.value - out.lower_bound,
        rho: out.rho,
        paths,
        iterations: out.newton_steps,
        sweeps: 0,
        kkt: 0.0,
        converged: out.converged,
        dual_history: Vec::new(),
    }
}

/// Discrete `p`-modulus of the family of vertex paths joining `E` to `F`.
///
/// The problem is first restricted to the part of the network reachable
/// from `E` before `F`. Small supports use shortest-path constraint
/// generation; larger ones the barrier method on the potential form (see
/// [`Method`]). Either way the returned density is re-checked by a shortest
/// path pass on the full network and rescaled to be admissible.
pub fn solve_modulus(
    net: &Network,
    e: &[usize],
    f: &[usize],
    opts: &SolverOptions,
) -> Result<ModulusResult, ModulusError> {
    opts.validate()?;
    let n = net.vertex_count();
    let (in_e, in_f) = check_sets(n, e, f)?;
    let keep = support(&net.graph, &in_e, &in_f);
    if !keep.iter().any(|&v| in_f[v]) {
        return Ok(ModulusResult::empty(opts.p, n));
    }
    let (sub, map) = net.induced(&keep);
    let (se, sf) = (relabel(&keep, &in_e), relabel(&keep, &in_f));
    let use_paths = match opts.method {
        Method::PathGeneration => true,
        Method::Barrier => false,
        Method::Auto => keep.len() <= AUTO_PATH_LIMIT,
    };
    if trace() {
        eprintln!("support {} of {n}, |E|={} |F|={}, paths={use_paths}", keep.len(), e.len(), f.len());
    }
    let inner = if use_paths { generate_paths(&sub, &se, &sf, opts) } else { barrier(&sub, &se, &sf, opts) };

    let mut rho = Density::zeros(n);
    for (i, &v) in map.iter().enumerate() {
        rho.values[v] = inner.rho[i];
    }
    let raw = min_path_length(net, &rho, e, f);
    if raw < 1.0 && raw > 0.0 {
        rho = rho.scaled(1.0 / raw);
    }
    let value = numeric_energy(&net.measure, &rho, opts.p);
    let min_length = min_path_length(net, &rho, e, f);
    let certified = inner.converged && raw >= 1.0 - opts.tol && inner.inner_gap <= opts.tol * value;
    Ok(ModulusResult {
        p: opts.p,
        value,
        lower_bound: inner.lower_bound,
        gap: value - inner.lower_bound,
        inner_gap: inner.inner_gap,
        density: rho,
        active_paths: inner.paths.into_iter().map(|p| p.into_iter().map(|v| map[v]).collect()).collect(),
        iterations: inner.iterations,
        sweeps: inner.sweeps,
        min_length,
        raw_min_length: raw,
        kkt: inner.kkt,
        converged: inner.converged,
        certified,
        dual_history: inner.dual_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_network(n: usize) -> Network {
        let g = Graph::from_edges(n + 1, (0..n as u32).map(|i| (i, i + 1, 1.0)));
        let m = g.edge_count();
        Network::new(g, vec![1.0; n + 1], vec![1.0; m])
    }

    #[test]
    fn single_path() {
        // vertex weights make each unit step carry unit measure
        let n = 6;
        let mut net = path_network(n);
        net.measure = (0..=n).map(|i| if i == 0 || i == n { 0.5 } else { 1.0 }).collect();
        let r = solve_modulus(&net, &[0], &[n], &SolverOptions::new(2.0, 1e-9)).unwrap();
        assert!(r.certified);
        assert!((r.value - 1.0 / n as f64).abs() < 1e-8, "{}", r.value);
        assert!(r.min_length >= 1.0 - 1e-12);
    }

    #[test]
    fn parallel_paths_add() {
        // k disjoint copies of the single path: moduli add
        let (k, n) = (3usize, 4usize);
        let per = n + 1;
        let edges = (0..k).flat_map(|j| (0..n).map(move |i| ((j * per + i) as u32, (j * per + i + 1) as u32, 1.0)));
        let g = Graph::from_edges(k * per, edges);
        let measure = (0..k * per).map(|v| if v % per == 0 || v % per == n { 0.5 } else { 1.0 }).collect();
        let m = g.edge_count();
        let net = Network::new(g, measure, vec![1.0; m]);
        let e: Vec<usize> = (0..k).map(|j| j * per).collect();
        let f: Vec<usize> = (0..k).map(|j| j * per + n).collect();
        let r = solve_modulus(&net, &e, &f, &SolverOptions::new(2.0, 1e-9)).unwrap();
        let expected = k as f64 / n as f64;
        assert!((r.value - expected).abs() / expected < 1e-6, "{} vs {expected}", r.value);
        assert_eq!(r.active_paths.len(), k);
    }

    #[test]
    fn barrier_agrees_with_path_generation() {
        let nx = 6;
        let net = Network::grid(nx, 4, 1.5);
        let (l, r) = Network::grid_sides(nx, 4);
        for p in [1.5, 2.0, 3.0] {
            let base = SolverOptions::new(p, 1e-7);
            let a = solve_modulus(&net, &l[1..3], &r, &base.with_method(Method::PathGeneration)).unwrap();
            let b = solve_modulus(&net, &l[1..3], &r, &base.with_method(Method::Barrier)).unwrap();
            assert!(a.certified && b.certified, "{a:?} {b:?}");
            assert!((a.value - b.value).abs() <= 1e-5 * a.value, "p={p}: {} vs {}", a.value, b.value);
            assert!(b.min_length >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn unreachable_family_has_zero_modulus() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]);
        let net = Network::new(g, vec![1.0; 4], vec![1.0; 2]);
        let r = solve_modulus(&net, &[0], &[3], &SolverOptions::new(3.0, 1e-6)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.active_paths.is_empty());
    }

    #[test]
    fn bad_input_rejected() {
        let net = path_network(3);
        assert!(solve_modulus(&net, &[0], &[0], &SolverOptions::new(2.0, 1e-6)).is_err());
        assert!(solve_modulus(&net, &[], &[3], &SolverOptions::new(2.0, 1e-6)).is_err());
        assert!(solve_modulus(&net, &[0], &[3], &SolverOptions::new(1.0, 1e-6)).is_err());
    }

    #[test]
    fn unit_square_grid_is_near_one() {
        let nx = 16;
        let net = Network::grid(nx, nx, 1.0);
        let (l, r) = Network::grid_sides(nx, nx);
        let res = solve_modulus(&net, &l, &r, &SolverOptions::new(2.0, 1e-4)).unwrap();
        assert!(res.certified, "{res:?}");
        assert!((res.value - 1.0).abs() < 0.05, "{}", res.value);
        assert!(res.dual_history.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
    }
}
