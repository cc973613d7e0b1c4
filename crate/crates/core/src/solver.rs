//! The decentralized smoothing ADMM solver: state, one bulk-synchronous
//! iteration of node and edge updates, dual ascent, configuration
//! validation, and KKT/consensus diagnostics.
//!
//! Each iteration runs five phases in order: coordinate-sequential w
//! updates per node, z updates, Psi dual ascent, per-edge g updates, and
//! xi dual ascent. Node phases read other nodes' variables only through
//! the previous iteration's edge copies, and edge phases read only
//! this iteration's w plus the previous duals, so each phase may run its
//! blocks concurrently with results bit-identical to the sequential
//! schedule.

use std::io::{BufRead, Write};

use ndarray::Array1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prox::{
    check_loss, prox_smooth_abs, schedule_at, smooth_abs, PenaltySpec, Schedule, ScheduleValues,
};
use crate::synth::NodeData;
use crate::topology::Graph;

/// Consensus weight: fixed, or derived from the data before the first
/// iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaMode {
    Auto,
    Fixed(f64),
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub penalty: PenaltySpec,
    pub schedule: Schedule,
    pub omega: OmegaMode,
    pub max_iterations: usize,
    pub consensus_tol: f64,
    pub stationarity_tol: f64,
    /// Run the node and edge phases on a thread pool. Results are
    /// bit-identical to the sequential schedule.
    pub parallel: bool,
}

impl SolverConfig {
    /// Returns a copy with `omega` resolved against the data.
    pub fn resolved(&self, data: &[NodeData]) -> Result<SolverConfig> {
        let omega = match self.omega {
            OmegaMode::Fixed(v) => v,
            OmegaMode::Auto => {
                let m = data.iter().map(NodeData::num_samples).max().unwrap_or(0);
                compute_omega(data, self.tau, self.penalty.lambda(), m)?
            }
        };
        let mut cfg = self.clone();
        cfg.omega = OmegaMode::Fixed(omega);
        Ok(cfg)
    }

    fn omega_value(&self) -> Result<f64> {
        match self.omega {
            OmegaMode::Fixed(v) => Ok(v),
            OmegaMode::Auto => Err(Error::Config(
                "omega is unresolved; call SolverConfig::resolved first".into(),
            )),
        }
    }
}

/// Total sample count `n = sum_l M_l`; the weight multiplying the
/// sparsity penalty in each node's objective term.
pub fn total_samples(data: &[NodeData]) -> usize {
    data.iter().map(NodeData::num_samples).sum()
}

/// Consensus weight `omega = max(tau, 1-tau) * max_l ||X_l^T||_inf
/// + M * lambda + 1`, with `||A^T||_inf` the maximum absolute column sum
/// of `A` and `M` the largest per-node sample count.
pub fn compute_omega(data: &[NodeData], tau: f64, lambda: f64, m: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Dimension("compute_omega needs at least one node".into()));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau must lie in (0,1), got {tau}")));
    }
    let mut max_col_sum: f64 = 0.0;
    for node in data {
        for p in 0..node.dim() {
            let s: f64 = node.design().column(p).iter().map(|v| v.abs()).sum();
            max_col_sum = max_col_sum.max(s);
        }
    }
    Ok(tau.max(1.0 - tau) * max_col_sum + m as f64 * lambda + 1.0)
}

/// Outcome of [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub omega: f64,
    pub omega_lower_bound: f64,
    pub beta_c: f64,
    pub beta_c_required: f64,
    pub beta_d: f64,
    pub beta_d_required: f64,
    pub min_col_norm_sq: f64,
    pub max_samples: usize,
    /// Smallest `k` with `d sqrt(k+1) > M rho / min_col_norm_sq`.
    pub warmup_k: usize,
    /// Per-node sample counts differ; validation uses `M = max_l M_l`.
    pub unequal_sizes: bool,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "omega               = {}", self.omega)?;
        writeln!(f, "omega lower bound   = {} (strict)", self.omega_lower_bound)?;
        writeln!(
            f,
            "beta*c              = {} (>= {})",
            self.beta_c, self.beta_c_required
        )?;
        writeln!(
            f,
            "beta*d              = {} (>= {})",
            self.beta_d, self.beta_d_required
        )?;
        writeln!(f, "min column norm^2   = {}", self.min_col_norm_sq)?;
        writeln!(f, "max samples M       = {}", self.max_samples)?;
        writeln!(f, "warm-up iteration K = {}", self.warmup_k)?;
        if self.unequal_sizes {
            writeln!(f, "note: per-node sample counts differ; M = max_l M_l used")?;
        }
        Ok(())
    }
}

fn smallest_k_exceeding(d: f64, threshold: f64) -> usize {
    if d <= 0.0 {
        return usize::MAX;
    }
    let ratio = threshold / d;
    let mut k = if ratio <= 1.0 {
        0usize
    } else {
        (ratio * ratio - 1.0).floor().max(0.0) as usize
    };
    while d * ((k + 1) as f64).sqrt() <= threshold {
        k += 1;
    }
    k
}

/// Checks the schedule inequalities and the strict lower bound on the
/// consensus weight, and reports the warm-up iteration `K`. Rejections
/// name the violated inequality.
pub fn validate_config(
    cfg: &SolverConfig,
    data: &[NodeData],
    graph: &Graph,
) -> Result<ValidationReport> {
    if data.len() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} data nodes but graph has {}",
            data.len(),
            graph.num_nodes()
        )));
    }
    if !(cfg.tau > 0.0 && cfg.tau < 1.0) {
        return Err(Error::Validation(format!(
            "tau must lie in (0,1): got {}",
            cfg.tau
        )));
    }
    if !(cfg.consensus_tol >= 0.0 && cfg.stationarity_tol >= 0.0) {
        return Err(Error::Config("tolerances must be nonnegative".into()));
    }
    let dim = data
        .first()
        .map(NodeData::dim)
        .ok_or_else(|| Error::Dimension("no node data".into()))?;
    if data.iter().any(|d| d.dim() != dim) {
        return Err(Error::Dimension("nodes disagree on the predictor count".into()));
    }

    let m_max = data.iter().map(NodeData::num_samples).max().unwrap_or(0);
    let unequal = data.iter().any(|d| d.num_samples() != m_max);
    let cfg = cfg.resolved(data)?;
    let omega = cfg.omega_value()?;

    let mut min_col_norm_sq = f64::INFINITY;
    for node in data {
        for p in 0..dim {
            let s: f64 = node.design().column(p).iter().map(|v| v * v).sum();
            min_col_norm_sq = min_col_norm_sq.min(s);
        }
    }
    if min_col_norm_sq == 0.0 {
        return Err(Error::DegenerateData(
            "a design column is identically zero".into(),
        ));
    }

    let omega_lb = compute_omega(data, cfg.tau, cfg.penalty.lambda(), m_max)? - 1.0;
    if !(omega > omega_lb) {
        return Err(Error::Validation(format!(
            "omega > max(tau,1-tau)*max_l||X^T||_inf + M*lambda violated: {omega} <= {omega_lb}"
        )));
    }
    let beta_c = cfg.schedule.beta * cfg.schedule.c;
    let beta_c_req = (1.5f64).sqrt();
    if beta_c < beta_c_req {
        return Err(Error::Validation(format!(
            "beta*c >= sqrt(3/2) violated: {beta_c} < {beta_c_req}"
        )));
    }
    let beta_d = cfg.schedule.beta * cfg.schedule.d;
    let beta_d_req = 20f64.sqrt() * omega;
    if beta_d < beta_d_req {
        return Err(Error::Validation(format!(
            "beta*d >= sqrt(20)*omega violated: {beta_d} < {beta_d_req}"
        )));
    }
    let rho = cfg.penalty.weak_convexity_modulus();
    let threshold = m_max as f64 * rho / min_col_norm_sq;
    let warmup_k = smallest_k_exceeding(cfg.schedule.d, threshold);

    Ok(ValidationReport {
        omega,
        omega_lower_bound: omega_lb,
        beta_c,
        beta_c_required: beta_c_req,
        beta_d,
        beta_d_required: beta_d_req,
        min_col_norm_sq,
        max_samples: m_max,
        warmup_k,
        unequal_sizes: unequal,
    })
}

/// The two consensus copies living on one edge `(lo, hi)`: `lo` is the
/// copy constrained to the lower-indexed endpoint's coefficients, `hi`
/// the higher-indexed one.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePair {
    pub lo: Array1<f64>,
    pub hi: Array1<f64>,
}

impl EdgePair {
    fn zeros(dim: usize) -> Self {
        Self {
            lo: Array1::zeros(dim),
            hi: Array1::zeros(dim),
        }
    }

    /// The copy owned by endpoint `l` of edge `(lo, hi)`.
    pub fn own(&self, edge: (usize, usize), l: usize) -> &Array1<f64> {
        if l == edge.0 {
            &self.lo
        } else {
            &self.hi
        }
    }
}

/// All primal and dual variables plus the iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Per-node coefficient vectors, length `P+1`.
    pub w: Vec<Array1<f64>>,
    /// Per-node residual variables, length `M_l`.
    pub z: Vec<Array1<f64>>,
    /// Per-node duals on `z + X w = y`, length `M_l`.
    pub psi: Vec<Array1<f64>>,
    /// Per-edge consensus copies, ordered as `graph.edges()`.
    pub g: Vec<EdgePair>,
    /// Per-edge duals on `w = g`, ordered as `graph.edges()`.
    pub xi: Vec<EdgePair>,
    /// Completed iterations.
    pub k: usize,
}

/// All-zero state with dimensions matching the graph and data.
pub fn init_state(graph: &Graph, data: &[NodeData]) -> Result<SolverState> {
    if data.len() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} data nodes but graph has {}",
            data.len(),
            graph.num_nodes()
        )));
    }
    let dim = data
        .first()
        .map(NodeData::dim)
        .ok_or_else(|| Error::Dimension("no node data".into()))?;
    if data.iter().any(|d| d.dim() != dim) {
        return Err(Error::Dimension("nodes disagree on the predictor count".into()));
    }
    Ok(SolverState {
        w: data.iter().map(|_| Array1::zeros(dim)).collect(),
        z: data.iter().map(|d| Array1::zeros(d.num_samples())).collect(),
        psi: data.iter().map(|d| Array1::zeros(d.num_samples())).collect(),
        g: graph.edges().iter().map(|_| EdgePair::zeros(dim)).collect(),
        xi: graph.edges().iter().map(|_| EdgePair::zeros(dim)).collect(),
        k: 0,
    })
}

/// Schedule values in effect for the state's most recent iteration
/// (for a fresh state, the first iteration's values).
fn current_schedule(k: usize, schedule: &Schedule) -> ScheduleValues {
    schedule_at(k.saturating_sub(1), schedule)
}

fn ensure_finite(values: &Array1<f64>, iteration: usize, context: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            iteration,
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Incident edges per node as `(edge index, is_lower_endpoint)`.
fn incidence(graph: &Graph) -> Vec<Vec<(usize, bool)>> {
    let mut inc = vec![Vec::new(); graph.num_nodes()];
    for (e, &(lo, hi)) in graph.edges().iter().enumerate() {
        inc[lo].push((e, true));
        inc[hi].push((e, false));
    }
    inc
}

fn squared_column_norms(node: &NodeData) -> Array1<f64> {
    let dim = node.dim();
    let mut out = Array1::zeros(dim);
    for p in 0..dim {
        out[p] = node.design().column(p).iter().map(|v| v * v).sum();
    }
    out
}

/// Coordinate-sequential update of node `l`'s coefficients for iteration
/// `state.k + 1`. Each slope coordinate takes one penalty prox step with
/// step `n / Upsilon_p`; the intercept solves its quadratic exactly. Uses
/// the node's own edge copies and duals from the previous iteration.
pub fn update_w_node(
    l: usize,
    state: &SolverState,
    data: &[NodeData],
    graph: &Graph,
    cfg: &SolverConfig,
) -> Result<Array1<f64>> {
    let inc = incidence(graph);
    let col_sq = squared_column_norms(&data[l]);
    let n = total_samples(data);
    w_update_core(l, state, data, &inc[l], cfg, &col_sq, n as f64)
}

fn w_update_core(
    l: usize,
    state: &SolverState,
    data: &[NodeData],
    incident: &[(usize, bool)],
    cfg: &SolverConfig,
    col_sq: &Array1<f64>,
    penalty_weight: f64,
) -> Result<Array1<f64>> {
    let sched = schedule_at(state.k, &cfg.schedule);
    let node = &data[l];
    let x = node.design();
    let y = node.response();
    let dim = node.dim();
    let degree = incident.len() as f64;

    // per-coordinate neighbor aggregate: sum over incident edges of
    // sigma_xi * g_own - xi_own
    let mut neighbor = Array1::<f64>::zeros(dim);
    for &(e, is_lo) in incident {
        let (g, xi) = if is_lo {
            (&state.g[e].lo, &state.xi[e].lo)
        } else {
            (&state.g[e].hi, &state.xi[e].hi)
        };
        for p in 0..dim {
            neighbor[p] += sched.sigma_xi * g[p] - xi[p];
        }
    }

    // v = z + psi/sigma_psi - y stays fixed across the coordinate sweep;
    // u = X w tracks the sweep incrementally.
    let mut v = state.z[l].clone();
    for (i, vi) in v.iter_mut().enumerate() {
        *vi += state.psi[l][i] / sched.sigma_psi - y[i];
    }
    let mut w = state.w[l].clone();
    let mut u = x.dot(&w);

    for p in 0..dim {
        let xp = x.column(p);
        let mut dot = 0.0;
        for (i, xv) in xp.iter().enumerate() {
            dot += xv * (v[i] + u[i]);
        }
        let a = -sched.sigma_psi * (dot - col_sq[p] * w[p]) + neighbor[p];
        let upsilon = sched.sigma_psi * col_sq[p] + sched.sigma_xi * degree;
        let updated = if p < dim - 1 {
            cfg.penalty.prox(a / upsilon, penalty_weight / upsilon)?
        } else {
            a / upsilon
        };
        if !updated.is_finite() {
            return Err(Error::Divergence {
                iteration: state.k + 1,
                context: format!("w update at node {l}, coordinate {p}"),
            });
        }
        let delta = updated - w[p];
        if delta != 0.0 {
            for (i, xv) in xp.iter().enumerate() {
                u[i] += xv * delta;
            }
        }
        w[p] = updated;
    }
    Ok(w)
}

/// Componentwise smoothed-prox update of node `l`'s residual variables.
/// Requires `state.w[l]` to hold this iteration's coefficients already.
pub fn update_z_node(
    l: usize,
    state: &SolverState,
    data: &[NodeData],
    cfg: &SolverConfig,
) -> Result<Array1<f64>> {
    let sched = schedule_at(state.k, &cfg.schedule);
    let node = &data[l];
    let fitted = node.design().dot(&state.w[l]);
    let shrink = 1.0 / (2.0 * sched.sigma_psi);
    let mut z = Array1::zeros(node.num_samples());
    for i in 0..node.num_samples() {
        let alpha = (node.response()[i] - fitted[i])
            - (state.psi[l][i] + (cfg.tau - 0.5)) / sched.sigma_psi;
        z[i] = prox_smooth_abs(alpha, shrink, sched.mu)?;
    }
    ensure_finite(&z, state.k + 1, &format!("z update at node {l}"))?;
    Ok(z)
}

/// Joint update of the two consensus copies on edge `(l, j)`, `l < j`.
/// Requires all `w` to hold this iteration's values; reads the previous
/// duals. Returns `(g_own_l, g_own_j)`.
pub fn update_edge(
    l: usize,
    j: usize,
    state: &SolverState,
    cfg: &SolverConfig,
    graph: &Graph,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if l >= j {
        return Err(Error::Dimension(format!(
            "update_edge expects l < j, got ({l},{j})"
        )));
    }
    let e = graph
        .edges()
        .iter()
        .position(|&edge| edge == (l, j))
        .ok_or_else(|| Error::Dimension(format!("({l},{j}) is not an edge")))?;
    let pair = edge_update_core(e, state, cfg, graph)?;
    Ok((pair.lo, pair.hi))
}

fn edge_update_core(
    e: usize,
    state: &SolverState,
    cfg: &SolverConfig,
    graph: &Graph,
) -> Result<EdgePair> {
    let sched = schedule_at(state.k, &cfg.schedule);
    let omega = cfg.omega_value()?;
    let (lo, hi) = graph.edges()[e];
    let dim = state.w[lo].len();
    let thresh = 2.0 * omega / sched.sigma_xi;
    let mut g_lo = Array1::zeros(dim);
    let mut g_hi = Array1::zeros(dim);
    for p in 0..dim {
        // prox centers carry the scaled duals of each copy
        let r = state.w[lo][p] + state.xi[e].lo[p] / sched.sigma_xi;
        let s = state.w[hi][p] + state.xi[e].hi[p] / sched.sigma_xi;
        let difference = prox_smooth_abs(r - s, thresh, sched.mu)?;
        let midpoint = 0.5 * (r + s);
        g_lo[p] = midpoint + 0.5 * difference;
        g_hi[p] = midpoint - 0.5 * difference;
    }
    ensure_finite(&g_lo, state.k + 1, &format!("g update at edge ({lo},{hi})"))?;
    ensure_finite(&g_hi, state.k + 1, &format!("g update at edge ({lo},{hi})"))?;
    Ok(EdgePair { lo: g_lo, hi: g_hi })
}

/// Dual ascent for all multipliers: `psi += sigma_psi (z + X w - y)` per
/// node and `xi += sigma_xi (w - g)` per edge copy. Requires all primal
/// updates for the iteration to be installed in `state`.
pub fn update_duals(
    state: &mut SolverState,
    data: &[NodeData],
    graph: &Graph,
    cfg: &SolverConfig,
) -> Result<()> {
    let sched = schedule_at(state.k, &cfg.schedule);
    for l in 0..graph.num_nodes() {
        let new_psi = psi_update_core(l, state, data, sched.sigma_psi)?;
        state.psi[l] = new_psi;
    }
    for (e, &(lo, hi)) in graph.edges().iter().enumerate() {
        let pair = xi_update_core(e, lo, hi, state, sched.sigma_xi)?;
        state.xi[e] = pair;
    }
    Ok(())
}

fn psi_update_core(
    l: usize,
    state: &SolverState,
    data: &[NodeData],
    sigma_psi: f64,
) -> Result<Array1<f64>> {
    let node = &data[l];
    let fitted = node.design().dot(&state.w[l]);
    let mut psi = state.psi[l].clone();
    for i in 0..node.num_samples() {
        psi[i] += sigma_psi * (state.z[l][i] + fitted[i] - node.response()[i]);
    }
    ensure_finite(&psi, state.k + 1, &format!("psi update at node {l}"))?;
    Ok(psi)
}

fn xi_update_core(
    e: usize,
    lo: usize,
    hi: usize,
    state: &SolverState,
    sigma_xi: f64,
) -> Result<EdgePair> {
    let mut xi_lo = state.xi[e].lo.clone();
    let mut xi_hi = state.xi[e].hi.clone();
    for p in 0..xi_lo.len() {
        xi_lo[p] += sigma_xi * (state.w[lo][p] - state.g[e].lo[p]);
        xi_hi[p] += sigma_xi * (state.w[hi][p] - state.g[e].hi[p]);
    }
    ensure_finite(&xi_lo, state.k + 1, &format!("xi update at edge ({lo},{hi})"))?;
    ensure_finite(&xi_hi, state.k + 1, &format!("xi update at edge ({lo},{hi})"))?;
    Ok(EdgePair { lo: xi_lo, hi: xi_hi })
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Completed iterations after this one.
    pub k: usize,
    /// Objective with exact l1 terms at the current `W`, `Z`
    /// (smoothing excluded; consensus term evaluated on `W`).
    pub objective: f64,
    /// Augmented Lagrangian at the current state and schedule values.
    pub aug_lagrangian: f64,
    /// `max_l ||z_l + X w_l - y_l||_2`.
    pub primal_residual: f64,
    /// Max over edges of `||w_l - w_j||_inf`.
    pub consensus_residual: f64,
    /// KKT stationarity residual on the per-sample scale; `None` for
    /// algorithms without dual variables (the subgradient baseline).
    pub stationarity_residual: Option<f64>,
    /// `max_l ||w_l^{(k+1)} - w_l^{(k)}||_2`.
    pub w_step: f64,
}

fn map_indexed<T: Send>(
    parallel: bool,
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if parallel {
        (0..count).into_par_iter().map(f).collect()
    } else {
        (0..count).map(f).collect()
    }
}

/// One full bulk-synchronous sweep: schedules, node blocks (w coordinates
/// sequentially, then z, then psi), edge blocks (g, then xi), counter,
/// diagnostics.
pub fn iterate(
    state: &mut SolverState,
    data: &[NodeData],
    graph: &Graph,
    cfg: &SolverConfig,
) -> Result<IterationRecord> {
    let inc = incidence(graph);
    let col_sq: Vec<Array1<f64>> = data.iter().map(squared_column_norms).collect();
    iterate_prepared(state, data, graph, cfg, &inc, &col_sq)
}

fn iterate_prepared(
    state: &mut SolverState,
    data: &[NodeData],
    graph: &Graph,
    cfg: &SolverConfig,
    inc: &[Vec<(usize, bool)>],
    col_sq: &[Array1<f64>],
) -> Result<IterationRecord> {
    let nodes = graph.num_nodes();
    let n_total = total_samples(data) as f64;
    let sched = schedule_at(state.k, &cfg.schedule);
    let prev_w = state.w.clone();

    let new_w = map_indexed(cfg.parallel, nodes, |l| {
        w_update_core(l, state, data, &inc[l], cfg, &col_sq[l], n_total)
    })?;
    state.w = new_w;

    let new_z = map_indexed(cfg.parallel, nodes, |l| update_z_node(l, state, data, cfg))?;
    state.z = new_z;

    let new_psi = map_indexed(cfg.parallel, nodes, |l| {
        psi_update_core(l, state, data, sched.sigma_psi)
    })?;
    state.psi = new_psi;

    let new_g = map_indexed(cfg.parallel, graph.num_edges(), |e| {
        edge_update_core(e, state, cfg, graph)
    })?;
    state.g = new_g;

    let new_xi = map_indexed(cfg.parallel, graph.num_edges(), |e| {
        let (lo, hi) = graph.edges()[e];
        xi_update_core(e, lo, hi, state, sched.sigma_xi)
    })?;
    state.xi = new_xi;

    state.k += 1;

    let residuals = kkt_residuals(state, data, graph, cfg)?;
    let w_step = state
        .w
        .iter()
        .zip(prev_w.iter())
        .map(|(a, b)| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    Ok(IterationRecord {
        k: state.k,
        objective: objective_value(&state.w, &state.z, data, graph, cfg)?,
        aug_lagrangian: augmented_lagrangian(state, data, graph, cfg)?,
        primal_residual: residuals.primal,
        consensus_residual: residuals.consensus,
        stationarity_residual: Some(residuals.stationarity),
        w_step,
    })
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Hit `max_iterations`.
    Budget,
    /// Consensus, stationarity and primal residuals all reached their
    /// tolerances.
    Tolerance,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Budget => write!(f, "budget"),
            Termination::Tolerance => write!(f, "tolerance"),
        }
    }
}

/// Final state plus the per-iteration records and the stop reason.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

/// Validates, then iterates until the budget or all tolerances are met.
pub fn run(cfg: &SolverConfig, data: &[NodeData], graph: &Graph) -> Result<RunOutcome> {
    run_with(cfg, data, graph, |_, _| {})
}

/// [`run`] with an observer called after every iteration.
pub fn run_with(
    cfg: &SolverConfig,
    data: &[NodeData],
    graph: &Graph,
    mut observer: impl FnMut(&SolverState, &IterationRecord),
) -> Result<RunOutcome> {
    let cfg = cfg.resolved(data)?;
    validate_config(&cfg, data, graph)?;
    let mut state = init_state(graph, data)?;
    let inc = incidence(graph);
    let col_sq: Vec<Array1<f64>> = data.iter().map(squared_column_norms).collect();
    let mut records = Vec::with_capacity(cfg.max_iterations.min(1 << 20));
    let mut termination = Termination::Budget;
    for _ in 0..cfg.max_iterations {
        let record = iterate_prepared(&mut state, data, graph, &cfg, &inc, &col_sq)?;
        observer(&state, &record);
        let stationarity = record.stationarity_residual.unwrap_or(f64::INFINITY);
        let done = record.consensus_residual <= cfg.consensus_tol
            && stationarity <= cfg.stationarity_tol
            && record.primal_residual <= cfg.stationarity_tol;
        records.push(record);
        if done {
            termination = Termination::Tolerance;
            break;
        }
    }
    Ok(RunOutcome {
        state,
        records,
        termination,
    })
}

/// The reformulated objective with exact l1 terms, evaluated at the given
/// primal variables: per node the check loss of `z_l` plus `n` times the
/// penalty on the slope coefficients, plus the weighted total-variation
/// term over edges of `W`.
pub fn objective_value(
    w: &[Array1<f64>],
    z: &[Array1<f64>],
    data: &[NodeData],
    graph: &Graph,
    cfg: &SolverConfig,
) -> Result<f64> {
    let omega = cfg.omega_value()?;
    let n = total_samples(data) as f64;
    let mut total = 0.0;
    for l in 0..data.len() {
        for &zi in z[l].iter() {
            total += check_loss(zi, cfg.tau)?;
        }
        let dim = w[l].len();
        for p in 0..dim - 1 {
            total += n * cfg.penalty.value(w[l][p]);
        }
    }
    for &(lo, hi) in graph.edges() {
        total += omega
            * w[lo]
                .iter()
                .zip(w[hi].iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
    }
    Ok(total)
}

/// The smoothed augmented Lagrangian at the current state, with dual
/// terms in linear (uncompleted-square) form, evaluated at the schedule
/// values of the state's most recent iteration.
pub fn augmented_lagrangian(
    state: &SolverState,
    data: &[NodeData],
    graph: &Graph,
    cfg: &SolverConfig,
) -> Result<f64> {
    let sched = current_schedule(state.k, &cfg.schedule);
    let omega = cfg.omega_value()?;
    let n = total_samples(data) as f64;
    let mut total = 0.0;
    for (l, node) in data.iter().enumerate() {
        let fitted = node.design().dot(&state.w[l]);
        for i in 0..node.num_samples() {
            let zi = state.z[l][i];
            total += 0.5 * smooth_abs(zi, sched.mu)? + (cfg.tau - 0.5) * zi;
            let residual = zi + fitted[i] - node.response()[i];
            total += state.psi[l][i] * residual + 0.5 * sched.sigma_psi * residual * residual;
        }
        let dim = state.w[l].len();
        for p in 0..dim - 1 {
            total += n * cfg.penalty.value(state.w[l][p]);
        }
    }
    for (e, &(lo, hi)) in graph.edges().iter().enumerate() {
        let dim = state.w[lo].len();
        for p in 0..dim {
            let diff = state.g[e].lo[p] - state.g[e].hi[p];
            total += omega * smooth_abs(diff, sched.mu)?;
            let rl = state.w[lo][p] - state.g[e].lo[p];
            let rh = state.w[hi][p] - state.g[e].hi[p];
            total += 0.5 * sched.sigma_xi * (rl * rl + rh * rh);
            total += state.xi[e].lo[p] * rl + state.xi[e].hi[p] * rh;
        }
    }
    Ok(total)
}

/// KKT residual triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub consensus: f64,
    pub stationarity: f64,
}

/// Evaluates the three KKT residuals at the current state.
///
/// Stationarity is measured on the per-sample scale: for each node the
/// vector `-(X^T psi + sum of own edge duals) / n` must lie in the
/// penalty's subdifferential at `w` (slope coordinates; exactly zero for
/// the intercept), and `-psi_i` must lie in the check-loss
/// subdifferential at `z_i`, where residuals within the current smoothing
/// width `mu` of zero are treated as sitting at the kink.
pub fn kkt_residuals(
    state: &SolverState,
    data: &[NodeData],
    graph: &Graph,
    cfg: &SolverConfig,
) -> Result<KktResiduals> {
    let sched = current_schedule(state.k, &cfg.schedule);
    let n = total_samples(data) as f64;
    let inc = incidence(graph);

    let mut primal: f64 = 0.0;
    let mut consensus: f64 = 0.0;
    let mut stationarity: f64 = 0.0;

    for (l, node) in data.iter().enumerate() {
        let fitted = node.design().dot(&state.w[l]);
        let mut norm2 = 0.0;
        for i in 0..node.num_samples() {
            let r = state.z[l][i] + fitted[i] - node.response()[i];
            norm2 += r * r;
        }
        primal = primal.max(norm2.sqrt());

        // w-stationarity: -(X^T psi + sum_e xi_own) in n * subgradient(P)
        let mut force = node.design().t().dot(&state.psi[l]);
        for &(e, is_lo) in &inc[l] {
            let xi = if is_lo { &state.xi[e].lo } else { &state.xi[e].hi };
            force += xi;
        }
        let dim = node.dim();
        for p in 0..dim {
            let v = -force[p] / n;
            let r = if p < dim - 1 {
                let (lo, hi) = cfg.penalty.subgradient_interval(state.w[l][p]);
                (lo - v).max(v - hi).max(0.0)
            } else {
                v.abs()
            };
            stationarity = stationarity.max(r);
        }

        // z-stationarity: -psi_i in the check-loss subdifferential,
        // blurring the kink to |z| <= mu
        for i in 0..node.num_samples() {
            let zi = state.z[l][i];
            let v = -state.psi[l][i];
            let r = if zi.abs() <= sched.mu {
                (cfg.tau - 1.0 - v).max(v - cfg.tau).max(0.0)
            } else if zi > 0.0 {
                (v - cfg.tau).abs()
            } else {
                (v - (cfg.tau - 1.0)).abs()
            };
            stationarity = stationarity.max(r);
        }
    }

    for &(lo, hi) in graph.edges() {
        let gap = state.w[lo]
            .iter()
            .zip(state.w[hi].iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        consensus = consensus.max(gap);
    }

    Ok(KktResiduals {
        primal,
        consensus,
        stationarity,
    })
}

fn fmt_exact(v: f64) -> String {
    format!("{v:e}")
}

/// Writes the per-iteration log: comma-separated with a header row, one
/// row per record. The stationarity column is empty when not applicable.
pub fn write_iteration_log(records: &[IterationRecord], mut w: impl Write) -> Result<()> {
    writeln!(
        w,
        "k,objective,aug_lagrangian,primal_residual,consensus_residual,stationarity_residual,w_step"
    )?;
    for r in records {
        let st = r
            .stationarity_residual
            .map(fmt_exact)
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_exact(r.objective),
            fmt_exact(r.aug_lagrangian),
            fmt_exact(r.primal_residual),
            fmt_exact(r.consensus_residual),
            st,
            fmt_exact(r.w_step)
        )?;
    }
    Ok(())
}

/// Writes the full state in an exact text format (floats round-trip
/// bit-for-bit).
pub fn write_checkpoint(state: &SolverState, mut w: impl Write) -> Result<()> {
    writeln!(w, "dsad-checkpoint v1")?;
    writeln!(w, "k {}", state.k)?;
    writeln!(w, "nodes {}", state.w.len())?;
    writeln!(w, "edges {}", state.g.len())?;
    let write_vec = |w: &mut dyn Write, tag: &str, idx: usize, v: &Array1<f64>| -> Result<()> {
        let vals: Vec<String> = v.iter().map(|&x| fmt_exact(x)).collect();
        writeln!(w, "{tag} {idx} {}", vals.join(" "))?;
        Ok(())
    };
    for (l, v) in state.w.iter().enumerate() {
        write_vec(&mut w, "w", l, v)?;
    }
    for (l, v) in state.z.iter().enumerate() {
        write_vec(&mut w, "z", l, v)?;
    }
    for (l, v) in state.psi.iter().enumerate() {
        write_vec(&mut w, "psi", l, v)?;
    }
    for (e, pair) in state.g.iter().enumerate() {
        write_vec(&mut w, "g_lo", e, &pair.lo)?;
        write_vec(&mut w, "g_hi", e, &pair.hi)?;
    }
    for (e, pair) in state.xi.iter().enumerate() {
        write_vec(&mut w, "xi_lo", e, &pair.lo)?;
        write_vec(&mut w, "xi_hi", e, &pair.hi)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_checkpoint`].
pub fn read_checkpoint(r: impl BufRead) -> Result<SolverState> {
    let mut lines = r.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::Parse("empty checkpoint".into()))??;
    if magic.trim() != "dsad-checkpoint v1" {
        return Err(Error::Parse(format!("bad checkpoint header: {magic:?}")));
    }
    let mut header = |name: &str| -> Result<usize> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {name} line")))??;
        let mut it = line.split_whitespace();
        if it.next() != Some(name) {
            return Err(Error::Parse(format!("expected {name} line, got {line:?}")));
        }
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad {name} line: {line:?}")))
    };
    let k = header("k")?;
    let nodes = header("nodes")?;
    let edges = header("edges")?;

    let mut w = vec![Array1::zeros(0); nodes];
    let mut z = vec![Array1::zeros(0); nodes];
    let mut psi = vec![Array1::zeros(0); nodes];
    let mut g = vec![EdgePair::zeros(0); edges];
    let mut xi = vec![EdgePair::zeros(0); edges];

    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let tag = it.next().unwrap();
        let idx: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad index in line: {line:?}")))?;
        let vals: std::result::Result<Vec<f64>, _> = it.map(|t| t.parse::<f64>()).collect();
        let vals =
            Array1::from_vec(vals.map_err(|_| Error::Parse(format!("bad floats: {line:?}")))?);
        let slot = match tag {
            "w" => w.get_mut(idx),
            "z" => z.get_mut(idx),
            "psi" => psi.get_mut(idx),
            "g_lo" => g.get_mut(idx).map(|p| &mut p.lo),
            "g_hi" => g.get_mut(idx).map(|p| &mut p.hi),
            "xi_lo" => xi.get_mut(idx).map(|p| &mut p.lo),
            "xi_hi" => xi.get_mut(idx).map(|p| &mut p.hi),
            other => return Err(Error::Parse(format!("unknown checkpoint tag {other:?}"))),
        };
        match slot {
            Some(dst) => *dst = vals,
            None => return Err(Error::Parse(format!("index {idx} out of range: {line:?}"))),
        }
    }
    Ok(SolverState { w, z, psi, g, xi, k })
}
