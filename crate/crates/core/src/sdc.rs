//! Multi-implicit spectral deferred correction sweeps.
//!
//! The right-hand side is split as `F = F_A + F_D + F_R`. Advection is
//! corrected explicitly, diffusion and reaction each with their own implicit
//! solve. Per substep `m -> m+1` a sweep performs
//!
//! ```text
//! base   = phi[m][k+1] + h (F_A(phi[m][k+1]) - F_A(phi[m][k])) + I_m^{m+1}[F(phi[k])]
//! phi_AD - h F_D(phi_AD) = base - h F_D(phi[m+1][k])
//! phi    - h F_R(phi)    = base + h (F_D(phi_AD) - F_D(phi[m+1][k]) - F_R(phi[m+1][k]))
//! ```
//!
//! with `h = dt^m`. Tendencies at iterate `k` are cached on the lattice and
//! reused by sweep `k + 1`.

use crate::error::{Error, Result};
use crate::quadrature::NodeSet;

/// Three-way split right-hand side with its implicit solves.
///
/// `node` is the temporal node index the state belongs to, so operators with
/// time-dependent data can look up `t^{n,node}`.
pub trait SplitOperator {
    fn advection(&self, state: &[f64], node: usize) -> Vec<f64>;

    fn diffusion(&self, state: &[f64], node: usize) -> Vec<f64>;

    fn reaction(&self, state: &[f64]) -> Vec<f64>;

    /// Solve `x - dt_coeff * F_D(x) = rhs`.
    fn solve_diffusion(&mut self, rhs: &[f64], dt_coeff: f64, node: usize) -> Result<Vec<f64>>;

    /// Solve `x - dt_coeff * F_R(x) = rhs`, starting from `guess`.
    fn solve_reaction(&mut self, rhs: &[f64], dt_coeff: f64, guess: &[f64]) -> Result<Vec<f64>>;
}

/// Solution value at one temporal node and iterate, with its tendencies.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValue {
    pub phi: Vec<f64>,
    pub advection: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub reaction: Vec<f64>,
}

impl NodeValue {
    fn evaluate<O: SplitOperator + ?Sized>(ops: &O, phi: Vec<f64>, node: usize) -> Self {
        Self {
            advection: ops.advection(&phi, node),
            diffusion: ops.diffusion(&phi, node),
            reaction: ops.reaction(&phi),
            phi,
        }
    }

    fn total(&self) -> Vec<f64> {
        self.advection
            .iter()
            .zip(&self.diffusion)
            .zip(&self.reaction)
            .map(|((a, d), r)| a + d + r)
            .collect()
    }
}

/// The lattice `phi[m][k]` over temporal nodes and iterates for one timestep.
#[derive(Debug, Clone)]
pub struct SdcState {
    dt: f64,
    /// Indexed `[k][m]`.
    iterates: Vec<Vec<NodeValue>>,
}

impl SdcState {
    /// Iterate 0: every node holds `phi_n`.
    pub fn initial<O: SplitOperator + ?Sized>(phi_n: &[f64], dt: f64, ops: &O, nodes: &NodeSet) -> Self {
        let first = (0..nodes.node_count())
            .map(|m| NodeValue::evaluate(ops, phi_n.to_vec(), m))
            .collect();
        Self {
            dt,
            iterates: vec![first],
        }
    }

    /// Build iterate 0 from arbitrary node values; `values[0]` is `phi_n`.
    pub fn from_iterate<O: SplitOperator + ?Sized>(values: &[Vec<f64>], dt: f64, ops: &O) -> Self {
        let first = values
            .iter()
            .enumerate()
            .map(|(m, v)| NodeValue::evaluate(ops, v.clone(), m))
            .collect();
        Self {
            dt,
            iterates: vec![first],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of completed sweeps.
    pub fn sweeps(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn node(&self, m: usize, k: usize) -> &NodeValue {
        &self.iterates[k][m]
    }

    pub fn phi(&self, m: usize, k: usize) -> &[f64] {
        &self.iterates[k][m].phi
    }

    /// All node values of iterate `k`.
    pub fn iterate(&self, k: usize) -> Vec<Vec<f64>> {
        self.iterates[k].iter().map(|v| v.phi.clone()).collect()
    }

    /// `phi[M][K]`, the solution at the end of the step.
    pub fn final_state(&self) -> &[f64] {
        &self
            .iterates
            .last()
            .and_then(|it| it.last())
            .expect("lattice is never empty")
            .phi
    }

    /// Run one correction sweep, appending iterate `k + 1`.
    pub fn sweep<O: SplitOperator + ?Sized>(&mut self, ops: &mut O, nodes: &NodeSet) -> Result<()> {
        let k = self.sweeps();
        let prev = &self.iterates[k];
        let totals: Vec<Vec<f64>> = prev.iter().map(NodeValue::total).collect();
        let mut next = Vec::with_capacity(prev.len());
        next.push(prev[0].clone());

        for m in 0..nodes.substeps() {
            let h = self.dt * nodes.substep_width(m);
            let wrap = |e: Error| Error::Sweep {
                sweep: k + 1,
                substep: m,
                source: Box::new(e),
            };

            let mut base = next[m].phi.clone();
            for (i, b) in base.iter_mut().enumerate() {
                let quad: f64 = nodes.weights()[m].iter().zip(&totals).map(|(w, f)| w * f[i]).sum();
                *b += h * (next[m].advection[i] - prev[m].advection[i]) + self.dt * quad;
            }

            let lagged = &prev[m + 1];
            let rhs_ad: Vec<f64> = base.iter().zip(&lagged.diffusion).map(|(b, fd)| b - h * fd).collect();
            let phi_ad = ops.solve_diffusion(&rhs_ad, h, m + 1).map_err(wrap)?;
            let fd_ad = ops.diffusion(&phi_ad, m + 1);

            let rhs_r: Vec<f64> = base
                .iter()
                .enumerate()
                .map(|(i, b)| b + h * (fd_ad[i] - lagged.diffusion[i] - lagged.reaction[i]))
                .collect();
            let phi = ops.solve_reaction(&rhs_r, h, &lagged.phi).map_err(wrap)?;
            next.push(NodeValue::evaluate(ops, phi, m + 1));
        }

        self.iterates.push(next);
        Ok(())
    }
}

/// Advance `phi_n` by one step of size `dt` with `sweeps` MISDC iterations.
pub fn misdc_step<O: SplitOperator + ?Sized>(
    phi_n: &[f64],
    dt: f64,
    ops: &mut O,
    nodes: &NodeSet,
    sweeps: usize,
) -> Result<Vec<f64>> {
    let state = misdc_step_observed(phi_n, dt, ops, nodes, sweeps, |_, _| {})?;
    Ok(state.final_state().to_vec())
}

/// Like [`misdc_step`], returning the full lattice and calling `after_sweep`
/// with the state and sweep number once each sweep completes.
pub fn misdc_step_observed<O, C>(
    phi_n: &[f64],
    dt: f64,
    ops: &mut O,
    nodes: &NodeSet,
    sweeps: usize,
    mut after_sweep: C,
) -> Result<SdcState>
where
    O: SplitOperator + ?Sized,
    C: FnMut(&SdcState, usize),
{
    if sweeps == 0 {
        return Err(Error::InvalidArgument("at least one sweep is required".into()));
    }
    let mut state = SdcState::initial(phi_n, dt, ops, nodes);
    for k in 1..=sweeps {
        state.sweep(ops, nodes)?;
        after_sweep(&state, k);
    }
    Ok(state)
}

/// One sweep applied to an arbitrary iterate; `iterate[0]` is `phi_n`.
pub fn misdc_sweep<O: SplitOperator + ?Sized>(
    iterate: &[Vec<f64>],
    dt: f64,
    ops: &mut O,
    nodes: &NodeSet,
) -> Result<Vec<Vec<f64>>> {
    if iterate.len() != nodes.node_count() {
        return Err(Error::InvalidArgument(format!(
            "iterate has {} nodes, node set has {}",
            iterate.len(),
            nodes.node_count()
        )));
    }
    let mut state = SdcState::from_iterate(iterate, dt, ops);
    state.sweep(ops, nodes)?;
    Ok(state.iterate(1))
}

/// Largest node-wise max-norm change between iterates `k - 1` and `k`.
pub fn iterate_residual(state: &SdcState, k: usize) -> Result<f64> {
    if k == 0 || k > state.sweeps() {
        return Err(Error::InvalidArgument(format!(
            "residual needs 1 <= k <= {}, got {k}",
            state.sweeps()
        )));
    }
    let residual = state.iterates[k]
        .iter()
        .zip(&state.iterates[k - 1])
        .flat_map(|(new, old)| new.phi.iter().zip(&old.phi).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    Ok(residual)
}

/// Explicit SDC step for an advection-only equation.
pub fn sdc_advect_step<F>(phi_n: &[f64], dt: f64, advection: F, nodes: &NodeSet, sweeps: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64], usize) -> Vec<f64>,
{
    if sweeps == 0 {
        return Err(Error::InvalidArgument("at least one sweep is required".into()));
    }
    let mut iterate = vec![phi_n.to_vec(); nodes.node_count()];
    for _ in 0..sweeps {
        iterate = advect_sweep(&iterate, dt, &advection, nodes);
    }
    Ok(iterate.pop().expect("node set has at least two nodes"))
}

/// One explicit correction sweep for an advection-only equation.
pub fn advect_sweep<F>(iterate: &[Vec<f64>], dt: f64, advection: F, nodes: &NodeSet) -> Vec<Vec<f64>>
where
    F: Fn(&[f64], usize) -> Vec<f64>,
{
    let lagged: Vec<Vec<f64>> = iterate.iter().enumerate().map(|(m, v)| advection(v, m)).collect();
    let mut next = vec![iterate[0].clone()];
    let mut current_tendency = lagged[0].clone();
    for m in 0..nodes.substeps() {
        let h = dt * nodes.substep_width(m);
        let phi: Vec<f64> = next[m]
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let quad: f64 = nodes.weights()[m].iter().zip(&lagged).map(|(w, f)| w * f[i]).sum();
                p + h * (current_tendency[i] - lagged[m][i]) + dt * quad
            })
            .collect();
        current_tendency = advection(&phi, m + 1);
        next.push(phi);
    }
    next
}

/// Elementwise linear split `F_A = a, F_D = d, F_R = r` applied to each
/// component. This is the model problem of the iteration-map analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSplit {
    pub a: f64,
    pub d: f64,
    pub r: f64,
}

impl LinearSplit {
    pub fn new(a: f64, d: f64, r: f64) -> Self {
        Self { a, d, r }
    }
}

fn scale(state: &[f64], c: f64) -> Vec<f64> {
    state.iter().map(|x| c * x).collect()
}

impl SplitOperator for LinearSplit {
    fn advection(&self, state: &[f64], _node: usize) -> Vec<f64> {
        scale(state, self.a)
    }

    fn diffusion(&self, state: &[f64], _node: usize) -> Vec<f64> {
        scale(state, self.d)
    }

    fn reaction(&self, state: &[f64]) -> Vec<f64> {
        scale(state, self.r)
    }

    fn solve_diffusion(&mut self, rhs: &[f64], dt_coeff: f64, _node: usize) -> Result<Vec<f64>> {
        linear_solve(rhs, 1.0 - dt_coeff * self.d)
    }

    fn solve_reaction(&mut self, rhs: &[f64], dt_coeff: f64, _guess: &[f64]) -> Result<Vec<f64>> {
        linear_solve(rhs, 1.0 - dt_coeff * self.r)
    }
}

fn linear_solve(rhs: &[f64], diag: f64) -> Result<Vec<f64>> {
    if diag == 0.0 {
        return Err(Error::SingularMatrix {
            pivot: 0,
            magnitude: 0.0,
        });
    }
    Ok(scale(rhs, 1.0 / diag))
}
