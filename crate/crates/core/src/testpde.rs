//! Method-of-lines MISDC solution of the advection-diffusion-reaction
//! benchmark
//!
//! ```text
//! phi_t = a phi_x + d phi_xx + r phi (phi - 1)(phi - 1/2)   on [0, 20]
//! phi(0, t) = 1,  phi(20, t) = 0,  phi(x, 0) = (tanh(10 - 2x) + 1) / 2
//! ```
//!
//! The mesh has `n` intervals and points `x_i = i dx`, `i = 0..=n`; the two
//! end points carry the Dirichlet data and the `n - 1` interior values are
//! the unknowns. Halving `dx` keeps every coarse point on the fine mesh.
//! Both spatial operators use centred fourth-order stencils; the one
//! exterior point they need at each end is extrapolated from the boundary
//! value and four interior values.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, BandedMatrix};
use crate::quadrature::NodeSet;
use crate::sdc::{self, SplitOperator};

/// Newton stops once the max-norm residual is at or below this.
pub const NEWTON_TOLERANCE: f64 = 1e-14;
pub const MAX_NEWTON_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestPdeConfig {
    /// Advection speed.
    pub a: f64,
    /// Diffusivity.
    pub d: f64,
    /// Reaction rate.
    pub r: f64,
    /// Number of mesh intervals.
    pub n: usize,
    /// Timestep over mesh spacing.
    pub cfl: f64,
    pub final_time: f64,
    /// MISDC sweeps per step.
    pub sweeps: usize,
    pub node_count: usize,
}

impl Default for TestPdeConfig {
    fn default() -> Self {
        Self {
            a: -0.1,
            d: 1.0,
            r: -10.0,
            n: 200,
            cfl: 0.5,
            final_time: 1.0,
            sweeps: 4,
            node_count: 3,
        }
    }
}

impl TestPdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidArgument(format!("need n >= 8, got {}", self.n)));
        }
        if !self.final_time.is_finite() || self.final_time < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "final time must be finite and non-negative, got {}",
                self.final_time
            )));
        }
        if self.cfl.is_nan() || self.cfl <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cfl must be positive, got {}",
                self.cfl
            )));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidArgument("need at least one sweep".into()));
        }
        if self.node_count < 2 {
            return Err(Error::InvalidArgument("need at least two temporal nodes".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> PointGrid {
        PointGrid::benchmark(self.n)
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.grid().dx()
    }
}

/// Uniform point mesh with Dirichlet values at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGrid {
    n: usize,
    x_lo: f64,
    x_hi: f64,
    left: f64,
    right: f64,
}

impl PointGrid {
    pub fn new(n: usize, x_lo: f64, x_hi: f64, left: f64, right: f64) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidArgument(format!("need n >= 5 intervals, got {n}")));
        }
        Ok(Self {
            n,
            x_lo,
            x_hi,
            left,
            right,
        })
    }

    /// `[0, 20]` with `phi = 1` on the left and `phi = 0` on the right.
    pub fn benchmark(n: usize) -> Self {
        Self {
            n,
            x_lo: 0.0,
            x_hi: 20.0,
            left: 1.0,
            right: 0.0,
        }
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Number of unknowns, `n - 1`.
    pub fn interior(&self) -> usize {
        self.n - 1
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx()
    }

    pub fn boundary_values(&self) -> (f64, f64) {
        (self.left, self.right)
    }

    /// Interior unknowns with the boundary values attached, `n + 1` entries.
    pub fn full_field(&self, interior: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n + 1);
        out.push(self.left);
        out.extend_from_slice(interior);
        out.push(self.right);
        out
    }

    /// Point values indexed `-1..=n+1`, extrapolating the two exterior ones.
    fn padded(&self, interior: &[f64]) -> Vec<f64> {
        assert_eq!(interior.len(), self.interior(), "state length does not match mesh");
        let u = interior;
        let m = u.len();
        let ghost = |b: f64, u1: f64, u2: f64, u3: f64, u4: f64| 5.0 * b - 10.0 * u1 + 10.0 * u2 - 5.0 * u3 + u4;
        let mut out = Vec::with_capacity(self.n + 3);
        out.push(ghost(self.left, u[0], u[1], u[2], u[3]));
        out.push(self.left);
        out.extend_from_slice(u);
        out.push(self.right);
        out.push(ghost(self.right, u[m - 1], u[m - 2], u[m - 3], u[m - 4]));
        out
    }

    fn with_boundaries(self, left: f64, right: f64) -> Self {
        Self { left, right, ..self }
    }
}

/// `(tanh(10 - 2x) + 1) / 2`
pub fn initial_profile(x: f64) -> f64 {
    0.5 * ((10.0 - 2.0 * x).tanh() + 1.0)
}

/// Initial data at the interior points.
pub fn initial_condition(grid: &PointGrid) -> Vec<f64> {
    (1..grid.intervals()).map(|i| initial_profile(grid.x(i))).collect()
}

/// Fourth-order centred `a phi_x` at the interior points.
pub fn advection_operator(state: &[f64], grid: &PointGrid, a: f64) -> Vec<f64> {
    let p = grid.padded(state);
    let scale = a / (12.0 * grid.dx());
    // Interior point i sits at p[i + 1].
    (1..grid.intervals())
        .map(|i| scale * (p[i - 1] - 8.0 * p[i] + 8.0 * p[i + 2] - p[i + 3]))
        .collect()
}

/// Fourth-order centred `d phi_xx` at the interior points.
pub fn diffusion_operator(state: &[f64], grid: &PointGrid, d: f64) -> Vec<f64> {
    let p = grid.padded(state);
    let scale = d / (12.0 * grid.dx() * grid.dx());
    (1..grid.intervals())
        .map(|i| scale * (-p[i - 1] + 16.0 * p[i] - 30.0 * p[i + 1] + 16.0 * p[i + 2] - p[i + 3]))
        .collect()
}

/// `r phi (phi - 1)(phi - 1/2)`
pub fn reaction_rate(phi: f64, r: f64) -> f64 {
    r * phi * (phi - 1.0) * (phi - 0.5)
}

/// `d/dphi` of [`reaction_rate`], `r (3 phi^2 - 3 phi + 1/2)`.
pub fn reaction_jacobian(phi: f64, r: f64) -> f64 {
    r * (3.0 * phi * phi - 3.0 * phi + 0.5)
}

/// Solve `(I - dt_coeff D) phi = rhs` for the interior values.
pub fn implicit_diffusion_solve(rhs: &[f64], dt_coeff: f64, grid: &PointGrid, d: f64) -> Result<Vec<f64>> {
    let lu = diffusion_factor(grid, d, dt_coeff)?;
    solve_with_factor(&lu, rhs, dt_coeff, grid, d)
}

fn diffusion_factor(grid: &PointGrid, d: f64, dt_coeff: f64) -> Result<BandedLu> {
    let homogeneous = grid.with_boundaries(0.0, 0.0);
    let matrix = BandedMatrix::from_operator(grid.interior(), |x| {
        let dx = diffusion_operator(x, &homogeneous, d);
        x.iter().zip(dx).map(|(u, f)| u - dt_coeff * f).collect()
    })?;
    BandedLu::factor(&matrix)
}

fn solve_with_factor(lu: &BandedLu, rhs: &[f64], dt_coeff: f64, grid: &PointGrid, d: f64) -> Result<Vec<f64>> {
    // D(u) = K u + g with g the boundary contribution.
    let g = diffusion_operator(&vec![0.0; grid.interior()], grid, d);
    let b: Vec<f64> = rhs.iter().zip(&g).map(|(r, g)| r + dt_coeff * g).collect();
    lu.solve(&b)
}

/// Result of the pointwise Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSolve {
    pub state: Vec<f64>,
    /// Largest iteration count over all points.
    pub iterations: usize,
    /// Largest final residual over all points.
    pub residual: f64,
}

/// Solve `phi - dt_coeff R(phi) = rhs` point by point with Newton's method.
pub fn implicit_reaction_solve(rhs: &[f64], dt_coeff: f64, guess: &[f64], r: f64) -> Result<ReactionSolve> {
    if rhs.len() != guess.len() {
        return Err(Error::InvalidArgument(format!(
            "rhs has {} values, guess has {}",
            rhs.len(),
            guess.len()
        )));
    }
    let mut state = Vec::with_capacity(rhs.len());
    let mut worst_iterations = 0;
    let mut worst_residual: f64 = 0.0;
    for (cell, (&b, &x0)) in rhs.iter().zip(guess).enumerate() {
        let mut x = x0;
        let mut iterations = 0;
        loop {
            let residual = x - dt_coeff * reaction_rate(x, r) - b;
            if residual.abs() <= NEWTON_TOLERANCE {
                worst_residual = worst_residual.max(residual.abs());
                break;
            }
            if iterations == MAX_NEWTON_ITERATIONS {
                return Err(Error::NewtonNonconvergence {
                    cell,
                    residual: residual.abs(),
                    iterations,
                });
            }
            x -= residual / (1.0 - dt_coeff * reaction_jacobian(x, r));
            iterations += 1;
        }
        worst_iterations = worst_iterations.max(iterations);
        state.push(x);
    }
    Ok(ReactionSolve {
        state,
        iterations: worst_iterations,
        residual: worst_residual,
    })
}

/// The benchmark's split right-hand side, with cached diffusion factors and
/// running Newton statistics.
#[derive(Debug)]
pub struct TestPdeOperator {
    grid: PointGrid,
    a: f64,
    d: f64,
    r: f64,
    factors: HashMap<u64, BandedLu>,
    newton_iterations: usize,
    newton_residual: f64,
}

impl TestPdeOperator {
    pub fn new(grid: PointGrid, a: f64, d: f64, r: f64) -> Self {
        Self {
            grid,
            a,
            d,
            r,
            factors: HashMap::new(),
            newton_iterations: 0,
            newton_residual: 0.0,
        }
    }

    /// Largest Newton iteration count since the last reset.
    pub fn newton_iterations(&self) -> usize {
        self.newton_iterations
    }

    /// Largest final Newton residual since the last reset.
    pub fn newton_residual(&self) -> f64 {
        self.newton_residual
    }

    pub fn reset_newton_stats(&mut self) {
        self.newton_iterations = 0;
        self.newton_residual = 0.0;
    }
}

impl SplitOperator for TestPdeOperator {
    fn advection(&self, state: &[f64], _node: usize) -> Vec<f64> {
        advection_operator(state, &self.grid, self.a)
    }

    fn diffusion(&self, state: &[f64], _node: usize) -> Vec<f64> {
        diffusion_operator(state, &self.grid, self.d)
    }

    fn reaction(&self, state: &[f64]) -> Vec<f64> {
        state.iter().map(|&p| reaction_rate(p, self.r)).collect()
    }

    fn solve_diffusion(&mut self, rhs: &[f64], dt_coeff: f64, _node: usize) -> Result<Vec<f64>> {
        let key = dt_coeff.to_bits();
        if !self.factors.contains_key(&key) {
            let lu = diffusion_factor(&self.grid, self.d, dt_coeff)?;
            self.factors.insert(key, lu);
        }
        solve_with_factor(&self.factors[&key], rhs, dt_coeff, &self.grid, self.d)
    }

    fn solve_reaction(&mut self, rhs: &[f64], dt_coeff: f64, guess: &[f64]) -> Result<Vec<f64>> {
        let solved = implicit_reaction_solve(rhs, dt_coeff, guess, self.r)?;
        self.newton_iterations = self.newton_iterations.max(solved.iterations);
        self.newton_residual = self.newton_residual.max(solved.residual);
        Ok(solved.state)
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Time at the end of the step.
    pub time: f64,
    pub dt: f64,
    pub newton_max_iterations: usize,
    pub newton_max_residual: f64,
    /// `iterate_residual` after each sweep.
    pub sweep_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub grid: PointGrid,
    /// Point values at `x_0..=x_n`, boundaries included.
    pub field: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

impl Solution {
    pub fn newton_max_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.newton_max_iterations).max().unwrap_or(0)
    }

    pub fn newton_max_residual(&self) -> f64 {
        self.steps.iter().map(|s| s.newton_max_residual).fold(0.0, f64::max)
    }
}

/// Number of steps and their size; the last step is shortened to land on
/// `final_time`.
pub fn step_schedule(final_time: f64, dt: f64) -> (usize, f64) {
    if final_time <= 0.0 {
        return (0, dt);
    }
    let steps = ((final_time / dt) - 1e-9).ceil().max(1.0) as usize;
    (steps, dt)
}

/// Integrate the benchmark from 0 to `final_time`.
pub fn solve(config: &TestPdeConfig) -> Result<Solution> {
    config.validate()?;
    let grid = config.grid();
    let nodes = NodeSet::lobatto(config.node_count)?;
    let mut ops = TestPdeOperator::new(grid, config.a, config.d, config.r);
    let mut phi = initial_condition(&grid);
    let (count, dt) = step_schedule(config.final_time, config.dt());
    let mut steps = Vec::with_capacity(count);
    for step in 0..count {
        let t0 = step as f64 * dt;
        let h = if step + 1 == count { config.final_time - t0 } else { dt };
        ops.reset_newton_stats();
        let mut sweep_residuals = Vec::with_capacity(config.sweeps);
        let state = sdc::misdc_step_observed(&phi, h, &mut ops, &nodes, config.sweeps, |s, k| {
            sweep_residuals.push(sdc::iterate_residual(s, k).unwrap_or(f64::NAN));
        })
        .map_err(|e| Error::Step {
            step,
            time: t0,
            source: Box::new(e),
        })?;
        phi = state.final_state().to_vec();
        steps.push(StepRecord {
            step,
            time: t0 + h,
            dt: h,
            newton_max_iterations: ops.newton_iterations(),
            newton_max_residual: ops.newton_residual(),
            sweep_residuals,
        });
    }
    Ok(Solution {
        grid,
        field: grid.full_field(&phi),
        steps,
    })
}
