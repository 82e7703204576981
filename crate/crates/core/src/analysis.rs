//! Convergence analysis of the MISDC iteration on the scalar model problem
//! `phi_t = (a + d + r) phi` with three Lobatto nodes.
//!
//! For that problem one sweep is affine in the iterate, so successive
//! iterate differences at nodes 1 and 2 obey
//!
//! ```text
//! [e1']   [c11 c12] [e1]
//! [e2'] = [c21 c22] [e2]
//! ```
//!
//! The coefficients are read off by sweeping unit iterates with
//! `phi^n = 0`. `alpha..delta` are their magnitudes and `theta` the largest
//! of them; `theta < 1` is the sufficient convergence condition.
//!
//! The legacy scheme (two nodes, reaction handled as an ODE with linear
//! advection and diffusion interpolants) is evaluated from its closed forms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature::NodeSet;
use crate::sdc::{misdc_sweep, LinearSplit};

/// Distance from a pole below which a parameter set is rejected.
pub const POLE_GUARD: f64 = 1e-8;

/// Legacy `beta` has a removable-looking `1/r`; only an essentially zero
/// `r dt` is treated as the pole.
pub const LEGACY_REACTION_GUARD: f64 = 1e-12;

/// Linear map between successive iterate differences at nodes 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationMap {
    pub a: f64,
    pub d: f64,
    pub r: f64,
    pub dt: f64,
    /// Signed coefficients, `coefficients[row][col]` with rows and columns
    /// indexed by node (1, 2).
    pub coefficients: [[f64; 2]; 2],
}

impl IterationMap {
    /// Weight of the node-1 difference in the node-1 update.
    pub fn alpha(&self) -> f64 {
        self.coefficients[0][0].abs()
    }

    /// Weight of the node-2 difference in the node-1 update.
    pub fn beta(&self) -> f64 {
        self.coefficients[0][1].abs()
    }

    /// Weight of the node-1 difference in the node-2 update (`|c1|`).
    pub fn gamma(&self) -> f64 {
        self.coefficients[1][0].abs()
    }

    /// Weight of the node-2 difference in the node-2 update (`|c2|`).
    pub fn delta(&self) -> f64 {
        self.coefficients[1][1].abs()
    }

    pub fn theta(&self) -> f64 {
        self.alpha().max(self.beta()).max(self.gamma()).max(self.delta())
    }

    /// Spectral radius of the signed map.
    pub fn spectral_radius(&self) -> f64 {
        let [[p, q], [s, t]] = self.coefficients;
        let trace = p + t;
        let det = p * t - q * s;
        let disc = trace * trace - 4.0 * det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            (0.5 * (trace + root)).abs().max((0.5 * (trace - root)).abs())
        } else {
            det.abs().sqrt()
        }
    }
}

fn check_poles(d: f64, r: f64, dt: f64) -> Result<()> {
    if (d * dt - 2.0).abs() < POLE_GUARD {
        return Err(Error::Pole(format!("d dt = {} is at the pole 2", d * dt)));
    }
    if (r * dt - 2.0).abs() < POLE_GUARD {
        return Err(Error::Pole(format!("r dt = {} is at the pole 2", r * dt)));
    }
    Ok(())
}

/// Extract the iteration map by sweeping unit perturbations.
pub fn extract_iteration_map(a: f64, d: f64, r: f64, dt: f64) -> Result<IterationMap> {
    check_poles(d, r, dt)?;
    let nodes = NodeSet::lobatto(3)?;
    let mut ops = LinearSplit::new(a, d, r);
    let mut column = |node: usize| -> Result<[f64; 2]> {
        let mut iterate = vec![vec![0.0]; 3];
        iterate[node] = vec![1.0];
        let out = misdc_sweep(&iterate, dt, &mut ops, &nodes)?;
        Ok([out[1][0], out[2][0]])
    };
    let from_node1 = column(1)?;
    let from_node2 = column(2)?;
    Ok(IterationMap {
        a,
        d,
        r,
        dt,
        coefficients: [[from_node1[0], from_node2[0]], [from_node1[1], from_node2[1]]],
    })
}

/// `max{alpha, beta, gamma, delta}`.
pub fn theta(a: f64, d: f64, r: f64, dt: f64) -> Result<f64> {
    Ok(extract_iteration_map(a, d, r, dt)?.theta())
}

fn closed_form_node2_numerators(a: f64, d: f64, r: f64, dt: f64) -> (f64, f64) {
    let c1 = 8.0 * dt * (dt * (a * a - d * d + d * r - r * r) + a + d + r);
    let c2 = dt
        * (-16.0 * (d + r) - a * a * dt
            + a * (8.0 - 6.0 * (d + r) * dt + 3.0 * d * r * dt * dt)
            + dt * (7.0 * r * r + d * r * (26.0 - 9.0 * r * dt) + d * d * (7.0 + 3.0 * r * dt * (r * dt - 3.0))));
    (c1, c2)
}

/// Reference closed forms for the node-2 row, `(c1, c2)`, with the
/// denominator `3 (d dt - 2)^2 (r dt - 2)^2` used for both. They match
/// [`extract_iteration_map`] when `d r = 0` and differ by a `d r` cross term
/// otherwise.
pub fn closed_form_node2_coefficients(a: f64, d: f64, r: f64, dt: f64) -> (f64, f64) {
    let (c1, c2) = closed_form_node2_numerators(a, d, r, dt);
    let den = 3.0 * (d * dt - 2.0).powi(2) * (r * dt - 2.0).powi(2);
    (c1 / den, c2 / den)
}

/// As [`closed_form_node2_coefficients`] but with `c2`'s denominator taken
/// as `3 (d - 2)^2 (r - 2)^2`, without the time step.
pub fn closed_form_node2_coefficients_unscaled(a: f64, d: f64, r: f64, dt: f64) -> (f64, f64) {
    let (c1, c2) = closed_form_node2_numerators(a, d, r, dt);
    let den1 = 3.0 * (d * dt - 2.0).powi(2) * (r * dt - 2.0).powi(2);
    let den2 = 3.0 * (d - 2.0).powi(2) * (r - 2.0).powi(2);
    (c1 / den1, c2 / den2)
}

/// Legacy-scheme coefficients `(alpha, beta)`, signed.
pub fn legacy_map(a: f64, d: f64, r: f64, dt: f64) -> Result<(f64, f64)> {
    if (d * dt - 1.0).abs() < POLE_GUARD {
        return Err(Error::Pole(format!("d dt = {} is at the pole 1", d * dt)));
    }
    if (r * dt).abs() < LEGACY_REACTION_GUARD {
        return Err(Error::Pole(format!("r dt = {} is at the pole 0", r * dt)));
    }
    let e = (r * dt).exp();
    let alpha_num = a * (2.0 * d * dt + dt * r * (d * dt - 2.0) + e * (d * dt * (dt * r - 2.0) + 2.0) - 2.0)
        + d * (e * (d * dt * dt * r - 2.0 * dt * (d + r) + 2.0) + d * dt * (dt * r + 2.0) - 2.0);
    let alpha = -alpha_num / (2.0 * dt * r * r * (d * dt - 1.0));
    let beta = d * (r * dt).exp_m1() / (r * (d * dt - 1.0));
    Ok((alpha, beta))
}

/// Which scheme a region scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Misdc,
    Legacy,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Misdc => "misdc",
            Method::Legacy => "legacy",
        }
    }
}

/// One evaluated point of a region scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub d_dt: f64,
    pub r_dt: f64,
    /// Largest coefficient magnitude; NaN at a pole.
    pub theta: f64,
    pub converged: bool,
    pub pole: bool,
}

/// Convergence indicator over a `(d dt, r dt)` grid with `dt = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionScan {
    pub method: Method,
    pub a: f64,
    pub d_dt: Vec<f64>,
    pub r_dt: Vec<f64>,
    /// Row-major, `cells[i * r_dt.len() + j]` for `(d_dt[i], r_dt[j])`.
    pub cells: Vec<RegionCell>,
}

impl RegionScan {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i * self.r_dt.len() + j]
    }

    pub fn converged(&self, i: usize, j: usize) -> bool {
        self.cell(i, j).converged
    }

    /// Converged cells, poles excluded.
    pub fn converged_count(&self) -> usize {
        self.cells.iter().filter(|c| c.converged && !c.pole).count()
    }

    pub fn pole_count(&self) -> usize {
        self.cells.iter().filter(|c| c.pole).count()
    }
}

/// `resolution` evenly spaced points over `range`, both ends included.
pub fn linspace(range: (f64, f64), resolution: usize) -> Vec<f64> {
    let (lo, hi) = range;
    let step = (hi - lo) / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| if i + 1 == resolution { hi } else { lo + i as f64 * step })
        .collect()
}

/// Evaluate the convergence condition over a `(d dt, r dt)` grid.
pub fn scan_region(
    method: Method,
    a: f64,
    d_dt_range: (f64, f64),
    r_dt_range: (f64, f64),
    resolution: (usize, usize),
    exec: Execution,
) -> Result<RegionScan> {
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points per axis, got {resolution:?}"
        )));
    }
    let finite = [d_dt_range.0, d_dt_range.1, r_dt_range.0, r_dt_range.1]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidArgument("scan ranges must be finite".into()));
    }
    let d_dt = linspace(d_dt_range, resolution.0);
    let r_dt = linspace(r_dt_range, resolution.1);
    let cols = r_dt.len();
    let cells = exec.map_range(d_dt.len() * cols, |idx| {
        let (d, r) = (d_dt[idx / cols], r_dt[idx % cols]);
        let theta = match method {
            Method::Misdc => theta(a, d, r, 1.0).ok(),
            Method::Legacy => legacy_map(a, d, r, 1.0).ok().map(|(al, be)| al.abs().max(be.abs())),
        };
        match theta {
            Some(theta) => RegionCell {
                d_dt: d,
                r_dt: r,
                theta,
                converged: theta < 1.0,
                pole: false,
            },
            None => RegionCell {
                d_dt: d,
                r_dt: r,
                theta: f64::NAN,
                converged: false,
                pole: true,
            },
        }
    });
    Ok(RegionScan {
        method,
        a,
        d_dt,
        r_dt,
        cells,
    })
}

/// Coefficients at one mesh spacing under `a = a~/dx, d = d~/dx^2, dt = lambda dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub dx: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub a_tilde: f64,
    pub d_tilde: f64,
    pub r: f64,
    pub lambda: f64,
    pub rows: Vec<LimitRow>,
    /// Linear extrapolation in `dx` to `dx = 0` from the last two rows.
    pub extrapolated: LimitRow,
}

/// The limits of `alpha..delta` and `theta` as `dx -> 0`.
pub const MISDC_LIMITS: [f64; 4] = [1.0 / 12.0, 1.0 / 3.0, 2.0 / 3.0, 7.0 / 12.0];
pub const MISDC_THETA_LIMIT: f64 = 2.0 / 3.0;

fn check_sequence(dx_sequence: &[f64]) -> Result<()> {
    if dx_sequence.len() < 2 {
        return Err(Error::InvalidArgument("need at least two mesh spacings".into()));
    }
    if !dx_sequence.windows(2).all(|w| w[1] < w[0]) || dx_sequence.iter().any(|h| h.is_nan() || *h <= 0.0) {
        return Err(Error::InvalidArgument(
            "mesh spacings must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn extrapolate(rows: &[LimitRow]) -> LimitRow {
    let (p, q) = (rows[rows.len() - 2], rows[rows.len() - 1]);
    let w = q.dx / (p.dx - q.dx);
    let ex = |a: f64, b: f64| b + (b - a) * w;
    LimitRow {
        dx: 0.0,
        alpha: ex(p.alpha, q.alpha),
        beta: ex(p.beta, q.beta),
        gamma: ex(p.gamma, q.gamma),
        delta: ex(p.delta, q.delta),
        theta: ex(p.theta, q.theta),
    }
}

/// Evaluate the MISDC coefficients along a refinement sequence.
pub fn limit_check(a_tilde: f64, d_tilde: f64, r: f64, lambda: f64, dx_sequence: &[f64]) -> Result<LimitReport> {
    check_sequence(dx_sequence)?;
    let rows = dx_sequence
        .iter()
        .map(|&dx| {
            let map = extract_iteration_map(a_tilde / dx, d_tilde / (dx * dx), r, lambda * dx)?;
            Ok(LimitRow {
                dx,
                alpha: map.alpha(),
                beta: map.beta(),
                gamma: map.gamma(),
                delta: map.delta(),
                theta: map.theta(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = extrapolate(&rows);
    Ok(LimitReport {
        a_tilde,
        d_tilde,
        r,
        lambda,
        rows,
        extrapolated,
    })
}

/// Legacy `(|alpha|, |beta|)` along a refinement sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegacyLimitReport {
    pub rows: Vec<(f64, f64, f64)>,
    /// `(6 - d~ r lambda^2) / 12`
    pub alpha_limit: f64,
    pub beta_limit: f64,
}

pub fn legacy_limit_check(
    a_tilde: f64,
    d_tilde: f64,
    r: f64,
    lambda: f64,
    dx_sequence: &[f64],
) -> Result<LegacyLimitReport> {
    check_sequence(dx_sequence)?;
    let rows = dx_sequence
        .iter()
        .map(|&dx| {
            let (alpha, beta) = legacy_map(a_tilde / dx, d_tilde / (dx * dx), r, lambda * dx)?;
            Ok((dx, alpha, beta))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LegacyLimitReport {
        rows,
        alpha_limit: (6.0 - d_tilde * r * lambda * lambda) / 12.0,
        beta_limit: 1.0,
    })
}
