//! Gauss-Lobatto temporal nodes and substep integration weights.
//!
//! A [`NodeSet`] stores nodes as fractions of the timestep, so the same set
//! serves every step regardless of its length. Row `m` of the weight matrix
//! integrates the interpolating polynomial through all nodes over
//! `[tau_m, tau_{m+1}]`:
//!
//! ```text
//! I_m^{m+1}[F] = dt * sum_j w[m][j] * F(t^j)
//! ```

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Rational type used for the exactly representable node sets.
pub type Rational = Ratio<i64>;

/// Gauss-Lobatto nodes on `[0, 1]` together with their substep weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    nodes: Vec<f64>,
    weights: Vec<Vec<f64>>,
    exact: Option<ExactNodeSet>,
}

/// Rational form of a node set, available when every node is rational
/// (two and three Lobatto nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactNodeSet {
    pub nodes: Vec<Rational>,
    pub weights: Vec<Vec<Rational>>,
}

impl NodeSet {
    /// Gauss-Lobatto node set with `node_count` points, weights included.
    pub fn lobatto(node_count: usize) -> Result<Self> {
        match node_count {
            0 | 1 => Err(Error::InvalidArgument(format!(
                "a Lobatto rule needs at least 2 nodes, got {node_count}"
            ))),
            2 | 3 => {
                let nodes = exact_lobatto(node_count);
                let weights = substep_weights(&nodes);
                let exact = ExactNodeSet { nodes, weights };
                Ok(Self {
                    nodes: exact.nodes.iter().map(to_f64).collect(),
                    weights: exact
                        .weights
                        .iter()
                        .map(|row| row.iter().map(to_f64).collect())
                        .collect(),
                    exact: Some(exact),
                })
            }
            _ => {
                let nodes = lobatto_nodes(node_count)?;
                let weights = substep_weights(&nodes);
                Ok(Self {
                    nodes,
                    weights,
                    exact: None,
                })
            }
        }
    }

    /// Number of nodes, `M + 1`.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of substeps, `M`.
    pub fn substeps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Substep weight matrix, `M` rows by `M + 1` columns.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn exact(&self) -> Option<&ExactNodeSet> {
        self.exact.as_ref()
    }

    /// Width of substep `m` as a fraction of the timestep.
    pub fn substep_width(&self, m: usize) -> f64 {
        self.nodes[m + 1] - self.nodes[m]
    }

    /// Order of the full-interval quadrature (`2M` for Lobatto with `M + 1` nodes).
    pub fn quadrature_order(&self) -> usize {
        2 * self.substeps()
    }
}

fn to_f64(q: &Rational) -> f64 {
    // Numerator and denominator are small, so this is correctly rounded.
    *q.numer() as f64 / *q.denom() as f64
}

fn exact_lobatto(node_count: usize) -> Vec<Rational> {
    match node_count {
        2 => vec![Rational::zero(), Rational::one()],
        3 => vec![Rational::zero(), Rational::new(1, 2), Rational::one()],
        _ => unreachable!("only 2 and 3 node rules are rational"),
    }
}

/// Gauss-Lobatto node offsets on `[0, 1]`.
///
/// Interior nodes are the roots of `P'_{N-1}`, found by Newton iteration from
/// Chebyshev-Lobatto guesses.
pub fn lobatto_nodes(node_count: usize) -> Result<Vec<f64>> {
    if node_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "a Lobatto rule needs at least 2 nodes, got {node_count}"
        )));
    }
    if node_count <= 3 {
        return Ok(exact_lobatto(node_count).iter().map(to_f64).collect());
    }
    let degree = node_count - 1;
    let mut nodes = vec![0.0; node_count];
    nodes[degree] = 1.0;
    for (j, node) in nodes.iter_mut().enumerate().take(degree).skip(1) {
        // Guess on [-1, 1], ascending.
        let mut x = -(std::f64::consts::PI * j as f64 / degree as f64).cos();
        for _ in 0..100 {
            let (_, dp, d2p) = legendre_with_derivatives(degree, x);
            let step = dp / d2p;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        *node = 0.5 * (x + 1.0);
    }
    Ok(nodes)
}

/// `P_n(x)`, `P_n'(x)` and `P_n''(x)` for |x| < 1.
fn legendre_with_derivatives(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let one_minus = 1.0 - x * x;
    let dp = n * (p0 - x * p1) / one_minus;
    let d2p = (2.0 * x * dp - n * (n + 1.0) * p1) / one_minus;
    (p1, dp, d2p)
}

/// Substep weights by exact integration of the Lagrange basis polynomials.
///
/// Generic over the scalar so the rational node sets produce exact weights.
pub fn substep_weights<T>(nodes: &[T]) -> Vec<Vec<T>>
where
    T: Clone + num_traits::Num,
{
    let count = nodes.len();
    let basis: Vec<Vec<T>> = (0..count).map(|j| lagrange_basis(nodes, j)).collect();
    (0..count.saturating_sub(1))
        .map(|m| {
            basis
                .iter()
                .map(|coeffs| antiderivative_at(coeffs, &nodes[m + 1]) - antiderivative_at(coeffs, &nodes[m]))
                .collect()
        })
        .collect()
}

/// Monomial coefficients (ascending powers) of the `j`-th Lagrange basis polynomial.
fn lagrange_basis<T>(nodes: &[T], j: usize) -> Vec<T>
where
    T: Clone + num_traits::Num,
{
    let mut coeffs = vec![T::one()];
    for (i, xi) in nodes.iter().enumerate() {
        if i == j {
            continue;
        }
        let scale = nodes[j].clone() - xi.clone();
        // coeffs *= (t - xi) / scale
        let mut next = vec![T::zero(); coeffs.len() + 1];
        for (p, c) in coeffs.iter().enumerate() {
            next[p + 1] = next[p + 1].clone() + c.clone() / scale.clone();
            next[p] = next[p].clone() - c.clone() * xi.clone() / scale.clone();
        }
        coeffs = next;
    }
    coeffs
}

fn antiderivative_at<T>(coeffs: &[T], t: &T) -> T
where
    T: Clone + num_traits::Num,
{
    let mut power = t.clone();
    let mut divisor = T::one();
    let mut acc = T::zero();
    for c in coeffs {
        acc = acc + c.clone() * power.clone() / divisor.clone();
        power = power * t.clone();
        divisor = divisor + T::one();
    }
    acc
}
