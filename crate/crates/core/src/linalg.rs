//! Pentadiagonal systems with extra entries in the first and last rows, as
//! produced by eliminating boundary ghost cells from fourth-order implicit
//! diffusion.

use crate::error::{Error, Result};
use crate::stencils::{self, CellAverages, FaceValues, Ghosts, Grid1D};

/// Probing handles operators whose rows reach at most this far from the diagonal.
const MAX_REACH: usize = 3;

/// Square matrix with bands at offsets `-2..=2` plus optional entries
/// further out in row 0 and row `n - 1`. Everything else is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    /// `bands[o + 2][i]` holds `A[i][i + o]`.
    bands: [Vec<f64>; 5],
    /// `(column, value)` pairs in row 0 beyond the band.
    first_row_extra: Vec<(usize, f64)>,
    /// `(column, value)` pairs in row `n - 1` beyond the band.
    last_row_extra: Vec<(usize, f64)>,
}

impl BandedMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidArgument(format!("banded matrix needs n >= 5, got {n}")));
        }
        Ok(Self {
            n,
            bands: std::array::from_fn(|_| vec![0.0; n]),
            first_row_extra: Vec::new(),
            last_row_extra: Vec::new(),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        m.bands[2].fill(1.0);
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "({i}, {j}) out of range");
        let offset = j as isize - i as isize;
        if offset.abs() <= 2 {
            return self.bands[(offset + 2) as usize][i];
        }
        let extras = match i {
            0 => &self.first_row_extra,
            i if i == self.n - 1 => &self.last_row_extra,
            _ => return 0.0,
        };
        extras.iter().find(|(c, _)| *c == j).map_or(0.0, |(_, v)| *v)
    }

    /// Set an entry; fails for positions outside the declared structure.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidArgument(format!("({i}, {j}) out of range")));
        }
        let offset = j as isize - i as isize;
        if offset.abs() <= 2 {
            self.bands[(offset + 2) as usize][i] = value;
            return Ok(());
        }
        let extras = match i {
            0 => &mut self.first_row_extra,
            i if i == self.n - 1 => &mut self.last_row_extra,
            _ => {
                if value == 0.0 {
                    return Ok(());
                }
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) lies outside the pentadiagonal structure"
                )));
            }
        };
        match extras.iter_mut().find(|(c, _)| *c == j) {
            Some(entry) => entry.1 = value,
            None if value != 0.0 => {
                extras.push((j, value));
                extras.sort_by_key(|(c, _)| *c);
            }
            None => {}
        }
        Ok(())
    }

    /// Nonzero entries of row `i` as `(column, value)`.
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(self.n - 1);
        let extras: &[(usize, f64)] = match i {
            0 => &self.first_row_extra,
            i if i == self.n - 1 => &self.last_row_extra,
            _ => &[],
        };
        (lo..=hi)
            .map(move |j| (j, self.get(i, j)))
            .chain(extras.iter().copied())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, a)| a * x[j]).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, a)| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Lower and upper bandwidth including the corner extras.
    fn bandwidths(&self) -> (usize, usize) {
        let upper = self.first_row_extra.iter().map(|(c, _)| *c).max().unwrap_or(0).max(2);
        let lower = self
            .last_row_extra
            .iter()
            .map(|(c, _)| self.n - 1 - *c)
            .max()
            .unwrap_or(0)
            .max(2);
        (lower, upper)
    }

    /// Recover the matrix of a linear map by probing it with interleaved unit
    /// vectors. The map must not couple entries more than three apart.
    pub fn from_operator<F>(n: usize, mut apply: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut matrix = Self::zeros(n)?;
        let colors = 2 * MAX_REACH + 1;
        for color in 0..colors {
            let probe: Vec<f64> = (0..n).map(|j| if j % colors == color { 1.0 } else { 0.0 }).collect();
            let image = apply(&probe);
            if image.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "operator returned {} values for dimension {n}",
                    image.len()
                )));
            }
            for (i, &value) in image.iter().enumerate() {
                let lo = i.saturating_sub(MAX_REACH);
                let hi = (i + MAX_REACH).min(n - 1);
                if let Some(j) = (lo..=hi).find(|j| j % colors == color) {
                    matrix.set(i, j, value)?;
                }
            }
        }
        Ok(matrix)
    }
}

/// Solve `A x = b` by banded LU with partial pivoting.
pub fn solve_banded(a: &BandedMatrix, b: &[f64]) -> Result<Vec<f64>> {
    BandedLu::factor(a)?.solve(b)
}

/// LU factors of a [`BandedMatrix`] with row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    /// Upper bandwidth of `U` after pivoting fill, `lower + upper`.
    width: usize,
    /// Row `i` holds columns `i - lower ..= i + width`.
    rows: Vec<Vec<f64>>,
    multipliers: Vec<Vec<f64>>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        let n = a.n();
        let (lower, upper) = a.bandwidths();
        let width = lower + upper;
        let stride = lower + width + 1;
        let mut rows = vec![vec![0.0; stride]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in a.row(i) {
                row[j + lower - i] = v;
            }
        }
        let scale = (0..n).flat_map(|i| a.row(i).map(|(_, v)| v.abs())).fold(0.0, f64::max);
        let tiny = scale * f64::EPSILON * n as f64;

        let at = |rows: &Vec<Vec<f64>>, i: usize, j: usize| rows[i][j + lower - i];
        let mut multipliers = Vec::with_capacity(n);
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let last = (k + lower).min(n - 1);
            let (p, magnitude) = (k..=last)
                .map(|i| (i, at(&rows, i, k).abs()))
                .fold((k, -1.0), |best, cand| if cand.1 > best.1 { cand } else { best });
            if magnitude <= tiny || magnitude == 0.0 {
                return Err(Error::SingularMatrix { pivot: k, magnitude });
            }
            let col_end = (k + width).min(n - 1);
            if p != k {
                for j in k..=col_end {
                    let (vk, vp) = (at(&rows, k, j), at(&rows, p, j));
                    rows[k][j + lower - k] = vp;
                    rows[p][j + lower - p] = vk;
                }
            }
            pivots.push(p);
            let pivot = at(&rows, k, k);
            let mut column = Vec::with_capacity(last - k);
            for i in k + 1..=last {
                let l = at(&rows, i, k) / pivot;
                column.push(l);
                if l != 0.0 {
                    rows[i][k + lower - i] = 0.0;
                    for j in k + 1..=col_end {
                        let u = at(&rows, k, j);
                        rows[i][j + lower - i] -= l * u;
                    }
                }
            }
            multipliers.push(column);
        }
        Ok(Self {
            n,
            lower,
            width,
            rows,
            multipliers,
            pivots,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has {} entries, matrix is {}x{}",
                b.len(),
                self.n,
                self.n
            )));
        }
        let mut x = b.to_vec();
        for k in 0..self.n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            for (offset, l) in self.multipliers[k].iter().enumerate() {
                x[k + 1 + offset] -= l * xk;
            }
        }
        for k in (0..self.n).rev() {
            let row = &self.rows[k];
            let end = (k + self.width).min(self.n - 1);
            let mut acc = x[k];
            for j in k + 1..=end {
                acc -= row[j + self.lower - k] * x[j];
            }
            x[k] = acc / row[self.lower];
        }
        Ok(x)
    }
}

/// Relative residual `|Ax - b| / (|A| |x| + |b|)` in the max norm.
pub fn relative_residual(a: &BandedMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.apply(x);
    let num = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let den = a.norm_inf() * xn + bn;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Apply `<rho phi> - dt_coeff <div(D grad phi)>` to cell averages `phi`,
/// with the mesh's Dirichlet inflow value and zero-gradient outflow.
///
/// `mass` ghosts come from cubic extrapolation.
pub fn apply_diffusion_operator(
    grid: &Grid1D,
    face_coefficients: &FaceValues,
    mass: &CellAverages,
    dt_coeff: f64,
    phi: &CellAverages,
) -> Result<Vec<f64>> {
    let mass_ghosts = Ghosts::extrapolated(mass.values())?;
    let phi_ghosts = Ghosts::for_averages(grid, phi)?;
    let mass_term = stencils::product_avg(grid, mass, &mass_ghosts, phi, &phi_ghosts)?;
    let grad = stencils::face_gradient(grid, phi, &phi_ghosts)?;
    let div = stencils::flux_divergence(grid, face_coefficients, &grad)?;
    Ok(mass_term.0.iter().zip(&div.0).map(|(m, d)| m - dt_coeff * d).collect())
}

/// Matrix and right-hand-side correction for
/// `<rho phi> - dt_coeff <div(D grad phi)> = <b>`.
///
/// The ghost cells are folded into the first and last rows. The system to
/// solve is `A <phi> = <b> + adjustment`, where `adjustment` carries the
/// inhomogeneous inflow value.
pub fn assemble_diffusion_matrix(
    grid: &Grid1D,
    face_coefficients: &FaceValues,
    mass: &CellAverages,
    dt_coeff: f64,
) -> Result<(BandedMatrix, Vec<f64>)> {
    if face_coefficients.len() != grid.n() + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} face coefficients, got {}",
            grid.n() + 1,
            face_coefficients.len()
        )));
    }
    if let Some((j, d)) = face_coefficients
        .values()
        .iter()
        .enumerate()
        .find(|(_, d)| d.is_nan() || **d <= 0.0)
    {
        return Err(Error::InvalidArgument(format!(
            "face coefficient {d} at face {j} is not positive"
        )));
    }
    if mass.len() != grid.n() {
        return Err(Error::InvalidArgument(format!(
            "expected {} mass coefficients, got {}",
            grid.n(),
            mass.len()
        )));
    }

    let homogeneous = grid.with_inflow(0.0);
    let mut failure = None;
    let matrix = BandedMatrix::from_operator(grid.n(), |x| {
        apply_diffusion_operator(
            &homogeneous,
            face_coefficients,
            mass,
            dt_coeff,
            &CellAverages(x.to_vec()),
        )
        .unwrap_or_else(|e| {
            failure = Some(e);
            vec![0.0; x.len()]
        })
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let affine = apply_diffusion_operator(
        grid,
        face_coefficients,
        mass,
        dt_coeff,
        &CellAverages(vec![0.0; grid.n()]),
    )?;
    Ok((matrix, affine.into_iter().map(|g| -g).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve_returns_rhs() {
        let a = BandedMatrix::identity(7).unwrap();
        let b = vec![1.0, -2.0, 3.5, 0.0, 9.0, 1e-3, 4.0];
        assert_eq!(solve_banded(&a, &b).unwrap(), b);
    }

    #[test]
    fn tridiagonal_recovers_known_solution() {
        let mut a = BandedMatrix::zeros(5).unwrap();
        for i in 0..5 {
            a.set(i, i, 2.0).unwrap();
            if i > 0 {
                a.set(i, i - 1, -1.0).unwrap();
            }
            if i < 4 {
                a.set(i, i + 1, -1.0).unwrap();
            }
        }
        let x_known = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = a.apply(&x_known);
        assert_eq!(b, vec![0.0, 0.0, 0.0, 0.0, 6.0]);
        let x = solve_banded(&a, &b).unwrap();
        for (x, e) in x.iter().zip(x_known) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn structure_is_enforced() {
        let mut a = BandedMatrix::zeros(8).unwrap();
        assert!(a.set(3, 6, 1.0).is_err());
        assert!(a.set(3, 6, 0.0).is_ok());
        assert!(a.set(0, 3, 1.0).is_ok());
        assert!(a.set(7, 4, 1.0).is_ok());
        assert_eq!(a.get(0, 3), 1.0);
        assert_eq!(a.get(3, 7), 0.0);
        assert!(BandedMatrix::zeros(4).is_err());
    }

    #[test]
    fn singular_pivot_is_reported() {
        let mut a = BandedMatrix::identity(6).unwrap();
        a.set(3, 3, 0.0).unwrap();
        match solve_banded(&a, &[1.0; 6]) {
            Err(Error::SingularMatrix { pivot, .. }) => assert_eq!(pivot, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // Zero leading diagonal forces a row interchange.
        let mut a = BandedMatrix::zeros(6).unwrap();
        let entries = [
            (0, 1, 1.0),
            (0, 3, 2.0),
            (1, 0, 3.0),
            (1, 1, 1.0),
            (2, 2, 4.0),
            (2, 0, 1.0),
            (3, 3, 1.0),
            (3, 5, -1.0),
            (4, 4, 2.0),
            (5, 5, 5.0),
            (5, 2, 1.0),
        ];
        for (i, j, v) in entries {
            a.set(i, j, v).unwrap();
        }
        let x_known = [1.0, -2.0, 0.5, 3.0, -1.0, 2.0];
        let b = a.apply(&x_known);
        let x = solve_banded(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-14);
        for (x, e) in x.iter().zip(x_known) {
            assert!((x - e).abs() < 1e-13);
        }
    }

    #[test]
    fn randomized_systems_meet_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[8usize, 64, 512] {
            for _ in 0..10 {
                let a = random_dominant(&mut rng, n);
                let x_known: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let b = a.apply(&x_known);
                let x = solve_banded(&a, &b).unwrap();
                assert!(relative_residual(&a, &x, &b) <= 1e-12);
                let err = x.iter().zip(&x_known).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                assert!(err < 1e-12, "n = {n}: {err}");
            }
        }
    }

    pub(crate) fn random_dominant(rng: &mut impl Rng, n: usize) -> BandedMatrix {
        let mut a = BandedMatrix::zeros(n).unwrap();
        for i in 0..n {
            let mut off = 0.0;
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                if j != i {
                    let v = rng.gen_range(-1.0..1.0);
                    off += f64::abs(v);
                    a.set(i, j, v).unwrap();
                }
            }
            let extra_col = match i {
                0 => Some(3),
                i if i == n - 1 => Some(n - 4),
                _ => None,
            };
            if let Some(j) = extra_col {
                let v = rng.gen_range(-1.0..1.0);
                off += f64::abs(v);
                a.set(i, j, v).unwrap();
            }
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            a.set(i, i, sign * (off + rng.gen_range(0.5..2.0))).unwrap();
        }
        a
    }

    #[test]
    fn probing_recovers_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_dominant(&mut rng, 20);
        let b = BandedMatrix::from_operator(20, |x| a.apply(x)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_dt_unit_mass_gives_identity() {
        let g = Grid1D::new(12, 0.0, 20.0, 1.0).unwrap();
        let d = FaceValues(vec![1.0; 13]);
        let (a, adj) = assemble_diffusion_matrix(&g, &d, &CellAverages(vec![1.0; 12]), 0.0).unwrap();
        assert_eq!(a, BandedMatrix::identity(12).unwrap());
        assert_eq!(adj, vec![0.0; 12]);
    }

    #[test]
    fn nonpositive_coefficients_rejected() {
        let g = Grid1D::new(8, 0.0, 1.0, 0.0).unwrap();
        let mut d = vec![1.0; 9];
        d[4] = 0.0;
        let err = assemble_diffusion_matrix(&g, &FaceValues(d), &CellAverages(vec![1.0; 8]), 0.1);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn interior_rows_match_hand_expansion() {
        let g = Grid1D::new(16, 0.0, 2.0, 0.0).unwrap();
        let c = 0.3;
        let (a, _) =
            assemble_diffusion_matrix(&g, &FaceValues(vec![1.0; 17]), &CellAverages(vec![1.0; 16]), c).unwrap();
        let s = c / (12.0 * g.dx() * g.dx());
        let expected = [s, -16.0 * s, 1.0 + 30.0 * s, -16.0 * s, s];
        for i in 3..13 {
            for (o, e) in expected.iter().enumerate() {
                let got = a.get(i, i + o - 2);
                assert!((got - e).abs() < 1e-12 * e.abs().max(1.0), "row {i}: {got} vs {e}");
            }
        }
    }

    #[test]
    fn boundary_rows_carry_one_extra_term() {
        let g = Grid1D::new(16, 0.0, 2.0, 1.0).unwrap();
        let (a, adj) =
            assemble_diffusion_matrix(&g, &FaceValues(vec![1.0; 17]), &CellAverages(vec![1.0; 16]), 0.3).unwrap();
        assert!(a.get(0, 3) != 0.0);
        assert!(a.get(15, 12) != 0.0);
        // Only the rows touching the inflow ghosts see the Dirichlet value.
        assert!(adj[0] != 0.0 && adj[1] != 0.0);
        assert!(adj[2..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn assembly_is_additive_in_face_coefficients() {
        let g = Grid1D::new(12, 0.0, 3.0, 0.7).unwrap();
        let mass = CellAverages((0..12).map(|i| 1.0 + 0.1 * i as f64).collect());
        let d1 = FaceValues((0..13).map(|j| 1.0 + 0.05 * j as f64).collect());
        let d2 = FaceValues((0..13).map(|j| 2.0 - 0.03 * j as f64).collect());
        let d12 = FaceValues(d1.0.iter().zip(&d2.0).map(|(a, b)| a + b).collect());
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.4).sin()).collect();
        let c = 0.2;
        let (a1, _) = assemble_diffusion_matrix(&g, &d1, &mass, c).unwrap();
        let (a2, _) = assemble_diffusion_matrix(&g, &d2, &mass, c).unwrap();
        let (a12, _) = assemble_diffusion_matrix(&g, &d12, &mass, c).unwrap();
        let (m0, _) = assemble_diffusion_matrix(&g, &d1, &mass, 0.0).unwrap();
        // A(D) = M + c K(D), so A(D1) + A(D2) - M = A(D1 + D2).
        let lhs: Vec<f64> = a1
            .apply(&x)
            .iter()
            .zip(a2.apply(&x))
            .zip(m0.apply(&x))
            .map(|((p, q), m)| p + q - m)
            .collect();
        let rhs = a12.apply(&x);
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).abs() < 1e-12);
        }
    }
}
