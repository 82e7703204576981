//! Fourth-order finite-volume stencils on a uniform 1-D mesh.
//!
//! Three representations of a field are kept apart by type:
//! [`CellAverages`] (`<phi>_i`), [`CellCenters`] (`phi(x_i)`) and
//! [`FaceValues`] (`phi(x_{i+1/2})`, `n + 1` entries, face `j` at
//! `x_lo + j dx`). Fields hold exactly `n` interior values; operations that
//! reach past the mesh take a [`Ghosts`] block built on demand from the
//! boundary conditions.

use crate::error::{Error, Result};

/// Uniform mesh on `[x_lo, x_hi]` with `n` cells, a Dirichlet inflow at
/// `x_lo` and a homogeneous Neumann outflow at `x_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    dx: f64,
    x_lo: f64,
    x_hi: f64,
    inflow: f64,
}

impl Grid1D {
    pub fn new(n: usize, x_lo: f64, x_hi: f64, inflow: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!(
                "stencils need at least 4 cells, got {n}"
            )));
        }
        if x_hi.partial_cmp(&x_lo) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidArgument(format!("empty domain [{x_lo}, {x_hi}]")));
        }
        Ok(Self {
            n,
            dx: (x_hi - x_lo) / n as f64,
            x_lo,
            x_hi,
            inflow,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    /// Dirichlet value at the inflow face.
    pub fn inflow(&self) -> f64 {
        self.inflow
    }

    pub fn with_inflow(self, inflow: f64) -> Self {
        Self { inflow, ..self }
    }

    /// Position of face `j` (`0..=n`).
    pub fn face(&self, j: isize) -> f64 {
        self.x_lo + j as f64 * self.dx
    }

    /// Position of the centre of cell `i`; negative and `>= n` give ghost cells.
    pub fn center(&self, i: isize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx
    }
}

macro_rules! field {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn values(&self) -> &[f64] {
                &self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                Self(values)
            }
        }
    };
}

field!(
    /// Cell averages `<phi>_i`, one per cell.
    CellAverages
);
field!(
    /// Point values at cell centres, one per cell.
    CellCenters
);
field!(
    /// Point values at faces, `n + 1` of them.
    FaceValues
);

/// Exterior values next to each end of the mesh.
///
/// `lo[0]` is cell `-1`, `lo[1]` cell `-2`; `hi[0]` is cell `n`, `hi[1]`
/// cell `n + 1`. A block may carry fewer than two layers; operations that
/// need more report an invalid argument.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ghosts {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Ghosts {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    /// Ghost averages from the mesh's boundary conditions.
    pub fn for_averages(grid: &Grid1D, avg: &CellAverages) -> Result<Self> {
        let v = check_len(grid, avg.values(), "cell averages")?;
        Ok(Self::new(
            ghost_inflow_avg(grid.inflow(), [v[0], v[1], v[2], v[3]]),
            ghost_outflow_avg(last_four(v)),
        ))
    }

    /// Ghost centre values from the mesh's boundary conditions.
    pub fn for_centers(grid: &Grid1D, centers: &CellCenters) -> Result<Self> {
        let v = check_len(grid, centers.values(), "cell centres")?;
        Ok(Self::new(
            ghost_inflow_center(grid.inflow(), [v[0], v[1], v[2], v[3]]),
            ghost_outflow_center(last_four(v)),
        ))
    }

    /// Cubic extrapolation at both ends, for coefficient fields that carry
    /// no boundary condition of their own. Exact for averages or point
    /// values of cubics.
    pub fn extrapolated(values: &[f64]) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InvalidArgument(format!(
                "extrapolation needs 4 values, got {}",
                values.len()
            )));
        }
        let cubic = |a: f64, b: f64, c: f64, d: f64| 4.0 * a - 6.0 * b + 4.0 * c - d;
        let v = values;
        let n = v.len();
        let lo1 = cubic(v[0], v[1], v[2], v[3]);
        let lo2 = cubic(lo1, v[0], v[1], v[2]);
        let hi1 = cubic(v[n - 1], v[n - 2], v[n - 3], v[n - 4]);
        let hi2 = cubic(hi1, v[n - 1], v[n - 2], v[n - 3]);
        Ok(Self::new([lo1, lo2], [hi1, hi2]))
    }
}

fn check_len<'a>(grid: &Grid1D, values: &'a [f64], what: &str) -> Result<&'a [f64]> {
    if values.len() != grid.n() {
        return Err(Error::InvalidArgument(format!(
            "{what}: expected {} values, got {}",
            grid.n(),
            values.len()
        )));
    }
    Ok(values)
}

fn last_four(v: &[f64]) -> [f64; 4] {
    let n = v.len();
    [v[n - 1], v[n - 2], v[n - 3], v[n - 4]]
}

/// Interior values plus ghosts, indexed from `-2` to `n + 1`.
struct Padded<'a> {
    interior: &'a [f64],
    ghosts: &'a Ghosts,
}

impl<'a> Padded<'a> {
    fn new(grid: &Grid1D, interior: &'a [f64], ghosts: &'a Ghosts, depth: usize, what: &str) -> Result<Self> {
        check_len(grid, interior, what)?;
        if ghosts.lo.len() < depth || ghosts.hi.len() < depth {
            return Err(Error::InvalidArgument(format!(
                "{what}: stencil needs {depth} ghost layers, have {} / {}",
                ghosts.lo.len(),
                ghosts.hi.len()
            )));
        }
        Ok(Self { interior, ghosts })
    }

    fn at(&self, i: isize) -> f64 {
        let n = self.interior.len() as isize;
        if i < 0 {
            self.ghosts.lo[(-i - 1) as usize]
        } else if i >= n {
            self.ghosts.hi[(i - n) as usize]
        } else {
            self.interior[i as usize]
        }
    }
}

/// `phi_i = <phi>_i - (<phi>_{i-1} - 2<phi>_i + <phi>_{i+1}) / 24`
pub fn avg_to_center(grid: &Grid1D, avg: &CellAverages, ghosts: &Ghosts) -> Result<CellCenters> {
    let p = Padded::new(grid, avg.values(), ghosts, 1, "avg_to_center")?;
    Ok(CellCenters(
        (0..grid.n() as isize)
            .map(|i| p.at(i) - (p.at(i - 1) - 2.0 * p.at(i) + p.at(i + 1)) / 24.0)
            .collect(),
    ))
}

/// `<phi>_i = phi_i + (phi_{i-1} - 2 phi_i + phi_{i+1}) / 24`
pub fn center_to_avg(grid: &Grid1D, centers: &CellCenters, ghosts: &Ghosts) -> Result<CellAverages> {
    let p = Padded::new(grid, centers.values(), ghosts, 1, "center_to_avg")?;
    Ok(CellAverages(
        (0..grid.n() as isize)
            .map(|i| p.at(i) + (p.at(i - 1) - 2.0 * p.at(i) + p.at(i + 1)) / 24.0)
            .collect(),
    ))
}

/// Face `j` sits between cells `j - 1` and `j`; the four-cell stencil is
/// applied with `(c_{j-2}, c_{j-1}, c_j, c_{j+1})`.
fn face_stencil(p: &Padded, n: usize, weights: [f64; 4], divisor: f64) -> Vec<f64> {
    (0..=n as isize)
        .map(|j| {
            (weights[0] * p.at(j - 2) + weights[1] * p.at(j - 1) + weights[2] * p.at(j) + weights[3] * p.at(j + 1))
                / divisor
        })
        .collect()
}

/// Face values from cell averages, `(-1, 7, 7, -1) / 12`.
pub fn avg_to_face(grid: &Grid1D, avg: &CellAverages, ghosts: &Ghosts) -> Result<FaceValues> {
    let p = Padded::new(grid, avg.values(), ghosts, 2, "avg_to_face")?;
    Ok(FaceValues(face_stencil(&p, grid.n(), [-1.0, 7.0, 7.0, -1.0], 12.0)))
}

/// Face values from cell centres, `(-1, 9, 9, -1) / 16`.
pub fn center_to_face(grid: &Grid1D, centers: &CellCenters, ghosts: &Ghosts) -> Result<FaceValues> {
    let p = Padded::new(grid, centers.values(), ghosts, 2, "center_to_face")?;
    Ok(FaceValues(face_stencil(&p, grid.n(), [-1.0, 9.0, 9.0, -1.0], 16.0)))
}

/// Gradient at faces from cell averages, `(1, -15, 15, -1) / (12 dx)`.
pub fn face_gradient(grid: &Grid1D, avg: &CellAverages, ghosts: &Ghosts) -> Result<FaceValues> {
    let p = Padded::new(grid, avg.values(), ghosts, 2, "face_gradient")?;
    Ok(FaceValues(face_stencil(
        &p,
        grid.n(),
        [1.0, -15.0, 15.0, -1.0],
        12.0 * grid.dx(),
    )))
}

/// Cell gradient `(5, -34, 0, 34, -5) / (48 dx)` used by the product and
/// quotient rules.
pub fn cell_gradient(grid: &Grid1D, avg: &CellAverages, ghosts: &Ghosts) -> Result<CellCenters> {
    let p = Padded::new(grid, avg.values(), ghosts, 2, "cell_gradient")?;
    Ok(CellCenters(cell_gradient_values(&p, grid)))
}

fn cell_gradient_values(p: &Padded, grid: &Grid1D) -> Vec<f64> {
    let scale = 48.0 * grid.dx();
    (0..grid.n() as isize)
        .map(|i| (5.0 * p.at(i - 2) - 34.0 * p.at(i - 1) + 34.0 * p.at(i + 1) - 5.0 * p.at(i + 2)) / scale)
        .collect()
}

/// `<phi psi>_i = <phi>_i <psi>_i + dx^2/12 phi^G_i psi^G_i`
pub fn product_avg(
    grid: &Grid1D,
    phi: &CellAverages,
    phi_ghosts: &Ghosts,
    psi: &CellAverages,
    psi_ghosts: &Ghosts,
) -> Result<CellAverages> {
    let gphi = cell_gradient(grid, phi, phi_ghosts)?;
    let gpsi = cell_gradient(grid, psi, psi_ghosts)?;
    let c = grid.dx() * grid.dx() / 12.0;
    Ok(CellAverages(
        (0..grid.n())
            .map(|i| phi.0[i] * psi.0[i] + c * (gphi.0[i] * gpsi.0[i]))
            .collect(),
    ))
}

/// Denominator averages smaller than this in magnitude are rejected.
pub const QUOTIENT_SINGULAR_THRESHOLD: f64 = 1e-30;

/// `<phi/psi>_i = <phi>/<psi> + dx^2/12 (<phi> (psi^G)^2 / <psi>^3 - phi^G psi^G / <psi>^2)`
pub fn quotient_avg(
    grid: &Grid1D,
    phi: &CellAverages,
    phi_ghosts: &Ghosts,
    psi: &CellAverages,
    psi_ghosts: &Ghosts,
) -> Result<CellAverages> {
    let gphi = cell_gradient(grid, phi, phi_ghosts)?;
    let gpsi = cell_gradient(grid, psi, psi_ghosts)?;
    if let Some((cell, &value)) = psi
        .0
        .iter()
        .enumerate()
        .find(|(_, v)| v.abs() < QUOTIENT_SINGULAR_THRESHOLD)
    {
        return Err(Error::SingularInput { cell, value });
    }
    let c = grid.dx() * grid.dx() / 12.0;
    Ok(CellAverages(
        (0..grid.n())
            .map(|i| {
                let (p, q) = (phi.0[i], psi.0[i]);
                p / q + c * (p * gpsi.0[i] * gpsi.0[i] / (q * q * q) - gphi.0[i] * gpsi.0[i] / (q * q))
            })
            .collect(),
    ))
}

/// Inflow ghost averages `[<phi>_{-1}, <phi>_{-2}]` from the Dirichlet face
/// value and `[<phi>_0, .., <phi>_3]`.
pub fn ghost_inflow_avg(boundary: f64, interior: [f64; 4]) -> [f64; 2] {
    let [a0, a1, a2, a3] = interior;
    [
        (60.0 * boundary - 77.0 * a0 + 43.0 * a1 - 17.0 * a2 + 3.0 * a3) / 12.0,
        (300.0 * boundary - 505.0 * a0 + 335.0 * a1 - 145.0 * a2 + 27.0 * a3) / 12.0,
    ]
}

/// Inflow ghost centre values `[phi_{-1}, phi_{-2}]`.
pub fn ghost_inflow_center(boundary: f64, interior: [f64; 4]) -> [f64; 2] {
    let [c0, c1, c2, c3] = interior;
    [
        (128.0 * boundary - 140.0 * c0 + 70.0 * c1 - 28.0 * c2 + 5.0 * c3) / 35.0,
        (128.0 * boundary - 210.0 * c0 + 140.0 * c1 - 63.0 * c2 + 12.0 * c3) / 7.0,
    ]
}

/// Zero-gradient outflow ghost averages `[<phi>_n, <phi>_{n+1}]` from
/// `[<phi>_{n-1}, .., <phi>_{n-4}]`.
pub fn ghost_outflow_avg(interior: [f64; 4]) -> [f64; 2] {
    let [a1, a2, a3, a4] = interior;
    [
        (5.0 * a1 + 9.0 * a2 - 5.0 * a3 + a4) / 10.0,
        (-15.0 * a1 + 29.0 * a2 - 15.0 * a3 + 3.0 * a4) / 2.0,
    ]
}

/// Zero-gradient outflow ghost centre values `[phi_n, phi_{n+1}]`.
pub fn ghost_outflow_center(interior: [f64; 4]) -> [f64; 2] {
    let [c1, c2, c3, c4] = interior;
    [
        (17.0 * c1 + 9.0 * c2 - 5.0 * c3 + c4) / 22.0,
        (-135.0 * c1 + 265.0 * c2 - 135.0 * c3 + 27.0 * c4) / 22.0,
    ]
}

/// `<div(U phi)>_i = (U phi)_{i+1/2} - (U phi)_{i-1/2}) / dx`
pub fn flux_divergence(grid: &Grid1D, velocity: &FaceValues, phi: &FaceValues) -> Result<CellAverages> {
    let faces = grid.n() + 1;
    if velocity.len() != faces || phi.len() != faces {
        return Err(Error::InvalidArgument(format!(
            "flux_divergence: expected {faces} face values, got {} and {}",
            velocity.len(),
            phi.len()
        )));
    }
    let flux: Vec<f64> = velocity.0.iter().zip(&phi.0).map(|(u, p)| u * p).collect();
    Ok(CellAverages(
        flux.windows(2).map(|w| (w[1] - w[0]) / grid.dx()).collect(),
    ))
}

/// Face velocities from `U_{i+1/2} - U_{i-1/2} = <S>_i dx` with
/// `U_{-1/2}` set to the inflow velocity.
pub fn integrate_constraint(grid: &Grid1D, source: &CellAverages, inflow_velocity: f64) -> Result<FaceValues> {
    check_len(grid, source.values(), "integrate_constraint")?;
    let mut faces = Vec::with_capacity(grid.n() + 1);
    faces.push(inflow_velocity);
    let mut u = inflow_velocity;
    for s in &source.0 {
        u += s * grid.dx();
        faces.push(u);
    }
    Ok(FaceValues(faces))
}
