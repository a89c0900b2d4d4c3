//! Boundary algebraic equations: the lattice analogue of boundary
//! integral equations for exterior Dirichlet scattering.
//!
//! Green's identity applied in the exterior with the free-space Green's
//! function as the second solution yields a dense linear system for the
//! boundary normal-derivative densities,
//! `sum_nu G(mu - nu) X_nu = -sum_nu d_nu[G^mu] u_in(nu)`,
//! one unknown per boundary node. The scattered field anywhere and the
//! far-field directivity follow by summing the same identity against the
//! Green's function or an outgoing test wave. A brute-force absorbing-box
//! solver serves as the independent oracle.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{classify_boundary, BoundaryNode, Obstacle};
use crate::green::GreenTable;
use crate::grid::{solve_dirichlet_with_sources, GridField, LatticeRect};
use crate::lattice::{plane_wave, solve_dispersion, Direction, ExponentSign, Site, WaveRoots, Wavenumber};
use crate::Complex;

/// Relative residual accepted for the dense solve.
const SOLVE_TOL: f64 = 1e-10;
/// Condition-number ceiling before a solve is rejected.
const COND_CAP: f64 = 1e12;

/// Assembled boundary system prior to factorization.
pub struct BaeSystem {
    pub ordering: Vec<BoundaryNode>,
    pub matrix: DMatrix<Complex>,
    pub forcing: DVector<Complex>,
    pub k: Wavenumber,
    pub incidence: WaveRoots,
}

/// Boundary densities of one scattering solve, with everything needed to
/// reconstruct fields and directivities.
pub struct ScatteringSolution {
    obstacle: Obstacle,
    boundary: Vec<BoundaryNode>,
    densities: DVector<Complex>,
    pub incidence: WaveRoots,
    pub condition_estimate: f64,
    green: Arc<GreenTable>,
}

impl ScatteringSolution {
    pub fn obstacle(&self) -> &Obstacle {
        &self.obstacle
    }

    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn densities(&self) -> &DVector<Complex> {
        &self.densities
    }

    pub fn wavenumber(&self) -> Wavenumber {
        self.green.wavenumber()
    }

    pub fn green_table(&self) -> &Arc<GreenTable> {
        &self.green
    }

    /// Incident plane wave at a site.
    pub fn incident_field(&self, site: Site) -> Complex {
        plane_wave(&self.incidence, site, ExponentSign::Minus)
    }

    /// Scattered field via the reconstruction identity. Boundary sites
    /// return the Dirichlet trace `-u_in`; obstacle-interior sites are a
    /// domain error.
    pub fn reconstruct_field(&self, site: Site) -> Result<Complex> {
        if self.obstacle.contains(site) {
            if self.boundary.iter().any(|b| b.site == site) {
                // On the surface the identity returns the (zero) total
                // field; the scattered trace is minus the incident wave.
                return Ok(self.reconstruction_sum(site)? - self.incident_field(site));
            }
            return Err(Error::Domain(format!(
                "site {site} lies inside the obstacle ({})",
                self.obstacle.describe()
            )));
        }
        self.reconstruction_sum(site)
    }

    /// Total field: incident plus scattered, zero on the obstacle surface.
    pub fn total_field(&self, site: Site) -> Result<Complex> {
        Ok(self.incident_field(site) + self.reconstruct_field(site)?)
    }

    /// The raw bilinear reconstruction sum.
    fn reconstruction_sum(&self, site: Site) -> Result<Complex> {
        let mut acc = Complex::new(0.0, 0.0);
        for (j, node) in self.boundary.iter().enumerate() {
            let mut dg = Complex::new(0.0, 0.0);
            for &(stencil_site, w) in node.weights() {
                dg += w * self.green.get(stencil_site - site)?;
            }
            acc += self.densities[j] * self.green.get(site - node.site)?
                + dg * self.incident_field(node.site);
        }
        Ok(acc)
    }

    /// Far-field directivity along an observation direction: the
    /// boundary sum of the densities against the outgoing test wave plus
    /// the test wave's normal derivative against the incident trace.
    pub fn directivity(&self, direction: Direction) -> Result<Complex> {
        let obs = solve_dispersion(direction, self.wavenumber())?;
        let test = |p: Site| plane_wave(&obs, p, ExponentSign::Minus);
        let mut acc = Complex::new(0.0, 0.0);
        for (j, node) in self.boundary.iter().enumerate() {
            let mut dt = Complex::new(0.0, 0.0);
            for &(stencil_site, w) in node.weights() {
                dt += w * test(stencil_site);
            }
            acc += self.densities[j] * test(node.site) + dt * self.incident_field(node.site);
        }
        Ok(acc)
    }
}

/// Assembles the boundary system for an incident plane wave.
pub fn assemble_system(
    obstacle: &Obstacle,
    incidence: &WaveRoots,
    green: &Arc<GreenTable>,
) -> Result<BaeSystem> {
    let k = green.wavenumber();
    let boundary = classify_boundary(obstacle, k);
    if boundary.is_empty() {
        return Err(Error::Input(format!(
            "obstacle ({}) has an empty boundary",
            obstacle.describe()
        )));
    }
    let n = boundary.len();

    // Warm the Green cache over all displacements in parallel, then fill.
    let mut keys: Vec<Site> = Vec::new();
    for i in &boundary {
        for j in &boundary {
            keys.push(i.site - j.site);
        }
        for jj in &boundary {
            for &(stencil_site, _) in jj.weights() {
                keys.push(stencil_site - i.site);
            }
        }
    }
    keys.sort();
    keys.dedup();
    keys.par_iter().try_for_each(|&d| green.get(d).map(|_| ()))?;

    let mut matrix = DMatrix::<Complex>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            matrix[(i, j)] = green.get(boundary[i].site - boundary[j].site)?;
        }
    }
    let forcing_entries: Vec<Complex> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Complex> {
            let mut acc = Complex::new(0.0, 0.0);
            for node in &boundary {
                let mut dg = Complex::new(0.0, 0.0);
                for &(stencil_site, w) in node.weights() {
                    dg += w * green.get(stencil_site - boundary[i].site)?;
                }
                acc -= dg * plane_wave(incidence, node.site, ExponentSign::Minus);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let forcing = DVector::from_vec(forcing_entries);
    Ok(BaeSystem {
        ordering: boundary,
        matrix,
        forcing,
        k,
        incidence: *incidence,
    })
}

/// Factorizes and solves an assembled system.
pub fn solve_system(system: BaeSystem, green: &Arc<GreenTable>, obstacle: &Obstacle) -> Result<ScatteringSolution> {
    let BaeSystem {
        ordering,
        matrix,
        forcing,
        k: _,
        incidence,
    } = system;
    let norm1 = matrix_norm1(&matrix);
    let lu = matrix.clone().lu();
    let condition_estimate = norm1 * estimate_inverse_norm1_symmetric(&lu, ordering.len());
    if !condition_estimate.is_finite() || condition_estimate > COND_CAP {
        return Err(Error::Numerical(format!(
            "boundary system for obstacle ({}) is ill-conditioned (estimate {condition_estimate:.3e})",
            obstacle.describe()
        )));
    }
    let densities = lu.solve(&forcing).ok_or_else(|| {
        Error::Numerical(format!(
            "boundary system for obstacle ({}) is singular",
            obstacle.describe()
        ))
    })?;
    let residual = (&matrix * &densities - &forcing).norm();
    let scale = forcing.norm().max(1e-300);
    if residual / scale > SOLVE_TOL {
        return Err(Error::Numerical(format!(
            "boundary solve residual {:.3e} exceeds {SOLVE_TOL:.0e} for obstacle ({})",
            residual / scale,
            obstacle.describe()
        )));
    }
    Ok(ScatteringSolution {
        obstacle: obstacle.clone(),
        boundary: ordering,
        densities,
        incidence,
        condition_estimate,
        green: Arc::clone(green),
    })
}

/// One-call assembly and dense solve against a shared Green table.
pub fn assemble_and_solve_with(
    obstacle: &Obstacle,
    incidence: &WaveRoots,
    green: &Arc<GreenTable>,
) -> Result<ScatteringSolution> {
    let system = assemble_system(obstacle, incidence, green)?;
    solve_system(system, green, obstacle)
}

/// One-call assembly and dense solve with a private Green table.
pub fn assemble_and_solve(
    obstacle: &Obstacle,
    incidence: &WaveRoots,
    k: Wavenumber,
) -> Result<ScatteringSolution> {
    let green = Arc::new(GreenTable::new(k));
    assemble_and_solve_with(obstacle, incidence, &green)
}

fn matrix_norm1(a: &DMatrix<Complex>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager-style 1-norm estimate of the inverse from an LU factorization.
///
/// Conjugate-transpose solves reduce to plain solves because the boundary
/// matrix is complex symmetric: `A^H x = b <=> x = conj(A^{-1} conj(b))`.
fn estimate_inverse_norm1_symmetric(
    lu: &nalgebra::LU<Complex, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
) -> f64 {
    let solve = |b: &DVector<Complex>| lu.solve(b);
    let mut x = DVector::<Complex>::from_element(n, Complex::new(1.0 / n as f64, 0.0));
    let mut estimate = 0.0f64;
    for _ in 0..5 {
        let Some(y) = solve(&x) else { return f64::INFINITY };
        let est = y.iter().map(|v| v.norm()).sum::<f64>();
        let xi = DVector::<Complex>::from_iterator(
            n,
            y.iter().map(|v| {
                let a = v.norm();
                if a == 0.0 {
                    Complex::new(1.0, 0.0)
                } else {
                    v / a
                }
            }),
        );
        let Some(z_inner) = solve(&xi.map(|v| v.conj())) else {
            return f64::INFINITY;
        };
        let z = z_inner.map(|v| v.conj());
        let (mut best_j, mut best) = (0usize, 0.0f64);
        for (j, v) in z.iter().enumerate() {
            if v.norm() > best {
                best = v.norm();
                best_j = j;
            }
        }
        let z_dot_x: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        if est <= estimate || best <= z_dot_x + 1e-16 {
            estimate = estimate.max(est);
            break;
        }
        estimate = est;
        x = DVector::zeros(n);
        x[best_j] = Complex::new(1.0, 0.0);
    }
    estimate
}

/// Brute-force oracle: solves the scattering problem on a large absorbing
/// box with the obstacle nodes pinned to `-u_in` and a zero rim.
pub fn oracle_grid_solve(
    obstacle: &Obstacle,
    incidence: &WaveRoots,
    k: Wavenumber,
    box_radius: i64,
) -> Result<GridField> {
    let rect = LatticeRect::centered(box_radius);
    let needed = (5.0 / k.value().im).ceil() as i64;
    let margin = obstacle
        .sites()
        .map(|s| rect.rim_distance(s))
        .min()
        .unwrap_or(0);
    if margin < needed {
        return Err(Error::Config(format!(
            "oracle box radius {box_radius} leaves margin {margin} < {needed} = 5 / Im k around obstacle ({})",
            obstacle.describe()
        )));
    }
    let dirichlet: Vec<(Site, Complex)> = obstacle
        .sites()
        .map(|s| (s, -plane_wave(incidence, s, ExponentSign::Minus)))
        .collect();
    solve_dirichlet_with_sources(rect, k, &dirichlet, &[])
}
