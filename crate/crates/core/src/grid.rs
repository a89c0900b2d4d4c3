//! Brute-force grid solver: the discrete Helmholtz equation on a large
//! absorbing box with a zero rim, prescribed Dirichlet values at selected
//! interior sites and point sources.
//!
//! The box problem without interior constraints separates: a sine
//! transform along `m` turns the 5-point operator into independent
//! complex tridiagonal systems along `n`. Interior Dirichlet constraints
//! are reinstated through a capacitance matrix — one fast solve per
//! constraint site plus a small dense system — so the overall cost is
//! `O((K + 2) mx my)` tridiagonal work for `K` constraints. Absorption
//! makes the rim error exponentially small, which is what qualifies this
//! as an independent oracle for the boundary-equation solver.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{Site, Wavenumber};
use crate::Complex;

/// Axis-aligned box of lattice sites; the rim (`m = m_min`, `m = m_max`,
/// `n = n_min`, `n = n_max`) is held at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeRect {
    pub m_min: i64,
    pub m_max: i64,
    pub n_min: i64,
    pub n_max: i64,
}

impl LatticeRect {
    pub fn centered(radius: i64) -> Self {
        Self {
            m_min: -radius,
            m_max: radius,
            n_min: -radius,
            n_max: radius,
        }
    }

    pub fn contains(&self, site: Site) -> bool {
        site.m >= self.m_min && site.m <= self.m_max && site.n >= self.n_min && site.n <= self.n_max
    }

    fn strictly_inside(&self, site: Site) -> bool {
        site.m > self.m_min && site.m < self.m_max && site.n > self.n_min && site.n < self.n_max
    }

    /// Distance from a site to the nearest rim line.
    pub fn rim_distance(&self, site: Site) -> i64 {
        (site.m - self.m_min)
            .min(self.m_max - site.m)
            .min(site.n - self.n_min)
            .min(self.n_max - site.n)
    }
}

/// Field sampled on a full box, rim included.
#[derive(Debug, Clone)]
pub struct GridField {
    rect: LatticeRect,
    width: usize,
    values: Vec<Complex>,
}

impl GridField {
    pub fn rect(&self) -> LatticeRect {
        self.rect
    }

    pub fn get(&self, site: Site) -> Option<Complex> {
        if !self.rect.contains(site) {
            return None;
        }
        let col = (site.m - self.rect.m_min) as usize;
        let row = (site.n - self.rect.n_min) as usize;
        Some(self.values[row * self.width + col])
    }
}

/// Separable fast solver for one box and wavenumber.
pub struct BoxSolver {
    rect: LatticeRect,
    mx: usize,
    my: usize,
    /// sin(pi (p+1)(a+1) / (mx+1)) for mode p, column a.
    sin_table: Vec<f64>,
    /// Tridiagonal diagonal per mode: k^2 - 4 + 2 cos(pi (p+1)/(mx+1)).
    mode_diag: Vec<Complex>,
    fft: Arc<dyn Fft<f64>>,
}

impl BoxSolver {
    pub fn new(rect: LatticeRect, k: Wavenumber) -> Result<Self> {
        let mx = (rect.m_max - rect.m_min - 1).max(0) as usize;
        let my = (rect.n_max - rect.n_min - 1).max(0) as usize;
        if mx == 0 || my == 0 {
            return Err(Error::Config(format!(
                "box [{}..{}]x[{}..{}] has no interior",
                rect.m_min, rect.m_max, rect.n_min, rect.n_max
            )));
        }
        let denom = (mx + 1) as f64;
        let mut sin_table = vec![0.0; mx * mx];
        for p in 0..mx {
            for a in 0..mx {
                sin_table[p * mx + a] =
                    (std::f64::consts::PI * (p + 1) as f64 * (a + 1) as f64 / denom).sin();
            }
        }
        let mode_diag = (0..mx)
            .map(|p| {
                k.squared() - 4.0
                    + 2.0 * (std::f64::consts::PI * (p + 1) as f64 / denom).cos()
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * (mx + 1));
        Ok(Self {
            rect,
            mx,
            my,
            sin_table,
            mode_diag,
            fft,
        })
    }

    fn interior_coords(&self, site: Site) -> Option<(usize, usize)> {
        if !self.rect.strictly_inside(site) {
            return None;
        }
        Some((
            (site.m - self.rect.m_min - 1) as usize,
            (site.n - self.rect.n_min - 1) as usize,
        ))
    }

    /// Spectral solve for sparse right-hand sides; `spectrum[p*my + j]`
    /// holds mode `p` of the solution along row `j` afterwards.
    fn solve_spectrum(&self, sources: &[(Site, Complex)]) -> Result<Vec<Complex>> {
        let (mx, my) = (self.mx, self.my);
        let mut spectrum = vec![Complex::new(0.0, 0.0); mx * my];
        for &(site, amp) in sources {
            let (a, b) = self.interior_coords(site).ok_or_else(|| {
                Error::Config(format!("source site {site} is not strictly inside the box"))
            })?;
            for p in 0..mx {
                spectrum[p * my + b] += amp * self.sin_table[p * mx + a];
            }
        }
        // Thomas sweep per mode: tridiag(1, d_p, 1).
        let mut cp = vec![Complex::new(0.0, 0.0); my];
        for p in 0..mx {
            let d = self.mode_diag[p];
            let row = &mut spectrum[p * my..(p + 1) * my];
            let mut w = d;
            cp[0] = 1.0 / w;
            row[0] /= w;
            for j in 1..my {
                w = d - cp[j - 1];
                cp[j] = 1.0 / w;
                row[j] = (row[j] - row[j - 1]) / w;
            }
            for j in (0..my - 1).rev() {
                let next = row[j + 1];
                row[j] -= cp[j] * next;
            }
        }
        Ok(spectrum)
    }

    /// Solution values at selected sites only (no full inverse transform).
    pub fn solve_at(&self, sources: &[(Site, Complex)], report: &[Site]) -> Result<Vec<Complex>> {
        let spectrum = self.solve_spectrum(sources)?;
        let scale = 2.0 / (self.mx + 1) as f64;
        report
            .iter()
            .map(|&site| {
                if !self.rect.contains(site) {
                    return Err(Error::Config(format!("report site {site} outside the box")));
                }
                let Some((a, b)) = self.interior_coords(site) else {
                    return Ok(Complex::new(0.0, 0.0)); // on the rim
                };
                let mut acc = Complex::new(0.0, 0.0);
                for p in 0..self.mx {
                    acc += spectrum[p * self.my + b] * self.sin_table[p * self.mx + a];
                }
                Ok(acc * scale)
            })
            .collect()
    }

    /// Full-field solve; the inverse sine transform runs through the FFT.
    pub fn solve_full(&self, sources: &[(Site, Complex)]) -> Result<GridField> {
        let spectrum = self.solve_spectrum(sources)?;
        let width = (self.rect.m_max - self.rect.m_min + 1) as usize;
        let height = (self.rect.n_max - self.rect.n_min + 1) as usize;
        let mut values = vec![Complex::new(0.0, 0.0); width * height];
        let len = 2 * (self.mx + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        let inv = Complex::new(0.0, 1.0) / (self.mx + 1) as f64;
        for b in 0..self.my {
            for slot in buf.iter_mut() {
                *slot = Complex::new(0.0, 0.0);
            }
            for p in 0..self.mx {
                let v = spectrum[p * self.my + b];
                buf[p + 1] = v;
                buf[len - 1 - p] = -v;
            }
            self.fft.process(&mut buf);
            let row = b + 1; // interior row offset within the full box
            for a in 0..self.mx {
                values[row * width + (a + 1)] = inv * buf[a + 1];
            }
        }
        Ok(GridField {
            rect: self.rect,
            width,
            values,
        })
    }
}

/// Direct solve of the boxed Dirichlet problem: zero rim, prescribed
/// values at `dirichlet` sites, point `sources` elsewhere (a source may
/// also sit on a Dirichlet site's equation — constraints replace the
/// equation at their site).
pub fn solve_dirichlet_with_sources(
    rect: LatticeRect,
    k: Wavenumber,
    dirichlet: &[(Site, Complex)],
    sources: &[(Site, Complex)],
) -> Result<GridField> {
    let solver = BoxSolver::new(rect, k)?;
    if dirichlet.is_empty() {
        return solver.solve_full(sources);
    }
    let sites: Vec<Site> = dirichlet.iter().map(|&(s, _)| s).collect();
    for site in &sites {
        if !rect.strictly_inside(*site) {
            return Err(Error::Config(format!(
                "Dirichlet site {site} is not strictly inside the box"
            )));
        }
    }
    let n = sites.len();
    // Capacitance matrix: box response between constraint sites.
    let mut cap = DMatrix::<Complex>::zeros(n, n);
    for (j, &site) in sites.iter().enumerate() {
        let col = solver.solve_at(&[(site, Complex::new(1.0, 0.0))], &sites)?;
        for i in 0..n {
            cap[(i, j)] = col[i];
        }
    }
    let base = solver.solve_at(sources, &sites)?;
    let rhs = DVector::<Complex>::from_iterator(
        n,
        dirichlet.iter().zip(&base).map(|(&(_, g), &u0)| g - u0),
    );
    let lu = cap.lu();
    let strengths = lu.solve(&rhs).ok_or_else(|| {
        Error::Numerical("capacitance system for the grid solve is singular".into())
    })?;
    let mut all_sources: Vec<(Site, Complex)> = sources.to_vec();
    for (j, &site) in sites.iter().enumerate() {
        all_sources.push((site, strengths[j]));
    }
    solver.solve_full(&all_sources)
}
