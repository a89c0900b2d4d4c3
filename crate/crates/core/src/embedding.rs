//! Embedding formulae for directivities: reconstructing the far field
//! for every incidence from a finite basis of auxiliary plane-wave
//! solutions, and recovering the basis size from directivity data.
//!
//! The modified directivity
//! `St(beta, beta_in) = (s_b + 1/s_b - s_in - 1/s_in) S(beta, beta_in)`
//! is antisymmetric in its arguments thanks to reciprocity, and for an
//! obstacle with `N` features it spans an `N`-dimensional family: with
//! auxiliary incidences `beta_1..beta_N`,
//! `St(beta, beta_in) = sum_l A_l St(beta, beta_l)`, where the
//! coefficients solve the reciprocity system
//! `-St(beta_in, beta_p) = sum_l A_l St(beta_p, beta_l)`. The rank of a
//! probe matrix of modified directivities therefore plateaus at `N`,
//! which an SVD with an absolute threshold detects.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bae::{assemble_and_solve_with, ScatteringSolution};
use crate::error::{Error, Result};
use crate::geometry::{enumerate_features, Obstacle};
use crate::green::GreenTable;
use crate::lattice::{solve_dispersion, Direction, Site, Wavenumber};
use crate::Complex;

/// Observation factors smaller than this are treated as on the factor
/// zero set and flagged during recovery.
pub const FACTOR_ZERO_TOL: f64 = 1e-6;
/// Absolute singular-value threshold used by the rank probe by default.
pub const DEFAULT_RANK_THRESHOLD: f64 = 5e-5;

/// `s_beta + 1/s_beta - s_in - 1/s_in`: the factor converting a
/// directivity into a modified directivity.
pub fn directivity_factor(beta: f64, beta_in: f64, k: Wavenumber) -> Result<Complex> {
    let obs = solve_dispersion(Direction::from_beta(beta)?, k)?;
    let inc = solve_dispersion(Direction::from_beta(beta_in)?, k)?;
    Ok(obs.s_symbol() - inc.s_symbol())
}

/// Modified directivity of a single value.
pub fn modified_directivity(
    s_value: Complex,
    beta: f64,
    beta_in: f64,
    k: Wavenumber,
) -> Result<Complex> {
    Ok(directivity_factor(beta, beta_in, k)? * s_value)
}

/// Dense table of directivities `S(observation, incidence)`.
#[derive(Debug, Clone)]
pub struct DirectivityTable {
    pub incidences: Vec<f64>,
    pub observations: Vec<Direction>,
    /// `values[(i, l)]` is `S(observations[i], incidences[l])`.
    pub values: DMatrix<Complex>,
    pub k: Wavenumber,
}

/// Auxiliary basis: incidence parameters, their outgoing `s` roots, the
/// antisymmetric matrix of modified directivities and the underlying
/// scattering solves.
pub struct EmbeddingBasis {
    betas: Vec<f64>,
    s_roots: Vec<Complex>,
    smod: DMatrix<Complex>,
    count_n: usize,
    solutions: Vec<ScatteringSolution>,
    green: Arc<GreenTable>,
}

impl EmbeddingBasis {
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn s_roots(&self) -> &[Complex] {
        &self.s_roots
    }

    /// `smod[(p, l)] = St(beta_p, beta_l)`.
    pub fn smod(&self) -> &DMatrix<Complex> {
        &self.smod
    }

    pub fn count_n(&self) -> usize {
        self.count_n
    }

    pub fn solutions(&self) -> &[ScatteringSolution] {
        &self.solutions
    }

    pub fn wavenumber(&self) -> Wavenumber {
        self.green.wavenumber()
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

fn check_distinct(betas: &[f64]) -> Result<()> {
    for (i, a) in betas.iter().enumerate() {
        for b in betas.iter().skip(i + 1) {
            if (a - b).abs() < 1e-12 {
                return Err(Error::Config(format!(
                    "duplicate auxiliary incidence parameter {a}"
                )));
            }
        }
    }
    Ok(())
}

/// Runs one scattering solve per incidence and tabulates the modified
/// directivities between all pairs.
fn smod_matrix(
    obstacle: &Obstacle,
    betas: &[f64],
    green: &Arc<GreenTable>,
) -> Result<(Vec<ScatteringSolution>, DMatrix<Complex>)> {
    let k = green.wavenumber();
    let solutions: Vec<ScatteringSolution> = betas
        .par_iter()
        .map(|&beta| {
            let inc = solve_dispersion(Direction::from_beta(beta)?, k)?;
            assemble_and_solve_with(obstacle, &inc, green)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = betas.len();
    let mut smod = DMatrix::<Complex>::zeros(n, n);
    for (l, sol) in solutions.iter().enumerate() {
        for (p, &beta_p) in betas.iter().enumerate() {
            let s = sol.directivity(Direction::from_beta(beta_p)?)?;
            smod[(p, l)] = directivity_factor(beta_p, betas[l], k)? * s;
        }
    }
    Ok((solutions, smod))
}

/// Builds the embedding basis, enforcing the feature count of the
/// obstacle. Use [`build_basis_unchecked`] to override the count.
pub fn build_basis(obstacle: &Obstacle, betas: &[f64], k: Wavenumber) -> Result<EmbeddingBasis> {
    let expected = enumerate_features(obstacle).count_n;
    if betas.len() != expected {
        return Err(Error::Config(format!(
            "obstacle ({}) needs {expected} auxiliary incidences, got {}",
            obstacle.describe(),
            betas.len()
        )));
    }
    build_basis_unchecked(obstacle, betas, k)
}

/// Builds the basis without the feature-count precondition.
pub fn build_basis_unchecked(
    obstacle: &Obstacle,
    betas: &[f64],
    k: Wavenumber,
) -> Result<EmbeddingBasis> {
    if betas.is_empty() {
        return Err(Error::Config("empty auxiliary basis".into()));
    }
    check_distinct(betas)?;
    let green = Arc::new(GreenTable::new(k));
    let (solutions, smod) = smod_matrix(obstacle, betas, &green)?;

    // Antisymmetry is a theorem (reciprocity); a violation signals an
    // upstream bug rather than bad input.
    let scale = smod.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    for p in 0..betas.len() {
        for l in 0..=p {
            let dev = (smod[(p, l)] + smod[(l, p)]).norm();
            if dev > 1e-6 * scale.max(1e-30) {
                return Err(Error::Diagnostic(format!(
                    "modified directivities not antisymmetric: |St({p},{l}) + St({l},{p})| = {dev:.3e} vs scale {scale:.3e}"
                )));
            }
        }
    }

    let s_roots = betas
        .iter()
        .map(|&b| Ok(solve_dispersion(Direction::from_beta(b)?, k)?.s))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingBasis {
        betas: betas.to_vec(),
        s_roots,
        smod,
        count_n: enumerate_features(obstacle).count_n,
        solutions,
        green,
    })
}

/// Directivities of the basis solves on an observation grid, the
/// auxiliary data consumed by [`embed_directivity`].
pub fn auxiliary_table(
    basis: &EmbeddingBasis,
    observations: &[Direction],
) -> Result<DirectivityTable> {
    let mut values = DMatrix::<Complex>::zeros(observations.len(), basis.len());
    let rows: Vec<Vec<Complex>> = observations
        .par_iter()
        .map(|&obs| {
            basis
                .solutions
                .iter()
                .map(|sol| sol.directivity(obs))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, row) in rows.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            values[(i, l)] = v;
        }
    }
    Ok(DirectivityTable {
        incidences: basis.betas.clone(),
        observations: observations.to_vec(),
        values,
        k: basis.wavenumber(),
    })
}

/// Solves the reciprocity system for the embedding coefficients of an
/// arbitrary incidence: `-St(beta_in, beta_p) = sum_l A_l St(beta_p, beta_l)`.
pub fn solve_coefficients(basis: &EmbeddingBasis, beta_in: f64) -> Result<DVector<Complex>> {
    let k = basis.wavenumber();
    let obs_in = Direction::from_beta(beta_in)?;
    let mut rhs = DVector::<Complex>::zeros(basis.len());
    for (p, sol) in basis.solutions.iter().enumerate() {
        let s = sol.directivity(obs_in)?;
        rhs[p] = -directivity_factor(beta_in, basis.betas[p], k)? * s;
    }
    basis.smod.clone().lu().solve(&rhs).ok_or_else(|| {
        Error::Numerical(format!(
            "embedding coefficient system is singular for basis {:?}",
            basis.betas
        ))
    })
}

/// Recovery status of one observation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryFlag {
    Ok,
    /// The conversion factor vanishes here; `s` holds a one-sided limit
    /// taken from the nearest clean grid point.
    FactorZero,
}

/// Embedded directivities on an observation grid.
#[derive(Debug, Clone)]
pub struct EmbeddedDirectivity {
    pub beta_in: f64,
    pub observations: Vec<Direction>,
    pub s_modified: Vec<Complex>,
    pub s: Vec<Complex>,
    pub flags: Vec<RecoveryFlag>,
}

/// Evaluates the embedding combination on the observation grid and
/// recovers the plain directivity, flagging factor-zero points.
pub fn embed_directivity(
    basis: &EmbeddingBasis,
    coefficients: &DVector<Complex>,
    beta_in: f64,
    observations: &[Direction],
    auxiliary: &DirectivityTable,
) -> Result<EmbeddedDirectivity> {
    if coefficients.len() != basis.len() {
        return Err(Error::Input(format!(
            "coefficient vector length {} does not match basis size {}",
            coefficients.len(),
            basis.len()
        )));
    }
    if auxiliary.incidences.len() != basis.len()
        || auxiliary
            .incidences
            .iter()
            .zip(basis.betas())
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::Input(
            "auxiliary table incidences do not match the basis".into(),
        ));
    }
    if auxiliary.observations != observations {
        return Err(Error::Input(
            "auxiliary table observations do not match the requested grid".into(),
        ));
    }
    let k = basis.wavenumber();
    let n = observations.len();
    let mut s_modified = vec![Complex::new(0.0, 0.0); n];
    let mut factors = vec![Complex::new(0.0, 0.0); n];
    for (i, &obs) in observations.iter().enumerate() {
        let beta_obs = obs.beta();
        let mut acc = Complex::new(0.0, 0.0);
        for l in 0..basis.len() {
            acc += coefficients[l]
                * directivity_factor(beta_obs, basis.betas[l], k)?
                * auxiliary.values[(i, l)];
        }
        s_modified[i] = acc;
        factors[i] = directivity_factor(beta_obs, beta_in, k)?;
    }

    let mut s = vec![Complex::new(0.0, 0.0); n];
    let mut flags = vec![RecoveryFlag::Ok; n];
    for i in 0..n {
        if factors[i].norm() < FACTOR_ZERO_TOL {
            flags[i] = RecoveryFlag::FactorZero;
        } else {
            s[i] = s_modified[i] / factors[i];
        }
    }
    // Flagged points take the one-sided limit from the nearest clean
    // neighbour instead of dividing by a vanishing factor.
    for i in 0..n {
        if flags[i] == RecoveryFlag::FactorZero {
            let clean = (1..n)
                .flat_map(|d| [i.checked_sub(d), i.checked_add(d).filter(|&j| j < n)])
                .flatten()
                .find(|&j| flags[j] == RecoveryFlag::Ok);
            if let Some(j) = clean {
                s[i] = s[j];
            }
        }
    }
    Ok(EmbeddedDirectivity {
        beta_in,
        observations: observations.to_vec(),
        s_modified,
        s,
        flags,
    })
}

/// Probe matrix of modified directivities over `M` incidences, the input
/// of the rank recovery.
pub fn probe_matrix(
    obstacle: &Obstacle,
    betas: &[f64],
    k: Wavenumber,
) -> Result<DMatrix<Complex>> {
    let green = Arc::new(GreenTable::new(k));
    probe_matrix_with(obstacle, betas, &green)
}

/// [`probe_matrix`] against a shared Green table, so sweeps over probe
/// sizes reuse the cached quadratures.
pub fn probe_matrix_with(
    obstacle: &Obstacle,
    betas: &[f64],
    green: &Arc<GreenTable>,
) -> Result<DMatrix<Complex>> {
    check_distinct(betas)?;
    let (_, smod) = smod_matrix(obstacle, betas, green)?;
    Ok(smod)
}

/// Singular values in non-increasing order.
pub fn singular_values(matrix: &DMatrix<Complex>) -> Result<Vec<f64>> {
    let svd = matrix.clone().try_svd(false, false, f64::EPSILON * 4.0, 1000)
        .ok_or_else(|| Error::Numerical("SVD of the probe matrix failed".into()))?;
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Counts singular values above an absolute threshold.
pub fn rank_probe(matrix: &DMatrix<Complex>, threshold: f64) -> Result<usize> {
    if matrix.nrows() == 0 || threshold <= 0.0 {
        return Err(Error::Config(
            "rank probe needs a nonempty matrix and a positive threshold".into(),
        ));
    }
    Ok(singular_values(matrix)?
        .into_iter()
        .filter(|&sv| sv > threshold)
        .count())
}

/// Deterministic default auxiliary incidences: cotangents of jittered
/// equispaced angles in (0, pi/2). The jitter keeps mirror-symmetric
/// obstacles from seeing degenerate beta / 1/beta pairs.
pub fn default_probe_betas(count: usize) -> Vec<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    (0..count)
        .map(|j| {
            let base = (j as f64 + 0.5) / count as f64;
            let jitter = 0.08 * (2.3 * j as f64 + 0.7).sin() / count as f64;
            1.0 / (half_pi * (base + jitter)).tan()
        })
        .collect()
}

/// Residual of the field-level embedding combination.
#[derive(Debug, Clone, Copy)]
pub struct WeakFieldResidual {
    pub max_residual: f64,
    pub field_scale: f64,
}

/// Checks the weak field embedding at sample sites: the second-order
/// operator applied to the total field of the arbitrary-incidence solve
/// must equal the coefficient combination over the basis solves, each
/// term carrying the operator of its own incidence (which annihilates
/// that term's incident wave and makes every side purely outgoing).
///
/// Sample sites must keep their horizontal neighbours out of the obstacle
/// interior; surface sites are fine (the total field vanishes there).
pub fn weak_embedding_field_check(
    basis: &EmbeddingBasis,
    coefficients: &DVector<Complex>,
    incident_solution: &ScatteringSolution,
    sites: &[Site],
) -> Result<WeakFieldResidual> {
    if coefficients.len() != basis.len() {
        return Err(Error::Input(
            "coefficient vector does not match basis size".into(),
        ));
    }
    let mut max_residual = 0.0f64;
    let mut field_scale = 0.0f64;
    for &site in sites {
        let mut lhs = apply_second_order(incident_solution, site)?;
        field_scale = field_scale.max(lhs.norm());
        for (l, sol) in basis.solutions.iter().enumerate() {
            let term = coefficients[l] * apply_second_order(sol, site)?;
            field_scale = field_scale.max(term.norm());
            lhs -= term;
        }
        max_residual = max_residual.max(lhs.norm());
    }
    Ok(WeakFieldResidual {
        max_residual,
        field_scale,
    })
}

/// The second-order embedding operator of the solution's own incidence
/// applied to its total field.
fn apply_second_order(solution: &ScatteringSolution, site: Site) -> Result<Complex> {
    let s_in = solution.incidence.s;
    let east = solution.total_field(site.offset(1, 0))?;
    let west = solution.total_field(site.offset(-1, 0))?;
    let center = solution.total_field(site)?;
    Ok(east + west - (s_in + 1.0 / s_in) * center)
}
