//! Closed-form embedding formulae for the canonical geometries — the
//! Dirichlet half-plane, the finite strip and the right-angled wedge —
//! plus the half-plane edge Green's machinery: branch-point constants,
//! the factorized kernel with its plus/minus transforms, and the strong
//! embedding formula through edge directivities.
//!
//! Semi-infinite scatterers are never solved directly here; every
//! numerical statement about them is validated elsewhere by truncation
//! studies with raised absorption. The evaluators in this module are the
//! exact algebraic combinations, usable with directivity tables from any
//! source.

use crate::embedding::directivity_factor;
use crate::error::{Error, Result};
use crate::lattice::{solve_dispersion, Direction, Wavenumber};
use crate::Complex;

/// Branch-point constants of the half-plane kernel. The `o` roots lie
/// outside the unit circle and the `i` roots inside; each pair consists
/// of exact reciprocals summing to `-d`.
#[derive(Debug, Clone, Copy)]
pub struct HalfPlaneConstants {
    pub d1: Complex,
    pub d2: Complex,
    pub eta_o1: Complex,
    pub eta_i1: Complex,
    pub eta_o2: Complex,
    pub eta_i2: Complex,
}

impl HalfPlaneConstants {
    /// The square root of `eta_o1 * eta_o2` relating the edge value of
    /// the edge Green's function to its source strength. The branch is
    /// the negated principal root: a unit point source at the edge of a
    /// long truncated Dirichlet segment produces exactly
    /// `v(0,0) = 1 / sqrt_eta_product()`, and the principal root gets the
    /// sign of that measurement wrong.
    pub fn sqrt_eta_product(&self) -> Complex {
        -(self.eta_o1 * self.eta_o2).sqrt()
    }
}

/// Evaluates the branch-point constants with principal square roots,
/// relabeling each pair if the outside/inside convention comes out
/// swapped.
pub fn halfplane_constants(k: Wavenumber) -> Result<HalfPlaneConstants> {
    let k2 = k.squared();
    let d1 = k2 - 2.0;
    let d2 = k2 - 6.0;
    let i = Complex::new(0.0, 1.0);
    let mut eta_o1 = -d1 / 2.0 - i * (4.0 - d1 * d1).sqrt() / 2.0;
    let mut eta_i1 = -d1 / 2.0 + i * (4.0 - d1 * d1).sqrt() / 2.0;
    let mut eta_o2 = -d2 / 2.0 + (d2 * d2 - 4.0).sqrt() / 2.0;
    let mut eta_i2 = -d2 / 2.0 - (d2 * d2 - 4.0).sqrt() / 2.0;
    if eta_o1.norm() < eta_i1.norm() {
        std::mem::swap(&mut eta_o1, &mut eta_i1);
    }
    if eta_o2.norm() < eta_i2.norm() {
        std::mem::swap(&mut eta_o2, &mut eta_i2);
    }
    let constants = HalfPlaneConstants {
        d1,
        d2,
        eta_o1,
        eta_i1,
        eta_o2,
        eta_i2,
    };
    for (o, i_, d) in [
        (eta_o1, eta_i1, d1),
        (eta_o2, eta_i2, d2),
    ] {
        if (o * i_ - 1.0).norm() > 1e-14 || (o + i_ + d).norm() > 1e-13 {
            return Err(Error::Numerical(format!(
                "branch-point pair failed its reciprocal/sum identities at k = {}",
                k.value()
            )));
        }
        if o.norm() <= 1.0 || i_.norm() >= 1.0 {
            return Err(Error::Domain(format!(
                "branch points do not split across the unit circle at k = {}",
                k.value()
            )));
        }
    }
    Ok(constants)
}

/// Kernel and transform values of the half-plane edge Green's function at
/// one spectral point.
#[derive(Debug, Clone, Copy)]
pub struct KernelTransforms {
    /// Factorized kernel value.
    pub kernel: Complex,
    /// Minus transform (field values on the free half-line); analytic
    /// outside the unit circle and tending to the edge value `C1` at
    /// infinity.
    pub v_minus: Complex,
    /// Plus transform (normal derivative on the boundary half-line);
    /// analytic inside the unit circle.
    pub v_plus: Complex,
    /// Source strength equivalent to the edge value `C1`.
    pub c2: Complex,
}

/// Evaluates the factorized kernel and the plus/minus transforms of the
/// edge Green's function with edge value `c1`.
///
/// Branches: the minus factor uses `sqrt((1 - eta_i1/s)(1 - eta_i2/s))`
/// and the plus factor `sqrt((1 - s/eta_o1)(1 - s/eta_o2))`, both
/// principal, which keeps the cuts off the unit circle; the kernel is
/// their product scaled by `sqrt(eta_o1 eta_o2)/2`, a genuine square root
/// of `(s-eta_o1)(s-eta_o2)(s-eta_i1)(s-eta_i2)/(2s)^2`.
pub fn kernel_and_transforms(
    s: Complex,
    c1: Complex,
    k: Wavenumber,
) -> Result<KernelTransforms> {
    let constants = halfplane_constants(k)?;
    if s.norm() < 1e-12 {
        return Err(Error::Domain("spectral point at the origin".into()));
    }
    for eta in [
        constants.eta_o1,
        constants.eta_o2,
        constants.eta_i1,
        constants.eta_i2,
    ] {
        if (s - eta).norm() < 1e-12 * eta.norm().max(1.0) {
            return Err(Error::Domain(format!(
                "spectral point {s} is at a branch point"
            )));
        }
    }
    let amplitude = c1 / 2.0;
    let root_product = constants.sqrt_eta_product();
    let minus_factor = ((1.0 - constants.eta_i1 / s) * (1.0 - constants.eta_i2 / s)).sqrt();
    let plus_factor = ((1.0 - s / constants.eta_o1) * (1.0 - s / constants.eta_o2)).sqrt();
    let v_minus = 2.0 * amplitude / minus_factor;
    let v_plus = amplitude * root_product * plus_factor;
    let kernel = root_product * minus_factor * plus_factor / 2.0;
    Ok(KernelTransforms {
        kernel,
        v_minus,
        v_plus,
        c2: root_product * c1,
    })
}

fn outgoing_s(beta: f64, k: Wavenumber) -> Result<Complex> {
    Ok(solve_dispersion(Direction::from_beta(beta)?, k)?.s)
}

/// `1 - 1/(s_a s_b)`: the first-order conversion factor entering the
/// half-plane and strip combinations.
fn hat_factor(s_a: Complex, s_b: Complex) -> Complex {
    1.0 - 1.0 / (s_a * s_b)
}

const POLE_TOL: f64 = 1e-10;

fn pole_guard(den: Complex, beta: f64, beta_in: f64) -> Result<Complex> {
    if den.norm() < POLE_TOL {
        return Err(Error::Domain(format!(
            "geometrical-optics pole flagged at observation {beta}, incidence {beta_in}"
        )));
    }
    Ok(den)
}

/// Half-plane embedding: the directivity for any incidence from one
/// auxiliary incidence `beta1`, through the first-order combination
/// `S(b, b_in) = Sh(b, b1) Sh(b_in, b1) / ((1 - 1/(s_b s_in)) Sh(b1, b1))`
/// with `Sh(a, b) = (1 - 1/(s_a s_b)) S(a, b)`.
pub fn halfplane_embedding(
    s_aux: impl Fn(f64) -> Result<Complex>,
    beta: f64,
    beta_in: f64,
    beta1: f64,
    k: Wavenumber,
) -> Result<Complex> {
    let s_b = outgoing_s(beta, k)?;
    let s_in = outgoing_s(beta_in, k)?;
    let s_1 = outgoing_s(beta1, k)?;
    let hat_obs = hat_factor(s_b, s_1) * s_aux(beta)?;
    let hat_inc = hat_factor(s_in, s_1) * s_aux(beta_in)?;
    let hat_11 = hat_factor(s_1, s_1) * s_aux(beta1)?;
    if hat_11.norm() < 1e-14 {
        return Err(Error::Domain(format!(
            "degenerate auxiliary incidence beta1 = {beta1}: Sh(beta1, beta1) vanishes"
        )));
    }
    let den = pole_guard(hat_factor(s_b, s_in), beta, beta_in)?;
    Ok(hat_obs * hat_inc / (den * hat_11))
}

/// Strip embedding with explicit tables for both auxiliary incidences
/// `beta1` and `beta2 = -beta1`.
pub fn strip_embedding(
    s_aux1: impl Fn(f64) -> Result<Complex>,
    s_aux2: impl Fn(f64) -> Result<Complex>,
    beta: f64,
    beta_in: f64,
    beta1: f64,
    k: Wavenumber,
) -> Result<Complex> {
    let beta2 = -beta1;
    let s_b = outgoing_s(beta, k)?;
    let s_in = outgoing_s(beta_in, k)?;
    let s_1 = outgoing_s(beta1, k)?;
    let s_2 = outgoing_s(beta2, k)?;

    let hat1 = |b: f64, s: Complex| -> Result<Complex> { Ok(hat_factor(s, s_1) * s_aux1(b)?) };
    let hat2 = |b: f64, s: Complex| -> Result<Complex> { Ok(hat_factor(s, s_2) * s_aux2(b)?) };

    let hat_11 = hat1(beta1, s_1)?;
    let hat_22 = hat2(beta2, s_2)?;
    if hat_11.norm() < 1e-14 || hat_22.norm() < 1e-14 {
        return Err(Error::Domain(format!(
            "degenerate auxiliary incidence beta1 = {beta1} for the strip combination"
        )));
    }
    let den = pole_guard(hat_factor(s_b, s_in), beta, beta_in)?;
    let term1 = hat1(beta_in, s_in)? / hat_11 * hat1(beta, s_b)?;
    let term2 = hat2(beta_in, s_in)? / hat_22 * hat2(beta, s_b)?;
    Ok((term1 + term2) / den)
}

/// Strip embedding using the mirror relation `S(b, -beta1) = S(-b, beta1)`
/// in place of the second auxiliary table.
pub fn strip_embedding_mirror(
    s_aux1: impl Fn(f64) -> Result<Complex> + Copy,
    beta: f64,
    beta_in: f64,
    beta1: f64,
    k: Wavenumber,
) -> Result<Complex> {
    strip_embedding(s_aux1, |b| s_aux1(-b), beta, beta_in, beta1, k)
}

/// Right-angled wedge embedding: the second-order two-term combination
/// over auxiliary incidences `beta1` and `beta2 = 1/beta1`, divided by
/// the modified-directivity factor.
pub fn wedge_embedding(
    s_aux1: impl Fn(f64) -> Result<Complex>,
    s_aux2: impl Fn(f64) -> Result<Complex>,
    beta: f64,
    beta_in: f64,
    beta1: f64,
    k: Wavenumber,
) -> Result<Complex> {
    let beta2 = 1.0 / beta1;
    let smod1 = |b: f64| -> Result<Complex> {
        Ok(directivity_factor(b, beta1, k)? * s_aux1(b)?)
    };
    let smod2 = |b: f64| -> Result<Complex> {
        Ok(directivity_factor(b, beta2, k)? * s_aux2(b)?)
    };
    let smod_12 = directivity_factor(beta1, beta2, k)? * s_aux2(beta1)?;
    if smod_12.norm() < 1e-14 {
        return Err(Error::Domain(format!(
            "degenerate wedge basis beta1 = {beta1}: St(beta1, beta2) vanishes"
        )));
    }
    let factor = pole_guard(directivity_factor(beta, beta_in, k)?, beta, beta_in)?;
    let numerator = smod2(beta)? * smod1(beta_in)? - smod1(beta)? * smod2(beta_in)?;
    Ok(numerator / (factor * smod_12))
}

/// Wedge embedding using the diagonal relation `S(b, 1/beta1) = S(1/b, beta1)`
/// in place of the second auxiliary table.
pub fn wedge_embedding_diagonal(
    s_aux1: impl Fn(f64) -> Result<Complex> + Copy,
    beta: f64,
    beta_in: f64,
    beta1: f64,
    k: Wavenumber,
) -> Result<Complex> {
    wedge_embedding(s_aux1, |b| s_aux1(1.0 / b), beta, beta_in, beta1, k)
}

/// Strong embedding through the edge Green's function directivity:
/// `S(b, b_in) = -sqrt(eta_o1 eta_o2) S_e(b_in) S_e(b) / (1 - 1/(s_b s_in))`
/// where `S_e` is the directivity of the unit-source edge Green's
/// function.
///
/// The constant is pinned by truncated lattice experiments: the vertex
/// stencil of the total plane-wave field satisfies
/// `Delta[u](0,0) * v(0,0) = -S_e(b_in)` with no additional factor, and
/// the first-order operator's far field ties `Sh(b, b_in) =
/// Delta[u](0,0) * S_e(b)`; combining the two yields the formula above.
pub fn edge_strong_embedding(
    s_edge: impl Fn(f64) -> Result<Complex>,
    beta: f64,
    beta_in: f64,
    k: Wavenumber,
) -> Result<Complex> {
    let s_b = outgoing_s(beta, k)?;
    let s_in = outgoing_s(beta_in, k)?;
    let constants = halfplane_constants(k)?;
    let den = pole_guard(hat_factor(s_b, s_in), beta, beta_in)?;
    Ok(-constants.sqrt_eta_product() * s_edge(beta_in)? * s_edge(beta)? / den)
}
