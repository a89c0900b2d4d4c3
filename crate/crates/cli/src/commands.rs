//! Subcommand implementations: each consumes a scenario and emits CSV
//! (and optionally SVG) artifacts into the output directory.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lattice_diffraction::bae::{assemble_and_solve_with, oracle_grid_solve, ScatteringSolution};
use lattice_diffraction::canonical;
use lattice_diffraction::embedding::{
    self, default_probe_betas, EmbeddingBasis, RecoveryFlag, DEFAULT_RANK_THRESHOLD,
    FACTOR_ZERO_TOL,
};
use lattice_diffraction::geometry::{classify_domain_boundary, enumerate_features, normal_derivative, Obstacle};
use lattice_diffraction::green::GreenTable;
use lattice_diffraction::lattice::{
    self, plane_wave, solve_dispersion, Direction, ExponentSign, OperatorOrder, Site,
};
use lattice_diffraction::Complex;

use crate::output::{num, svg_plot, OutDir};
use crate::scenario::Scenario;

pub struct Flags {
    pub svg: bool,
    pub threshold: Option<f64>,
}

fn incidence_roots(beta: f64, k: lattice_diffraction::Wavenumber) -> Result<lattice::WaveRoots> {
    Ok(solve_dispersion(Direction::from_beta(beta)?, k)?)
}

fn solve_once(
    scenario: &Scenario,
    scenario_path: &Path,
    beta_in: f64,
) -> Result<(ScatteringSolution, Arc<GreenTable>)> {
    let k = scenario.wavenumber()?;
    let obstacle = scenario.obstacle(scenario_path)?;
    let green = Arc::new(GreenTable::new(k));
    let solution = assemble_and_solve_with(&obstacle, &incidence_roots(beta_in, k)?, &green)?;
    Ok((solution, green))
}

pub fn green(scenario: &Scenario, _path: &Path, out: &OutDir) -> Result<()> {
    let k = scenario.wavenumber()?;
    let extent = scenario.green_extent.unwrap_or(10).max(0);
    let table = GreenTable::new(k);
    let mut csv = String::from("m,n,re,im\n");
    for m in 0..=extent {
        for n in m..=extent {
            let g = table.get(Site::new(m, n))?;
            let _ = writeln!(csv, "{m},{n},{},{}", num(g.re), num(g.im));
        }
    }
    out.write("green.csv", &csv)?;
    println!("green table: {} canonical sites", (extent + 1) * (extent + 2) / 2);
    Ok(())
}

pub fn solve(scenario: &Scenario, path: &Path, out: &OutDir) -> Result<()> {
    let beta_in = scenario.incidences()?[0];
    let (solution, _) = solve_once(scenario, path, beta_in)?;
    let mut csv = String::from("m,n,re,im\n");
    for (node, density) in solution.boundary().iter().zip(solution.densities().iter()) {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            node.site.m,
            node.site.n,
            num(density.re),
            num(density.im)
        );
    }
    out.write("densities.csv", &csv)?;
    let summary = format!("condition_estimate={}\n", num(solution.condition_estimate));
    out.write("summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn field(scenario: &Scenario, path: &Path, out: &OutDir) -> Result<()> {
    let beta_in = scenario.incidences()?[0];
    let (solution, _) = solve_once(scenario, path, beta_in)?;
    let (lo, hi) = solution.obstacle().bounding_box();
    let [m0, m1, n0, n1] = scenario.field_window.unwrap_or([
        lo.m - 10,
        hi.m + 10,
        lo.n - 10,
        hi.n + 10,
    ]);
    let mut csv = String::from("m,n,usc_re,usc_im,total_re,total_im\n");
    for n in n0..=n1 {
        for m in m0..=m1 {
            let site = Site::new(m, n);
            let Ok(usc) = solution.reconstruct_field(site) else {
                continue; // obstacle interior
            };
            let total = usc + solution.incident_field(site);
            let _ = writeln!(
                csv,
                "{m},{n},{},{},{},{}",
                num(usc.re),
                num(usc.im),
                num(total.re),
                num(total.im)
            );
        }
    }
    out.write("field.csv", &csv)?;
    Ok(())
}

/// Writes the directivity table schema:
/// `beta,obs_m,obs_n,S_re,S_im,Smod_re,Smod_im,flag`.
fn directivity_csv(
    observations: &[Direction],
    s: &[Complex],
    smod: &[Complex],
    flags: &[RecoveryFlag],
) -> String {
    let mut csv = String::from("beta,obs_m,obs_n,S_re,S_im,Smod_re,Smod_im,flag\n");
    for (i, dir) in observations.iter().enumerate() {
        let flag = match flags[i] {
            RecoveryFlag::Ok => "ok",
            RecoveryFlag::FactorZero => "factor_zero",
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{flag}",
            num(dir.beta()),
            dir.m_hat(),
            dir.n_hat(),
            num(s[i].re),
            num(s[i].im),
            num(smod[i].re),
            num(smod[i].im),
        );
    }
    csv
}

fn plot_directivity(
    out: &OutDir,
    stem: &str,
    observations: &[Direction],
    s: &[Complex],
    smod: &[Complex],
) -> Result<()> {
    let theta: Vec<f64> = observations
        .iter()
        .map(|d| (d.n_hat() as f64).atan2(d.m_hat() as f64))
        .collect();
    let abs_s: Vec<f64> = s.iter().map(|v| v.norm()).collect();
    let abs_smod: Vec<f64> = smod.iter().map(|v| v.norm()).collect();
    let svg = svg_plot(
        &format!("{stem}: directivity magnitude over observation angle"),
        &theta,
        &[
            ("|S|", &abs_s, "steelblue"),
            ("|S~|", &abs_smod, "firebrick"),
        ],
    );
    out.write(&format!("{stem}.svg"), &svg)?;
    Ok(())
}

fn direct_directivities(
    solution: &ScatteringSolution,
    beta_in: f64,
    observations: &[Direction],
) -> Result<(Vec<Complex>, Vec<Complex>, Vec<RecoveryFlag>)> {
    let k = solution.wavenumber();
    let mut s = Vec::with_capacity(observations.len());
    let mut smod = Vec::with_capacity(observations.len());
    let mut flags = Vec::with_capacity(observations.len());
    for &dir in observations {
        let value = solution.directivity(dir)?;
        let factor = embedding::directivity_factor(dir.beta(), beta_in, k)?;
        s.push(value);
        smod.push(factor * value);
        flags.push(if factor.norm() < FACTOR_ZERO_TOL {
            RecoveryFlag::FactorZero
        } else {
            RecoveryFlag::Ok
        });
    }
    Ok((s, smod, flags))
}

pub fn directivity(scenario: &Scenario, path: &Path, out: &OutDir, flags: &Flags) -> Result<()> {
    let beta_in = scenario.incidences()?[0];
    let observations = scenario.observation_directions()?;
    let (solution, _) = solve_once(scenario, path, beta_in)?;
    let (s, smod, rec) = direct_directivities(&solution, beta_in, &observations)?;
    out.write("directivity.csv", &directivity_csv(&observations, &s, &smod, &rec))?;
    if flags.svg {
        plot_directivity(out, "directivity", &observations, &s, &smod)?;
    }
    Ok(())
}

fn build_basis_for(
    scenario: &Scenario,
    obstacle: &Obstacle,
    k: lattice_diffraction::Wavenumber,
) -> Result<EmbeddingBasis> {
    let count_n = enumerate_features(obstacle).count_n;
    let betas = match &scenario.basis {
        Some(list) => {
            if list.len() != count_n {
                eprintln!(
                    "warning: basis size {} overrides the obstacle's feature count {count_n}",
                    list.len()
                );
            }
            list.clone()
        }
        None => default_probe_betas(count_n),
    };
    Ok(embedding::build_basis_unchecked(obstacle, &betas, k)?)
}

pub fn embed(scenario: &Scenario, path: &Path, out: &OutDir, flags: &Flags) -> Result<()> {
    let k = scenario.wavenumber()?;
    let beta_in = scenario.incidences()?[0];
    let observations = scenario.observation_directions()?;
    let obstacle = scenario.obstacle(path)?;

    let basis = build_basis_for(scenario, &obstacle, k)?;
    let coefficients = embedding::solve_coefficients(&basis, beta_in)?;
    let aux = embedding::auxiliary_table(&basis, &observations)?;
    let embedded = embedding::embed_directivity(&basis, &coefficients, beta_in, &observations, &aux)?;

    let direct = assemble_and_solve_with(
        &obstacle,
        &incidence_roots(beta_in, k)?,
        basis.solutions()[0].green_table(),
    )?;
    let (s_direct, smod_direct, rec_direct) =
        direct_directivities(&direct, beta_in, &observations)?;

    out.write(
        "direct.csv",
        &directivity_csv(&observations, &s_direct, &smod_direct, &rec_direct),
    )?;
    out.write(
        "embedded.csv",
        &directivity_csv(&observations, &embedded.s, &embedded.s_modified, &embedded.flags),
    )?;

    let scale = s_direct.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let max_dev = observations
        .iter()
        .enumerate()
        .filter(|(i, _)| embedded.flags[*i] == RecoveryFlag::Ok)
        .map(|(i, _)| (embedded.s[i] - s_direct[i]).norm())
        .fold(0.0f64, f64::max);
    let smod_sv = embedding::singular_values(basis.smod())?;
    let cond = smod_sv[0] / smod_sv[smod_sv.len() - 1].max(1e-300);
    let summary = format!(
        "max_relative_deviation={}\nbasis_condition={}\n",
        num(max_dev / scale.max(1e-300)),
        num(cond)
    );
    out.write("summary.txt", &summary)?;
    print!("{summary}");

    if flags.svg {
        plot_directivity(out, "direct", &observations, &s_direct, &smod_direct)?;
        plot_directivity(
            out,
            "embedded",
            &observations,
            &embedded.s,
            &embedded.s_modified,
        )?;
    }
    Ok(())
}

pub fn rank(scenario: &Scenario, path: &Path, out: &OutDir, flags: &Flags) -> Result<()> {
    let k = scenario.wavenumber()?;
    let obstacle = scenario.obstacle(path)?;
    let count_n = enumerate_features(&obstacle).count_n;
    let max_probe = scenario.max_probe.unwrap_or(count_n + 4).max(count_n);
    let threshold = flags
        .threshold
        .or(scenario.threshold)
        .unwrap_or(DEFAULT_RANK_THRESHOLD);

    let green = Arc::new(GreenTable::new(k));
    let mut csv = String::from("M,rank,sigma_1..sigma_M\n");
    let mut last_rank = 0usize;
    for m in count_n..=max_probe {
        let betas = default_probe_betas(m);
        let matrix = embedding::probe_matrix_with(&obstacle, &betas, &green)?;
        let sv = embedding::singular_values(&matrix)?;
        last_rank = embedding::rank_probe(&matrix, threshold)?;
        let sigmas: Vec<String> = sv.iter().map(|&v| num(v)).collect();
        let _ = writeln!(csv, "{m},{last_rank},{}", sigmas.join(","));
    }
    out.write("rank.csv", &csv)?;
    println!("rank={last_rank}");
    Ok(())
}

pub fn canonical_cmd(scenario: &Scenario, path: &Path, out: &OutDir) -> Result<()> {
    let k = scenario.wavenumber()?;
    let cfg = scenario
        .canonical
        .as_ref()
        .context("scenario needs a canonical section")?;
    match cfg.formula.as_str() {
        "constants" => {
            let c = canonical::halfplane_constants(k)?;
            let mut csv = String::from("name,re,im\n");
            for (name, v) in [
                ("d1", c.d1),
                ("d2", c.d2),
                ("eta_o1", c.eta_o1),
                ("eta_i1", c.eta_i1),
                ("eta_o2", c.eta_o2),
                ("eta_i2", c.eta_i2),
                ("sqrt_eta_product", c.sqrt_eta_product()),
            ] {
                let _ = writeln!(csv, "{name},{},{}", num(v.re), num(v.im));
            }
            out.write("constants.csv", &csv)?;
        }
        "kernel" => {
            let samples = cfg.samples.unwrap_or(64);
            let c1 = cfg
                .c1
                .map(|[re, im]| Complex::new(re, im))
                .unwrap_or(Complex::new(1.0, 0.0));
            let mut csv = String::from(
                "theta,kernel_re,kernel_im,vminus_re,vminus_im,vplus_re,vplus_im\n",
            );
            let mut c2 = Complex::new(0.0, 0.0);
            for j in 0..samples {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
                let s = Complex::from_polar(1.0, theta);
                let t = canonical::kernel_and_transforms(s, c1, k)?;
                c2 = t.c2;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    num(theta),
                    num(t.kernel.re),
                    num(t.kernel.im),
                    num(t.v_minus.re),
                    num(t.v_minus.im),
                    num(t.v_plus.re),
                    num(t.v_plus.im)
                );
            }
            out.write("kernel.csv", &csv)?;
            out.write("summary.txt", &format!("c2={},{}\n", num(c2.re), num(c2.im)))?;
        }
        formula @ ("halfplane" | "strip" | "wedge" | "edge") => {
            let beta1 = cfg
                .beta1
                .context("canonical combinations need beta1")
                .ok()
                .unwrap_or(f64::NAN);
            if formula != "edge" && !beta1.is_finite() {
                bail!("canonical formula {formula} needs beta1");
            }
            let aux_path = cfg
                .aux_path
                .as_ref()
                .context("canonical combinations need aux_path")?;
            let aux = scenario.canonical_aux(path, aux_path)?;
            let observations = scenario.observation_directions()?;
            let incidences = scenario.incidences()?;
            let mut csv = String::from("beta,beta_in,S_re,S_im,flag\n");
            for &beta_in in &incidences {
                for dir in &observations {
                    let beta = dir.beta();
                    let result = match formula {
                        "halfplane" => canonical::halfplane_embedding(aux, beta, beta_in, beta1, k),
                        "edge" => canonical::edge_strong_embedding(aux, beta, beta_in, k),
                        "strip" => match &cfg.aux2_path {
                            Some(p2) => {
                                let aux2 = scenario.canonical_aux(path, p2)?;
                                canonical::strip_embedding(aux, aux2, beta, beta_in, beta1, k)
                            }
                            None => canonical::strip_embedding_mirror(aux, beta, beta_in, beta1, k),
                        },
                        "wedge" => match &cfg.aux2_path {
                            Some(p2) => {
                                let aux2 = scenario.canonical_aux(path, p2)?;
                                canonical::wedge_embedding(aux, aux2, beta, beta_in, beta1, k)
                            }
                            None => {
                                canonical::wedge_embedding_diagonal(aux, beta, beta_in, beta1, k)
                            }
                        },
                        _ => unreachable!(),
                    };
                    match result {
                        Ok(v) => {
                            let _ = writeln!(
                                csv,
                                "{},{},{},{},ok",
                                num(beta),
                                num(beta_in),
                                num(v.re),
                                num(v.im)
                            );
                        }
                        Err(lattice_diffraction::Error::Domain(msg)) if msg.contains("pole") => {
                            let _ = writeln!(
                                csv,
                                "{},{},{},{},pole",
                                num(beta),
                                num(beta_in),
                                num(0.0),
                                num(0.0)
                            );
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            out.write("canonical.csv", &csv)?;
        }
        other => bail!("unknown canonical formula {other:?}"),
    }
    Ok(())
}

/// Built-in validation suite: fast spot checks of the solver chain.
/// Returns false (exit code 2) when any check fails.
pub fn validate(scenario: &Scenario, out: &OutDir) -> Result<bool> {
    let k = scenario.wavenumber()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut report = String::new();
    let mut all_ok = true;
    let mut check = |name: &str, outcome: std::result::Result<(), String>| {
        match outcome {
            Ok(()) => {
                let _ = writeln!(report, "PASS {name}");
                println!("PASS {name}");
            }
            Err(detail) => {
                let _ = writeln!(report, "FAIL {name}: {detail}");
                println!("FAIL {name}: {detail}");
                all_ok = false;
            }
        }
    };

    // Point-source property of the Green table.
    let table = GreenTable::new(k);
    check("green_point_source", (|| {
        let field = |p: Site| table.get(p).ok();
        let mut worst = 0.0f64;
        for m in -8..=8i64 {
            for n in -8..=8i64 {
                let site = Site::new(m, n);
                let r = lattice::helmholtz_residual(field, site, k).map_err(|e| e.to_string())?;
                let expected = if m == 0 && n == 0 { 1.0 } else { 0.0 };
                worst = worst.max((r - expected).norm());
            }
        }
        if worst < 1e-10 {
            Ok(())
        } else {
            Err(format!("worst residual {worst:.3e}"))
        }
    })());

    // Green's identity on an annulus containing all boundary cases.
    check("boundary_identity_annulus", (|| {
        let mut domain = std::collections::BTreeSet::new();
        for m in -7..=7i64 {
            for n in -7..=7i64 {
                if m.abs().max(n.abs()) > 2 {
                    domain.insert(Site::new(m, n));
                }
            }
        }
        let boundary = classify_domain_boundary(&domain, k);
        let u = |p: Site| table.get(p - Site::new(0, 0)).ok();
        let w = |p: Site| table.get(p - Site::new(13, 4)).ok();
        let mut sum = Complex::new(0.0, 0.0);
        let mut scale = 0.0f64;
        for node in &boundary {
            let du = normal_derivative(u, node).map_err(|e| e.to_string())?;
            let dw = normal_derivative(w, node).map_err(|e| e.to_string())?;
            let term = du * w(node.site).unwrap() - dw * u(node.site).unwrap();
            sum += term;
            scale += term.norm();
        }
        if sum.norm() <= 1e-10 * scale {
            Ok(())
        } else {
            Err(format!("identity sum {:.3e} vs scale {scale:.3e}", sum.norm()))
        }
    })());

    // Incident-wave annihilation by both embedding operators.
    check("operators_annihilate_incident", (|| {
        let inc = incidence_roots(1.0, k).map_err(|e| e.to_string())?;
        let field = |p: Site| Some(plane_wave(&inc, p, ExponentSign::Minus));
        let mut worst = 0.0f64;
        for site in [Site::new(0, 0), Site::new(5, -3), Site::new(-7, 2)] {
            let scale = field(site).unwrap().norm();
            for order in [OperatorOrder::First, OperatorOrder::Second] {
                let v = lattice::apply_embedding_operator(field, site, inc.s, order)
                    .map_err(|e| e.to_string())?;
                worst = worst.max(v.norm() / scale);
            }
        }
        if worst <= 1e-14 {
            Ok(())
        } else {
            Err(format!("worst relative value {worst:.3e}"))
        }
    })());

    // Monopole closed form.
    check("monopole_directivity", (|| {
        let obstacle = Obstacle::new(vec![Site::new(0, 0)]).map_err(|e| e.to_string())?;
        let green = Arc::new(GreenTable::new(k));
        let inc = incidence_roots(0.8, k).map_err(|e| e.to_string())?;
        let solution =
            assemble_and_solve_with(&obstacle, &inc, &green).map_err(|e| e.to_string())?;
        let expected = -Complex::new(1.0, 0.0) / green.get(Site::new(0, 0)).unwrap();
        let mut worst = 0.0f64;
        for i in 0..12 {
            let theta = std::f64::consts::PI * (i as f64 + 0.5) / 12.0;
            let dir = Direction::from_beta(1.0 / theta.tan()).map_err(|e| e.to_string())?;
            let s = solution.directivity(dir).map_err(|e| e.to_string())?;
            worst = worst.max((s - expected).norm());
        }
        if worst <= 1e-10 * expected.norm() {
            Ok(())
        } else {
            Err(format!("worst deviation {worst:.3e}"))
        }
    })());

    // Reciprocity on a seeded random pair set.
    check("directivity_reciprocity", (|| {
        let obstacle = Obstacle::filled_rect(0, 6, 0, 6).map_err(|e| e.to_string())?;
        let green = Arc::new(GreenTable::new(k));
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for _ in 0..3 {
            let b1 = rng.gen_range(0.2..3.0);
            let b2 = rng.gen_range(0.2..3.0);
            let s1 = assemble_and_solve_with(&obstacle, &incidence_roots(b1, k).unwrap(), &green)
                .map_err(|e| e.to_string())?;
            let s2 = assemble_and_solve_with(&obstacle, &incidence_roots(b2, k).unwrap(), &green)
                .map_err(|e| e.to_string())?;
            let a = s2
                .directivity(Direction::from_beta(b1).unwrap())
                .map_err(|e| e.to_string())?;
            let b = s1
                .directivity(Direction::from_beta(b2).unwrap())
                .map_err(|e| e.to_string())?;
            worst = worst.max((a - b).norm());
            scale = scale.max(a.norm());
        }
        if worst <= 1e-8 * scale {
            Ok(())
        } else {
            Err(format!("worst deviation {worst:.3e} vs scale {scale:.3e}"))
        }
    })());

    // Embedding round trip on a small square.
    check("embedding_roundtrip", (|| {
        let obstacle = Obstacle::filled_rect(0, 4, 0, 4).map_err(|e| e.to_string())?;
        let basis = embedding::build_basis(&obstacle, &default_probe_betas(8), k)
            .map_err(|e| e.to_string())?;
        let beta_in = 1.37;
        let coeffs = embedding::solve_coefficients(&basis, beta_in).map_err(|e| e.to_string())?;
        let observations: Vec<Direction> = (0..24)
            .map(|i| {
                let theta = std::f64::consts::PI * (i as f64 + 0.5) / 24.0;
                Direction::from_beta(1.0 / theta.tan()).unwrap()
            })
            .collect();
        let aux =
            embedding::auxiliary_table(&basis, &observations).map_err(|e| e.to_string())?;
        let embedded =
            embedding::embed_directivity(&basis, &coeffs, beta_in, &observations, &aux)
                .map_err(|e| e.to_string())?;
        let direct = assemble_and_solve_with(
            &obstacle,
            &incidence_roots(beta_in, k).unwrap(),
            basis.solutions()[0].green_table(),
        )
        .map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (i, &dir) in observations.iter().enumerate() {
            let s = direct.directivity(dir).map_err(|e| e.to_string())?;
            scale = scale.max(s.norm());
            if embedded.flags[i] == RecoveryFlag::Ok {
                worst = worst.max((embedded.s[i] - s).norm());
            }
        }
        if worst <= 1e-6 * scale {
            Ok(())
        } else {
            Err(format!("worst deviation {worst:.3e} vs scale {scale:.3e}"))
        }
    })());

    // Grid oracle against the boundary solve on a tiny obstacle, only
    // when absorption is strong enough to keep the box small.
    if k.value().im >= 0.05 {
        check("grid_oracle_agreement", (|| {
            let obstacle = Obstacle::filled_rect(0, 1, 0, 1).map_err(|e| e.to_string())?;
            let inc = incidence_roots(1.0, k).map_err(|e| e.to_string())?;
            let green = Arc::new(GreenTable::new(k));
            let solution =
                assemble_and_solve_with(&obstacle, &inc, &green).map_err(|e| e.to_string())?;
            let radius = (5.0 / k.value().im).ceil() as i64 + 45;
            let oracle =
                oracle_grid_solve(&obstacle, &inc, k, radius).map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for m in -6..=8i64 {
                for n in -6..=8i64 {
                    let site = Site::new(m, n);
                    if solution.obstacle().contains(site) {
                        continue;
                    }
                    let a = solution.reconstruct_field(site).map_err(|e| e.to_string())?;
                    let b = oracle.get(site).unwrap();
                    worst = worst.max((a - b).norm());
                    scale = scale.max(b.norm());
                }
            }
            if worst <= 1e-6 * scale {
                Ok(())
            } else {
                Err(format!("worst deviation {worst:.3e} vs scale {scale:.3e}"))
            }
        })());
    }

    out.write("validate.txt", &report)?;
    Ok(all_ok)
}

/// Maps a library error to the appropriate process exit code:
/// computation failures are validation-grade (2), everything else is an
/// input problem (1).
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    use lattice_diffraction::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical(_) | Error::Diagnostic(_)) => 2,
        _ => 1,
    }
}
