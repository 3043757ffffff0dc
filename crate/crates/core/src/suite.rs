//! Verification batteries.
//!
//! Each battery appends timed cases to a [`Recorder`]; the `run_*` drivers
//! assemble them into a [`SuiteReport`] after the calibration cases. All
//! randomness derives from the run seed through counted substreams.

use std::f64::consts::PI;

use crate::annulus::{
    boundary_check, lagrangian_residual, mult_h, mult_v, multiplicativity_residual, omega_annulus, sample_composable,
    shared_generators, tau_residual, validate_word_table, AnnulusRep, Bisection, BoundaryLabel, Direction, TangentRep,
    C_Z,
};
use crate::chart::{
    commuting_deform, dc_field, fd_d, verify_gk_chart, ChartField, CommutingBase, DeformOrder, FdConfig, Scheme, C0,
};
use crate::hopf::{
    action_law_residual, generating_check, graph_lagrangian_check, grid_points, hitchin_sigma, path_integral,
    potential_f, potential_grid, psi_graph_consistency, sigma_from_pairing, softplus_integral, Action, Affine, GridRow,
    SurfPoint,
};
use crate::lie::{
    cartan_form_check, dressing, exp_chart, factorize, im_form_check, invariant_gk_at, pi_z, GElem, KElem, Side,
};
use crate::point::{
    gauge_cycle_check, gk_axioms_check, gualtieri_map, hitchin_difference, manin_report, manin_triples,
    poisson_tensors, random_point, reconstruct_metric, BihermitianPoint,
};
use crate::report::{PinnedConstants, Recorder, SuiteReport};
use crate::rng::{normal_c, stream, Stream};
use crate::{Error, Result};

/// Relative drift allowed for pinned constants.
pub const CONSTANT_DRIFT: f64 = 1e-4;

/// Substream offsets keeping batteries independent under one run seed.
const POINT_STREAM: u64 = 0;
const GROUP_STREAM: u64 = 10_000;
const DRESSING_STREAM: u64 = 20_000;
const MODULI_STREAM: u64 = 30_000;
const HOPF_STREAM: u64 = 40_000;
const DEFORM_STREAM: u64 = 50_000;

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(what.to_string()))
    }
}

fn max_abs(m: &crate::RMat) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Measures `c0` from `dd^c|z|² = 2·c0 dx∧dy` and records its drift from [`C0`].
pub fn calibrate_c0(rec: &mut Recorder) -> f64 {
    let mut measured = f64::NAN;
    rec.fixed("calibration.c0", CONSTANT_DRIFT, || {
        let f = ChartField::scalar(2, |x| x[0] * x[0] + x[1] * x[1]);
        let j = crate::chart::constant_matrix(crate::point::standard_j(1));
        let dcf = dc_field(&f, &j, &FdConfig::default());
        let vals = [[0.0, 0.0], [1.3, -0.4]]
            .iter()
            .map(|x| fd_d(&dcf, x, &FdConfig::default()).map(|d| 0.5 * d.get(&[0, 1])))
            .collect::<Result<Vec<_>>>()?;
        measured = vals[0];
        Ok(max_of(vals.iter().map(|v| (v - C0).abs() / C0)))
    });
    measured
}

/// Measures the IM-form constant of `Ω_Z` at seeded points of `K` and
/// records its drift from [`C_Z`].
pub fn calibrate_c_z(rec: &mut Recorder, seed: u64, samples: usize) -> f64 {
    let mut first = f64::NAN;
    let mut fit = 0.0;
    rec.fixed("calibration.c_z", CONSTANT_DRIFT, || {
        let mut drift: f64 = 0.0;
        for i in 0..samples.max(1) {
            let k = KElem::random(&mut stream(seed, GROUP_STREAM + 900 + i as u64));
            let (cz, resid) = im_form_check(&k)?;
            if i == 0 {
                first = cz;
            }
            fit = f64::max(fit, resid);
            drift = drift.max((cz - C_Z).abs() / C_Z);
        }
        Ok(drift)
    });
    rec.below("calibration.c_z.fit", 1e-7, || Ok(fit));
    first
}

/// `J²`, commutation, orthogonality and positivity at seeded points.
pub fn point_axioms(rec: &mut Recorder, seed: u64, seeds: usize, n: usize) {
    for i in 0..seeds {
        let b = random_point(n, &mut stream(seed, POINT_STREAM + i as u64));
        let mut min_eig = f64::NAN;
        rec.below(format!("point.n{n}.{i}.axioms"), 1e-10, || {
            let r = gk_axioms_check(&gualtieri_map(&b)?);
            min_eig = r.metric_min_eig;
            Ok(max_of([r.square, r.commutator, r.orthogonality]))
        });
        rec.above(format!("point.n{n}.{i}.metric_positive"), 0.0, || Ok(min_eig));
    }
}

/// Manin-triple dimensions, isotropy, matched pair and gauge cycle.
pub fn point_triples(rec: &mut Recorder, seed: u64, seeds: usize, n: usize) {
    for i in 0..seeds {
        let b = random_point(n, &mut stream(seed, POINT_STREAM + i as u64));
        let mut matched = f64::NAN;
        rec.below(format!("point.n{n}.{i}.triples.isotropy"), 1e-10, || {
            let r = manin_report(&b, &manin_triples(&b)?)?;
            require(r.dims_ok, "Manin triple dimensions")?;
            require(r.direct_sum_ok, "Manin triple direct sum")?;
            matched = r.matched_pair;
            Ok(r.isotropy)
        });
        rec.below(format!("point.n{n}.{i}.triples.matched_pair"), 1e-9, || Ok(matched));
        rec.below(format!("point.n{n}.{i}.cycle"), 1e-9, || {
            let (r1, r2) = gauge_cycle_check(&b)?;
            Ok(r1.max(r2))
        });
    }
}

/// `−π_A g π_B = −¼[I₊,I₋]g⁻¹` and the real part of `𝒜₊ − ℬ₊`.
pub fn point_hitchin(rec: &mut Recorder, seed: u64, seeds: usize, n: usize) {
    for i in 0..seeds {
        let b = random_point(n, &mut stream(seed, POINT_STREAM + i as u64));
        rec.below(format!("point.n{n}.{i}.hitchin.identity"), 1e-12, || {
            Ok(poisson_tensors(&b).hitchin_consistency(&b))
        });
        rec.below(format!("point.n{n}.{i}.hitchin.real_part"), 1e-9, || {
            Ok(hitchin_difference(&b)?.real_part_residual)
        });
    }
}

/// Relative metric error of the reconstruction `(π_A, π_B, I±) → g`.
pub fn roundtrip_error(b: &BihermitianPoint) -> Result<(f64, f64)> {
    let pt = poisson_tensors(b);
    let r = reconstruct_metric(&pt.pi_a, &pt.pi_b, b.i_plus(), b.i_minus())?;
    let scale = max_abs(b.g()).max(1.0);
    let metric = max_abs(&(&r.g - b.g())) / scale;
    let compat = max_of([r.compat_mixed, r.compat_transpose]) / scale;
    Ok((metric, compat))
}

/// Reconstruction roundtrip and compatibility equations.
pub fn point_roundtrip(rec: &mut Recorder, seed: u64, seeds: usize, n: usize) {
    for i in 0..seeds {
        let b = random_point(n, &mut stream(seed, POINT_STREAM + i as u64));
        let mut compat = f64::NAN;
        rec.below(format!("point.n{n}.{i}.roundtrip.metric"), 1e-12, || {
            let (m, c) = roundtrip_error(&b)?;
            compat = c;
            Ok(m)
        });
        rec.below(format!("point.n{n}.{i}.roundtrip.compat"), 1e-10, || Ok(compat));
    }
}

fn constants(c0: f64, cartan_c: Option<f64>, c_z: f64) -> PinnedConstants {
    PinnedConstants { c0, cartan_c, c_z }
}

/// Pointwise battery at dimension `n` over `seeds` seeded points.
pub fn run_point(seed: u64, seeds: usize, n: usize, tol: Option<f64>) -> Result<SuiteReport> {
    require(seeds >= 1, "--seeds must be at least 1")?;
    require((1..=4).contains(&n), "--n must lie in 1..=4")?;
    validate_tol(tol)?;
    let mut rec = Recorder::new(tol);
    let c0 = calibrate_c0(&mut rec);
    point_axioms(&mut rec, seed, seeds, n);
    point_triples(&mut rec, seed, seeds, n);
    point_hitchin(&mut rec, seed, seeds, n);
    point_roundtrip(&mut rec, seed, seeds, n);
    Ok(rec.into_report("point", seed, constants(c0, None, C_Z)))
}

fn validate_tol(tol: Option<f64>) -> Result<()> {
    match tol {
        Some(t) => require(t.is_finite() && t > 0.0, "--tol must be positive"),
        None => Ok(()),
    }
}

/// Seeded base points of `K`.
pub fn group_bases(seed: u64, samples: usize) -> Vec<KElem> {
    (0..samples)
        .map(|i| KElem::random(&mut stream(seed, GROUP_STREAM + i as u64)))
        .collect()
}

/// GK verification on exponential charts of `K`, Cartan fit and order check.
/// Returns the fitted Cartan constant.
pub fn group_gk(rec: &mut Recorder, seed: u64, samples: usize, cfg: FdConfig) -> Option<f64> {
    let bases = group_bases(seed, samples);
    let mut cartan = None;
    let mut spread = f64::NAN;
    let mut dc_sum = f64::NAN;
    rec.below("calibration.cartan_c", 1e-6, || {
        let r = cartan_form_check(&bases, &cfg)?;
        cartan = Some(r.c);
        spread = r.spread;
        dc_sum = r.dc_sum;
        Ok(r.fit_residual)
    });
    rec.fixed("group.cartan.drift", CONSTANT_DRIFT, || Ok(spread));
    rec.below("group.dc_sum.origins", 1e-5, || Ok(dc_sum));
    let pts = chart_points(seed);
    for (i, base) in bases.iter().take(3).enumerate() {
        rec.below(format!("group.chart.{i}"), 1e-5, || {
            let ch = exp_chart(*base);
            Ok(verify_gk_chart(&ch.g, &ch.i_plus, &ch.i_minus, &pts, &cfg)?.max())
        });
    }
    if let Some(base) = bases.first() {
        rec.above("group.order", 3.6, || {
            let ch = exp_chart(*base);
            let pt = vec![pts[1].clone()];
            let res = |h: f64| -> Result<f64> {
                let cfg = FdConfig::new(h, Scheme::Central2)?;
                Ok(verify_gk_chart(&ch.g, &ch.i_plus, &ch.i_minus, &pt, &cfg)?.dc_sum)
            };
            Ok(res(0.2)? / res(0.1)?)
        });
    }
    rec.below("group.pointwise", 1e-12, || {
        let mut worst: f64 = 0.0;
        for k in &bases {
            let p = invariant_gk_at(k);
            let r = gk_axioms_check(&gualtieri_map(&p)?);
            require(r.metric_min_eig > 0.0, "invariant metric not positive")?;
            let pa = poisson_tensors(&p).pi_a;
            worst = max_of([worst, r.square, r.commutator, r.orthogonality, max_abs(&(pa + pi_z(k)))]);
        }
        Ok(worst)
    });
    cartan
}

fn chart_points(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, GROUP_STREAM + 5_000);
    let mut pts = vec![vec![0.0; 4]];
    for _ in 0..2 {
        pts.push(crate::rng::normal_vec(&mut rng, 4).into_iter().map(|v| 0.15 * v).collect());
    }
    pts
}

/// Factorization roundtrip (`roundtrip_seeds` per sign) and dressing laws
/// (`law_seeds`).
pub fn group_dressing(rec: &mut Recorder, seed: u64, roundtrip_seeds: usize, law_seeds: usize) {
    for side in [Side::Minus, Side::Plus] {
        let tag = side_tag(side);
        rec.below(format!("dressing.{tag}.factorize"), 1e-12, || {
            let mut worst: f64 = 0.0;
            for i in 0..roundtrip_seeds {
                let g = GElem::random(&mut stream(seed, DRESSING_STREAM + i as u64), 0.8);
                let (b, k) = factorize(&g, side);
                KElem::new(k.u, k.t)?;
                worst = max_of([worst, b.mul(&k.to_g()).dist(&g), b.subgroup_residual(side)]);
            }
            Ok(worst)
        });
        rec.below(format!("dressing.{tag}.laws"), 1e-10, || {
            let mut worst: f64 = 0.0;
            for i in 0..law_seeds {
                let mut rng = stream(seed, DRESSING_STREAM + 5_000 + i as u64);
                let k = KElem::random(&mut rng);
                let a = crate::annulus::random_subgroup_elem(side, &mut rng, 0.6);
                let b = crate::annulus::random_subgroup_elem(side, &mut rng, 0.6);
                let (bk, b_k) = dressing(&b, &k, side);
                let (abk, a_bk) = dressing(&a, &bk, side);
                let (ab_k_left, ab_k) = dressing(&a.mul(&b), &k, side);
                worst = max_of([
                    worst,
                    abk.to_g().dist(&ab_k_left.to_g()),
                    ab_k.dist(&a_bk.mul(&b_k)),
                    b.mul(&k.to_g()).dist(&bk.to_g().mul(&b_k)),
                ]);
            }
            Ok(worst)
        });
    }
}

fn side_tag(side: Side) -> &'static str {
    match side {
        Side::Minus => "minus",
        Side::Plus => "plus",
    }
}

/// Group battery: calibration, GK verification on `K`, Cartan constant and
/// dressing laws.
pub fn run_group(seed: u64, samples: usize, h: f64, tol: Option<f64>) -> Result<SuiteReport> {
    require(samples >= 1, "--samples must be at least 1")?;
    require(h.is_finite() && h > 0.0, "--h must be positive")?;
    validate_tol(tol)?;
    let mut rec = Recorder::new(tol);
    let c0 = calibrate_c0(&mut rec);
    let cz = calibrate_c_z(&mut rec, seed, 2);
    let cartan = group_gk(&mut rec, seed, samples, FdConfig::new(h, Scheme::Central4)?);
    group_dressing(&mut rec, seed, 200, 50);
    Ok(rec.into_report("group", seed, constants(c0, cartan, cz)))
}

fn composable_after(dir: Direction, r: &AnnulusRep, rng: &mut Stream) -> AnnulusRep {
    let mut q = AnnulusRep::random(rng, 0.5).gens();
    let gens = r.gens();
    for (i, j) in shared_generators(dir) {
        q[i] = gens[j];
    }
    AnnulusRep::from_gens(q)
}

/// Antisymmetry, multiplicativity on all nine level sets, real structure,
/// interchange law and the parametrized families' boundary rows.
pub fn moduli_battery(rec: &mut Recorder, seed: u64, seeds: usize) {
    rec.below("moduli.antisymmetry", 1e-12, || {
        let mut worst: f64 = 0.0;
        for i in 0..seeds {
            let mut rng = stream(seed, MODULI_STREAM + i as u64);
            let r = AnnulusRep::random(&mut rng, 0.6);
            let (d, e) = (TangentRep::random(&mut rng), TangentRep::random(&mut rng));
            worst = max_of([worst, (omega_annulus(&r, &d, &e) + omega_annulus(&r, &e, &d)).norm()]);
        }
        Ok(worst)
    });
    let labels = BoundaryLabel::all();
    for dir in [Direction::Horizontal, Direction::Vertical] {
        let tag = match dir {
            Direction::Horizontal => "horizontal",
            Direction::Vertical => "vertical",
        };
        rec.below(format!("moduli.multiplicativity.{tag}"), 1e-10, || {
            let mut worst: f64 = 0.0;
            for i in 0..seeds {
                let mut rng = stream(seed, MODULI_STREAM + 1_000 + i as u64);
                let s = sample_composable(&labels[i % labels.len()], dir, &mut rng, 2)?;
                let (a, b) = (&s.tangents[0], &s.tangents[1]);
                let r = multiplicativity_residual(dir, &s.first, &s.second, (&a.0, &a.1), (&b.0, &b.1))?;
                worst = max_of([worst, r]);
            }
            Ok(worst)
        });
    }
    rec.below("moduli.tau", 1e-10, || {
        let mut worst: f64 = 0.0;
        for i in 0..seeds {
            let mut rng = stream(seed, MODULI_STREAM + 2_000 + i as u64);
            let r = AnnulusRep::random(&mut rng, 0.6);
            let (d, e) = (TangentRep::random(&mut rng), TangentRep::random(&mut rng));
            worst = max_of([worst, tau_residual(&r, &d, &e)]);
        }
        Ok(worst)
    });
    rec.below("moduli.interchange", 1e-12, || {
        let mut worst: f64 = 0.0;
        for i in 0..seeds {
            let mut rng = stream(seed, MODULI_STREAM + 3_000 + i as u64);
            let c = AnnulusRep::random(&mut rng, 0.5);
            let z = composable_after(Direction::Horizontal, &c, &mut rng);
            let v = composable_after(Direction::Vertical, &c, &mut rng);
            let mut d = AnnulusRep::random(&mut rng, 0.5).gens();
            let (vg, zg) = (v.gens(), z.gens());
            for (i, j) in shared_generators(Direction::Horizontal) {
                d[i] = vg[j];
            }
            for (i, j) in shared_generators(Direction::Vertical) {
                d[i] = zg[j];
            }
            let d = AnnulusRep::from_gens(d);
            let lhs = mult_v(&mult_h(&c, &z)?, &mult_h(&v, &d)?)?;
            let rhs = mult_h(&mult_v(&c, &v)?, &mult_v(&z, &d)?)?;
            worst = max_of([worst, lhs.dist(&rhs)]);
        }
        Ok(worst)
    });
    let mut table = None;
    rec.below("moduli.families.d_minus", 1e-12, || {
        let r = validate_word_table(seed.wrapping_add(MODULI_STREAM + 4_000), seeds)?;
        table = Some(r);
        Ok(r.d_minus)
    });
    rec.below("moduli.families.lambda_z", 1e-12, || {
        table.map(|t| t.lambda_z).ok_or(Error::InvalidArgument("word table unavailable".into()))
    });
    rec.below("moduli.families.lambda_wbar", 1e-12, || {
        table.map(|t| t.lambda_wbar).ok_or(Error::InvalidArgument("word table unavailable".into()))
    });
}

/// Lagrangianity of the bisections `λ`, `Λ_Z`, `Λ_W̄` and the imaginary
/// profile against `C_Z·Ω_Z`.
pub fn moduli_bisections(rec: &mut Recorder, seed: u64, samples: usize) {
    let fam_seed = seed.wrapping_add(MODULI_STREAM + 5_000);
    rec.below("bisection.lambda.re", 1e-8, || Ok(lagrangian_residual(Bisection::Lambda, fam_seed, samples)?.max_re));
    for (fam, tag) in [(Bisection::LambdaZ, "lambda_z"), (Bisection::LambdaWBar, "lambda_wbar")] {
        let mut rep = None;
        rec.below(format!("bisection.{tag}.re"), 1e-7, || {
            let r = lagrangian_residual(fam, fam_seed, samples)?;
            rep = Some(r);
            Ok(r.max_re)
        });
        let missing = || Error::InvalidArgument("bisection report unavailable".into());
        rec.below(format!("bisection.{tag}.im_profile"), 1e-6, || {
            rep.map(|r| r.max_im_mismatch).ok_or_else(missing)
        });
        rec.below(format!("bisection.{tag}.boundary"), 1e-12, || {
            rep.map(|r| r.max_boundary).ok_or_else(missing)
        });
    }
    rec.below("bisection.core.boundary", 1e-14, || {
        let mut worst: f64 = 0.0;
        for i in 0..samples {
            let k = KElem::random(&mut stream(seed, MODULI_STREAM + 6_000 + i as u64));
            let r = crate::annulus::core_bisection_lambda(&k);
            for label in BoundaryLabel::all() {
                worst = max_of([worst, boundary_check(&r, &label, 0.0).max()]);
            }
        }
        Ok(worst)
    });
}

/// Annulus moduli battery.
pub fn run_moduli(seed: u64, seeds: usize, tol: Option<f64>) -> Result<SuiteReport> {
    require(seeds >= 1, "--seeds must be at least 1")?;
    validate_tol(tol)?;
    let mut rec = Recorder::new(tol);
    let c0 = calibrate_c0(&mut rec);
    let cz = calibrate_c_z(&mut rec, seed, 2);
    moduli_battery(&mut rec, seed, seeds);
    moduli_bisections(&mut rec, seed, seeds.min(50));
    Ok(rec.into_report("moduli", seed, constants(c0, None, cz)))
}

/// Half-width of the potential grid.
pub const GRID_RADIUS: f64 = 1.5;
/// Step of the central differences in the generating check.
pub const GRID_FD_STEP: f64 = 1e-5;

/// Generating property, path integrals, dilogarithm calibration and
/// Re-Lagrangianity of `Gr(ψ)`; returns the potential grid.
pub fn hopf_battery(rec: &mut Recorder, seed: u64, grid: usize) -> Vec<GridRow> {
    let rows = potential_grid(grid, GRID_RADIUS, GRID_FD_STEP);
    rec.below("hopf.softplus_integral", 1e-10, || Ok((softplus_integral(0.0) - PI * PI / 12.0).abs()));
    rec.below("hopf.generating", 1e-6, || {
        let pts = grid_points(grid, GRID_RADIUS);
        Ok(generating_check(&pts, GRID_FD_STEP))
    });
    rec.below("hopf.realness", 1e-10, || Ok(max_of(rows.iter().map(|r| r.realness_residual))));
    rec.below("hopf.path_integral", 1e-6, || {
        let mut worst: f64 = 0.0;
        for i in 0..5 {
            let mut rng = stream(seed, HOPF_STREAM + i);
            let p = [normal_c(&mut rng), normal_c(&mut rng)];
            let q = [normal_c(&mut rng), normal_c(&mut rng)];
            let w = [normal_c(&mut rng), normal_c(&mut rng)];
            let line = path_integral(p, q, w, 2000);
            worst = max_of([worst, (line - (potential_f(q[0], q[1]) - potential_f(p[0], p[1]))).abs()]);
        }
        Ok(worst)
    });
    let samples: Vec<_> = (0..50)
        .map(|i| {
            let mut rng = stream(seed, HOPF_STREAM + 100 + i);
            (
                normal_c(&mut rng),
                normal_c(&mut rng),
                [normal_c(&mut rng), normal_c(&mut rng)],
                [normal_c(&mut rng), normal_c(&mut rng)],
            )
        })
        .collect();
    rec.below("hopf.graph_consistency", 1e-9, || {
        Ok(max_of(samples.iter().map(|(v, x, _, _)| psi_graph_consistency(*v, *x))))
    });
    let (re, im) = graph_lagrangian_check(&samples);
    rec.below("hopf.re_lagrangian", 1e-7, || Ok(re));
    rec.above("hopf.im_nondegenerate", 1e-2, || Ok(im));
    rec.below("hopf.action_laws", 1e-12, || {
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let mut rng = stream(seed, HOPF_STREAM + 200 + i);
            let g = Affine {
                a: normal_c(&mut rng) * 0.5,
                b: normal_c(&mut rng),
            };
            let h = Affine {
                a: normal_c(&mut rng) * 0.5,
                b: normal_c(&mut rng),
            };
            let p = SurfPoint::new(normal_c(&mut rng), normal_c(&mut rng))?;
            for which in [Action::AMinus, Action::BMinus, Action::APlus, Action::BPlus] {
                worst = max_of([worst, action_law_residual(&g, &h, &p, which)]);
            }
        }
        Ok(worst)
    });
    rec.below("hopf.sigma_pairing", 1e-10, || {
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let mut rng = stream(seed, HOPF_STREAM + 300 + i);
            let p = SurfPoint::new(normal_c(&mut rng), normal_c(&mut rng))?;
            let m = sigma_from_pairing(&p);
            let s = hitchin_sigma(&p, Side::Minus);
            let scale = s.norm().max(1.0);
            worst = max_of([worst, (m[0][1] - s).norm() / scale, (m[1][0] + s).norm() / scale]);
        }
        Ok(worst)
    });
    rows
}

/// Hopf-surface battery with its `grid × grid` potential table.
pub fn run_hopf(seed: u64, grid: usize, tol: Option<f64>) -> Result<(SuiteReport, Vec<GridRow>)> {
    require(grid >= 1, "--grid must be at least 1")?;
    validate_tol(tol)?;
    let mut rec = Recorder::new(tol);
    let c0 = calibrate_c0(&mut rec);
    let rows = hopf_battery(&mut rec, seed, grid);
    Ok((rec.into_report("hopf", seed, constants(c0, None, C_Z)), rows))
}

/// `f = ε·exp(−|x|²)` on `ℂ × ℂ`.
pub fn gaussian_potential(eps: f64) -> ChartField {
    ChartField::scalar(4, move |x| eps * (-(x.iter().map(|v| v * v).sum::<f64>())).exp())
}

fn deform_points(seed: u64) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.1, -0.2, 0.3, 0.05], vec![-0.4, 0.2, 0.0, 0.6], vec![0.0; 4]];
    let mut rng = stream(seed, DEFORM_STREAM);
    for _ in 0..2 {
        pts.push(crate::rng::normal_vec(&mut rng, 4).into_iter().map(|v| 0.5 * v).collect());
    }
    pts
}

/// Commuting-type deformation of flat `ℂ × ℂ` by a Gaussian potential.
pub fn deform_battery(rec: &mut Recorder, seed: u64, t: f64, eps: f64) {
    let base = CommutingBase::flat_c_times_c();
    let pts = deform_points(seed);
    let cfg = FdConfig::default();
    let mut rep = None;
    rec.below("deform.gk", 1e-5, || {
        let r = commuting_deform(&gaussian_potential(eps), t, &base, &pts, &cfg, DeformOrder::Standard)?;
        let m = r.gk.max();
        rep = Some(r);
        Ok(m)
    });
    let missing = || Error::InvalidArgument("deformation report unavailable".into());
    rec.below("deform.metric_coincidence", 1e-10, || {
        rep.as_ref().map(|r| r.metric_coincidence).ok_or_else(missing)
    });
    rec.above("deform.positivity_margin", 0.0, || {
        rep.as_ref().map(|r| r.positivity_margin).ok_or_else(missing)
    });
    rec.below("deform.identity", f64::MIN_POSITIVE, || {
        let zero = ChartField::scalar(4, |_| 0.0);
        let r = commuting_deform(&zero, t, &base, &pts, &cfg, DeformOrder::Standard)?;
        Ok(r.displacement.max(r.metric_coincidence))
    });
}

/// Deformation battery.
pub fn run_deform(seed: u64, t: f64, eps: f64, tol: Option<f64>) -> Result<SuiteReport> {
    require(t.is_finite() && t > 0.0, "--t must be positive")?;
    require(eps.is_finite() && eps > 0.0, "--eps must be positive")?;
    validate_tol(tol)?;
    let mut rec = Recorder::new(tol);
    let c0 = calibrate_c0(&mut rec);
    deform_battery(&mut rec, seed, t, eps);
    Ok(rec.into_report("deform", seed, constants(c0, None, C_Z)))
}
