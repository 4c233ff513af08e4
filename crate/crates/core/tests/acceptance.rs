//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints its own line; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smectic_core::ansatz::{eps_sweep, mollify, optimal_width, vertical_two_shock, SweepRecord};
use smectic_core::besov_lab::{refinement_stability, verify_lp, verify_lp_eps, tail_mass, Estimate, HGrid};
use smectic_core::energy::{energy_eps, rescale_to_energy};
use smectic_core::entropy_lab::{div_sigma_jump_measure, duality_gap, jump_cost, rankine_hugoniot_check, Interface, JumpProfile};
use smectic_core::minimizer::{minimize, Anchor, MinimizeOptions, PinnedMode};
use smectic_core::suite::run_identity_suite;
use smectic_core::torus_field::TWO_PI;
use smectic_core::{random_band_limited, AdmissibleField, GridSpec, TorusField};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: smectic_core::SmecticError) -> String {
    e.to_string()
}

fn sine(g: GridSpec, a: f64) -> AdmissibleField {
    AdmissibleField::new(TorusField::from_fn(g, |x1, _| a * (TWO_PI * x1).sin())).expect("admissible")
}

fn identity_suite() -> Outcome {
    let g = GridSpec::new(256, 256).map_err(err)?;
    let seeds: Vec<u64> = (0..20).collect();
    let recs = run_identity_suite(g, &seeds, 32).map_err(err)?;
    let failed: Vec<_> = recs.iter().filter(|r| !r.pass).map(|r| format!("{}(seed {:?})={:e}", r.name, r.param("seed"), r.ratio_or_residual)).collect();
    ensure(failed.is_empty(), || format!("failed records: {}", failed.join(", ")))?;
    let worst = |name: &str| recs.iter().filter(|r| r.name == name).map(|r| r.ratio_or_residual).fold(0.0, f64::max);
    Ok(format!(
        "{} records; max hkm2 {:.1e}, div_sigma {:.1e}, gradient {:.1e}",
        recs.len(),
        worst("hkm2"),
        worst("div_sigma"),
        worst("gradient_check")
    ))
}

fn closed_form_energy() -> Outcome {
    let g = GridSpec::new(64, 16).map_err(err)?;
    let mut worst = 0.0_f64;
    for a in [0.5, 1.0, 2.0] {
        for eps in [1.0 / 16.0, 1.0 / 64.0] {
            let r = energy_eps(&sine(g, a), eps).map_err(err)?;
            let e_eps = a.powi(4) / (64.0 * eps) + PI * PI * a * a * eps;
            let e = PI * a.powi(3) / 4.0;
            worst = worst.max(((r.energy_eps - e_eps) / e_eps).abs()).max(((r.energy_indep - e) / e).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn besov_stability() -> Outcome {
    let g = GridSpec::new(256, 256).map_err(err)?;
    let hs = HGrid::default();
    let mut worst = (0.0_f64, 0.0_f64);
    for seed in 0..20 {
        let w = random_band_limited(g, 1000 + seed, 32, 1.0).map_err(err)?;
        let l3 = refinement_stability(&w, &hs, Estimate::L3).map_err(err)?;
        let b2s = refinement_stability(&w, &hs, Estimate::B2s).map_err(err)?;
        ensure(l3.pass && b2s.pass, || format!("seed {seed}: l3 drift {:e}, b2s drift {:e}", l3.ratio_or_residual, b2s.ratio_or_residual))?;
        worst = (worst.0.max(l3.ratio_or_residual), worst.1.max(b2s.ratio_or_residual));
    }
    Ok(format!("max drift 256->512: l3 {:.1e}, b2s {:.1e}", worst.0, worst.1))
}

fn lp_scaling() -> Outcome {
    let g = GridSpec::new(64, 16).map_err(err)?;
    let ratios = [0.1, 1.0, 10.0]
        .iter()
        .map(|&a| verify_lp(&sine(g, a), 2.0).map(|r| r.ratio_or_residual))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let spread = ratios.iter().map(|r| ((r - ratios[1]) / ratios[1]).abs()).fold(0.0, f64::max);
    ensure(spread <= 1e-10, || format!("p=2 ratios {ratios:?}"))?;
    let g = GridSpec::new(128, 128).map_err(err)?;
    let w = random_band_limited(g, 5, 16, 1.0).map_err(err)?;
    let mut count = 0;
    for p in [4.0, 5.0] {
        for k in 2..=6 {
            let r = verify_lp_eps(&w, p, 0.5_f64.powi(k)).map_err(err)?;
            ensure(r.ratio_or_residual.is_finite() && r.ratio_or_residual > 0.0, || format!("p={p} eps=2^-{k}: {r:?}"))?;
            count += 1;
        }
    }
    Ok(format!("p=2 ratio spread {spread:.1e}; {count} finite lp_eps ratios"))
}

fn random_rh_profile(rng: &mut ChaCha8Rng) -> JumpProfile {
    let count = rng.random_range(1..=3);
    let mut interfaces = Vec::new();
    for k in 0..count {
        let w_minus: f64 = rng.random_range(-1.0..1.0);
        let w_plus: f64 = rng.random_range(-1.0..1.0);
        let s = 0.5 * (w_minus + w_plus);
        let height: f64 = rng.random_range(0.2..1.0);
        let dx = -s * height;
        let lo = (-dx).max(0.0);
        let hi = (1.0 - dx).min(1.0);
        let x0 = lo + (hi - lo) * (k as f64 + rng.random_range(0.0..1.0)) / count as f64;
        let y0: f64 = rng.random_range(0.0..(1.0 - height));
        interfaces.push(Interface::new([x0, y0], [x0 + dx, y0 + height], w_minus, w_plus).expect("valid interface"));
    }
    JumpProfile::new(interfaces).expect("valid profile")
}

fn jump_cost_identity() -> Outcome {
    let p = vertical_two_shock(0.5).map_err(err)?;
    let cost = jump_cost(&p).map_err(err)?;
    ensure((cost - 1.0 / 6.0).abs() <= 1e-12, || format!("two-shock cost {cost}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let prof = random_rh_profile(&mut rng);
        ensure(rankine_hugoniot_check(&prof).iter().all(|r| r.pass), || format!("profile {k} violates RH"))?;
        let c = jump_cost(&prof).map_err(err)?;
        worst = worst.max((c - div_sigma_jump_measure(&prof)).abs());
    }
    ensure(worst <= 1e-12, || format!("max |cost - measure| {worst:e}"))?;
    Ok(format!("two-shock cost error {:.1e}; max |cost - measure| over 50 profiles {worst:.1e}", (cost - 1.0 / 6.0).abs()))
}

fn sweep_grid() -> GridSpec {
    GridSpec::new(1024, 64).expect("grid")
}

fn sweep_eps() -> Vec<f64> {
    (4..=9).map(|k| 0.5_f64.powi(k)).collect()
}

fn sweep() -> Result<Vec<SweepRecord>, String> {
    eps_sweep(&vertical_two_shock(0.5).map_err(err)?, &sweep_eps(), sweep_grid()).map_err(err)
}

fn sweep_trend(recs: &[SweepRecord]) -> Outcome {
    let table = recs.iter().map(|r| format!("2^{:.0}:{:+.5}@{:.4}", r.eps.log2(), r.gap, r.delta_star)).collect::<Vec<_>>().join(" ");
    let positive = recs.iter().all(|r| r.gap > 0.0);
    let decreasing = recs.windows(2).all(|w| w[1].gap < w[0].gap);
    let last = recs.last().map(|r| r.gap).unwrap_or(f64::NAN);
    let small = last <= 0.15 / 6.0;
    ensure(positive && decreasing && small, || format!("positive={positive} decreasing={decreasing} final_within_15pct={small}; gap(eps)@delta*: {table}"))?;
    Ok(format!("gap(eps)@delta*: {table}"))
}

fn duality_boundedness(recs: &[SweepRecord]) -> Outcome {
    let g = sweep_grid();
    let p = vertical_two_shock(0.5).map_err(err)?;
    let phis = [
        TorusField::from_fn(g, |x1, _| (TWO_PI * x1).sin() / TWO_PI),
        TorusField::from_fn(g, |_, x2| (TWO_PI * x2).sin() / TWO_PI),
    ];
    let mut worst = 0.0_f64;
    for r in recs {
        let w = mollify(&p, r.delta_star, g).map_err(err)?;
        for phi in &phis {
            let d = duality_gap(&w, phi, r.eps).map_err(err)?;
            ensure(d.ratio_or_residual.is_finite(), || format!("non-finite ratio at eps {}", r.eps))?;
            worst = worst.max(d.ratio_or_residual);
        }
    }
    ensure(worst <= 2.0, || format!("max ratio {worst}"))?;
    Ok(format!("max lhs/rhs {worst:.3e} over {} points", 2 * recs.len()))
}

fn compactness() -> Outcome {
    let g = GridSpec::new(128, 128).map_err(err)?;
    let ms = [4u64, 8, 16, 32];
    let mut members = 0;
    for seed in 0..10 {
        let base = random_band_limited(g, 500 + seed, 42, 1.0).map_err(err)?;
        for k in 2..=6 {
            let eps = 0.5_f64.powi(k);
            let w = rescale_to_energy(&base, eps, 1.0).map_err(err)?;
            let e = energy_eps(&w, eps).map_err(err)?.energy_eps;
            ensure((e - 1.0).abs() < 1e-9, || format!("rescaling missed: {e}"))?;
            let tails: Vec<f64> = ms.iter().map(|&m| tail_mass(&w, m, m.pow(4))).collect();
            ensure(tails.windows(2).all(|t| t[1] < t[0]), || format!("seed {seed} eps 2^-{k}: tails {tails:?}"))?;
            members += 1;
        }
    }
    Ok(format!("{members} members with strictly decreasing tails at M = 4, 8, 16, 32"))
}

fn minimizer_contract() -> Outcome {
    let monotone = |h: &[f64]| h.windows(2).all(|w| w[1] <= w[0]);

    let g = GridSpec::new(32, 32).map_err(err)?;
    let w0 = random_band_limited(g, 77, 4, 0.05).map_err(err)?;
    let opts = MinimizeOptions { max_iters: 5000, grad_tol: 1e-12, ..Default::default() };
    let (_, free) = minimize(&w0, 1.0 / 16.0, &opts).map_err(err)?;
    ensure(monotone(&free.energy_history), || "unanchored history not monotone".into())?;
    ensure(free.final_energy.energy_eps <= 1e-8, || format!("unanchored final energy {:e}", free.final_energy.energy_eps))?;

    let eps = 1.0 / 64.0;
    let g = GridSpec::new(256, 16).map_err(err)?;
    let p = vertical_two_shock(0.5).map_err(err)?;
    let (delta, e_ansatz, _) = optimal_width(&p, eps, g).map_err(err)?;
    let w0 = mollify(&p, delta, g).map_err(err)?;
    let pins = PinnedMode::lowest(&w0, 8);
    let opts = MinimizeOptions { max_iters: 200, anchor: Some(Anchor::Pinned(pins)), ..Default::default() };
    let (_, pinned) = minimize(&w0, eps, &opts).map_err(err)?;
    ensure(monotone(&pinned.energy_history), || "pinned history not monotone".into())?;
    let e_final = pinned.final_energy.energy_eps;
    ensure(e_final < e_ansatz, || format!("pinned final {e_final} not below ansatz {e_ansatz}"))?;
    Ok(format!(
        "unanchored E={:.1e} in {} iters; pinned E={e_final:.6} < ansatz {e_ansatz:.6} (gap {:+.5} vs {:+.5})",
        free.final_energy.energy_eps,
        free.iterations,
        e_final - 1.0 / 6.0,
        e_ansatz - 1.0 / 6.0
    ))
}

fn run(label: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  {label} ({secs:.1}s): {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {label} ({secs:.1}s): {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    let recs = sweep();
    let results = [
        run("1 identity suite", identity_suite),
        run("2 closed-form energy", closed_form_energy),
        run("3 L3/B2s ratio stability", besov_stability),
        run("4 Lp scaling", lp_scaling),
        run("5 jump cost", jump_cost_identity),
        run("6 eps-sweep matching trend", || sweep_trend(recs.as_ref().map_err(Clone::clone)?)),
        run("7 duality bound", || duality_boundedness(recs.as_ref().map_err(Clone::clone)?)),
        run("8 Fourier tail decay", compactness),
        run("9 minimizer contract", minimizer_contract),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
