use anyhow::{bail, Context};
use serde::Serialize;
use smectic_core::ansatz::{eps_sweep, mollify, vertical_two_shock, write_sweep_csv, width_range};
use smectic_core::besov_lab::{
    fractional_identity, hkm1_balance, tail_mass, verify_b2s, verify_l3, verify_lp, verify_lp_eps, HGrid,
};
use smectic_core::energy::{energy_eps, rescale_to_energy, EnergyReport};
use smectic_core::entropy_lab::{
    div_sigma_identity, div_sigma_jump_measure, duality_gap, entropy_production, jump_cost, rankine_hugoniot_check,
    JumpProfile,
};
use smectic_core::field_io::read_field;
use smectic_core::minimizer::{minimize, Anchor, MinimizeOptions, PinnedMode};
use smectic_core::record::{write_records_csv, write_records_json};
use smectic_core::suite::run_identity_suite;
use smectic_core::torus_field::TWO_PI;
use smectic_core::{random_band_limited, AdmissibleField, TorusField, VerificationRecord};

use crate::config::{AnchorSpec, Command, Format, RunConfig};
use crate::output::OutputDir;

pub const DEFAULT_EPS: f64 = 1.0 / 16.0;
pub const SWEEP_EPS: [f64; 6] = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0];
pub const MINIMIZE_AMPLITUDE: f64 = 0.1;

/// Whether every pass-gated record of the run passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn of(records: &[VerificationRecord]) -> Self {
        if records.iter().all(|r| r.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

pub fn dispatch(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    match cfg.command() {
        Command::Verify => verify(cfg, out),
        Command::Energy => energy(cfg, out),
        Command::Besov => besov(cfg, out),
        Command::Entropy => entropy(cfg, out),
        Command::Sweep => sweep(cfg, out),
        Command::Minimize => minimize_cmd(cfg, out),
        Command::Tail => tail(cfg, out),
    }
}

/// `--field` when given, otherwise a seeded random band-limited field.
fn input_field(cfg: &RunConfig, amplitude: f64) -> anyhow::Result<AdmissibleField> {
    match &cfg.field {
        Some(path) => {
            let f = read_field(path).with_context(|| format!("reading field {}", path.display()))?;
            AdmissibleField::new(f).with_context(|| format!("field {} is not admissible", path.display()))
        }
        None => Ok(random_band_limited(cfg.grid, cfg.seed, cfg.kmax(), amplitude)?),
    }
}

fn input_profile(cfg: &RunConfig) -> anyhow::Result<JumpProfile> {
    match &cfg.profile {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading profile {}", path.display()))?;
            JumpProfile::from_json(&text).with_context(|| format!("parsing profile {}", path.display()))
        }
        None => Ok(vertical_two_shock(cfg.c)?),
    }
}

fn h_grid(cfg: &RunConfig) -> anyhow::Result<HGrid> {
    let (lo, hi) = cfg.h_range;
    Ok(HGrid::geometric(lo, hi)?)
}

fn write_records(cfg: &RunConfig, out: &mut OutputDir, records: &[VerificationRecord]) -> anyhow::Result<Verdict> {
    match cfg.format() {
        Format::Csv => out.write_with("records.csv", |w| Ok(write_records_csv(w, records)?))?,
        Format::Json => out.write_with("records.json", |w| Ok(write_records_json(w, records)?))?,
    }
    Ok(Verdict::of(records))
}

fn write_table<T: Serialize>(cfg: &RunConfig, out: &mut OutputDir, stem: &str, rows: &[T]) -> anyhow::Result<()> {
    match cfg.format() {
        Format::Csv => out.write_csv(&format!("{stem}.csv"), rows),
        Format::Json => out.write_json(&format!("{stem}.json"), rows),
    }
}

fn verify(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|i| cfg.seed + i).collect();
    let records = out.timed("identity_suite", || run_identity_suite(cfg.grid, &seeds, cfg.kmax()))?;
    write_records(cfg, out, &records)
}

fn energy(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    let w = input_field(cfg, 1.0)?;
    let reports = out.timed("energy", || {
        cfg.eps_values(&[DEFAULT_EPS]).into_iter().map(|e| energy_eps(&w, e)).collect::<Result<Vec<EnergyReport>, _>>()
    })?;
    write_table(cfg, out, "energy", &reports)?;
    Ok(Verdict::Pass)
}

fn besov(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    let w = input_field(cfg, 1.0)?;
    let hs = h_grid(cfg)?;
    let records = out.timed("besov", || -> anyhow::Result<Vec<VerificationRecord>> {
        let mut recs = verify_l3(&w, &hs)?;
        recs.extend(verify_b2s(&w, &hs)?);
        for &h in hs.values() {
            recs.push(hkm1_balance(&w, h)?);
        }
        if let Some(s) = cfg.s {
            recs.push(fractional_identity(&w, s)?);
        }
        if let Some(p) = cfg.p {
            recs.push(verify_lp(&w, p)?);
            for e in cfg.eps_values(&[]) {
                recs.push(verify_lp_eps(&w, p, e)?);
            }
        }
        Ok(recs)
    })?;
    write_records(cfg, out, &records)
}

fn entropy(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    let profile = input_profile(cfg)?;
    let records = out.timed("entropy", || -> anyhow::Result<Vec<VerificationRecord>> {
        let mut recs = rankine_hugoniot_check(&profile);
        let measure = div_sigma_jump_measure(&profile);
        if recs.iter().all(|r| r.pass) {
            let cost = jump_cost(&profile)?;
            recs.push(VerificationRecord::identity("jump_cost_measure", cost, measure, (cost - measure).abs(), 1e-12 * (1.0 + measure)));
        }
        if let Some(delta) = cfg.delta {
            let (lo, hi) = width_range(cfg.grid);
            if !(lo..=hi).contains(&delta) {
                bail!("--delta {delta} outside [{lo}, {hi}] for grid {}", cfg.grid);
            }
            let smooth = mollify(&profile, delta, cfg.grid)?;
            recs.push(div_sigma_identity(&smooth)?.with_param("delta", delta));
            let production = entropy_production(&smooth)?;
            recs.push(VerificationRecord::measurement("entropy_production", production, measure).with_param("delta", delta));
            let phi = TorusField::from_fn(cfg.grid, |x1, _| (TWO_PI * x1).cos() / TWO_PI);
            for e in cfg.eps_values(&[]) {
                recs.push(duality_gap(&smooth, &phi, e)?.with_param("delta", delta));
            }
        }
        Ok(recs)
    })?;
    write_records(cfg, out, &records)
}

fn sweep(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    let profile = input_profile(cfg)?;
    let eps = cfg.eps_values(&SWEEP_EPS);
    let records = out.timed("sweep", || eps_sweep(&profile, &eps, cfg.grid))?;
    match cfg.format() {
        Format::Csv => out.write_with("sweep.csv", |w| Ok(write_sweep_csv(w, &records)?))?,
        Format::Json => out.write_json("sweep.json", &records)?,
    }
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct HistoryRow {
    iteration: usize,
    objective: f64,
    grad_norm: f64,
}

fn minimize_cmd(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    let eps = match cfg.eps_values(&[DEFAULT_EPS])[..] {
        [e] => e,
        _ => bail!("minimize takes a single --eps value"),
    };
    let w0 = input_field(cfg, MINIMIZE_AMPLITUDE)?;
    let anchor = cfg.anchor.map(|a| match a {
        AnchorSpec::Pinned(n) => Anchor::Pinned(PinnedMode::lowest(&w0, n)),
        AnchorSpec::Penalty(lambda) => Anchor::Penalty { target: w0.clone(), lambda },
    });
    let opts = MinimizeOptions { max_iters: cfg.max_iters, anchor, ..Default::default() };
    let (w, report) = out.timed("minimize", || minimize(&w0, eps, &opts))?;
    out.write_field("minimizer.field", w.field())?;
    let history: Vec<HistoryRow> = report
        .energy_history
        .iter()
        .zip(&report.grad_norm_history)
        .enumerate()
        .map(|(iteration, (&objective, &grad_norm))| HistoryRow { iteration, objective, grad_norm })
        .collect();
    out.write_csv("history.csv", &history)?;
    match cfg.format() {
        Format::Json => out.write_json("report.json", &report)?,
        Format::Csv => out.write_csv("report.csv", &[report.final_energy])?,
    }
    Ok(if report.line_search_failure { Verdict::Fail } else { Verdict::Pass })
}

#[derive(Serialize)]
struct TailRow {
    eps: Option<f64>,
    m1_max: u64,
    m2_max: u64,
    tail_mass: f64,
}

/// Tail masses in the boxes `(M, M^4)`; with `--eps`, after rescaling to unit `E_eps`.
fn tail(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<Verdict> {
    let base = input_field(cfg, 1.0)?;
    let eps: Vec<Option<f64>> = match cfg.eps_values(&[]) {
        v if v.is_empty() => vec![None],
        v => v.into_iter().map(Some).collect(),
    };
    let rows = out.timed("tail", || -> anyhow::Result<Vec<TailRow>> {
        let mut rows = Vec::new();
        for e in eps {
            let w = match e {
                Some(e) => rescale_to_energy(&base, e, 1.0)?,
                None => base.clone(),
            };
            for &m in &cfg.tail_m {
                let m2 = m.saturating_pow(4);
                rows.push(TailRow { eps: e, m1_max: m, m2_max: m2, tail_mass: tail_mass(w.field(), m, m2) });
            }
        }
        Ok(rows)
    })?;
    write_table(cfg, out, "tail", &rows)?;
    Ok(Verdict::Pass)
}
