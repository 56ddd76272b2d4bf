//! Monte Carlo and analytical sweeps over an SNR grid.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::PairwiseEngine;
use crate::channels::{BasePhasePolicy, ChannelSet, StaticChannels};
use crate::detection::{linear_detect, ml_detect, sd_layered_detect, LinearKind, DEFAULT_ML_CAP};
use crate::error::{Error, Result};
use crate::modulation::{Alphabet, Scheme, SystemConfig};
use crate::precoding::{
    identity_precoder, keyhole_closed_form, random_precoder, solve_sdr, strongest_path_steering, PairwiseMatrixSet,
    PrecoderPolicy, SdrSolution,
};
use crate::scalar::CMatrix;

use super::plan::{DetectorKind, ExperimentPlan};
use super::rng::{trial_rng, PRECODER_POINT, STATIC_POINT};

pub const SCHEMA_VERSION: u32 = 1;

/// One SNR point. The first nine columns are the stable core; the rest are
/// appended extras.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub mc_aber: f64,
    pub mc_aber_stderr: f64,
    pub analytical_aber: f64,
    pub analytical_capacity: f64,
    pub mean_visited_nodes: f64,
    pub mean_detect_us: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub scheme: String,
    pub analytical_aber_clamped: f64,
    pub mc_capacity_proxy: f64,
    pub pbf_capacity: f64,
    pub ml_visited_nodes: f64,
    pub ml_detect_us: f64,
    pub xi_hat: f64,
    pub schema_version: u32,
}

impl SweepPoint {
    fn empty(snr_db: f64, scheme: Scheme) -> Self {
        Self {
            snr_db,
            mc_aber: f64::NAN,
            mc_aber_stderr: f64::NAN,
            analytical_aber: f64::NAN,
            analytical_capacity: f64::NAN,
            mean_visited_nodes: f64::NAN,
            mean_detect_us: f64::NAN,
            trials: 0,
            bit_errors: 0,
            scheme: scheme_name(scheme),
            analytical_aber_clamped: f64::NAN,
            mc_capacity_proxy: f64::NAN,
            pbf_capacity: f64::NAN,
            ml_visited_nodes: f64::NAN,
            ml_detect_us: f64::NAN,
            xi_hat: f64::NAN,
            schema_version: SCHEMA_VERSION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub command: String,
    pub points: Vec<SweepPoint>,
}

pub fn scheme_name(s: Scheme) -> String {
    match s {
        Scheme::Srpm => "srpm".into(),
        Scheme::Pbf => "pbf".into(),
        Scheme::Pbit => "pbit".into(),
        Scheme::Rpm(k) => format!("rpm{k}"),
        Scheme::Qrm(k) => format!("qrm{k}"),
    }
}

/// `σ² · 10^(snr/10)`.
pub fn power_at(snr_db: f64, sigma2: f64) -> f64 {
    sigma2 * 10f64.powf(snr_db / 10.0)
}

fn point_key(scheme_idx: usize, point: usize) -> u64 {
    ((scheme_idx as u64) << 32) | point as u64
}

/// Static channels of draw `draw` for this run.
pub fn draw_statics(plan: &ExperimentPlan, draw: u64) -> Result<Arc<StaticChannels<f64>>> {
    let mut rng = trial_rng(plan.seed, STATIC_POINT, draw);
    Ok(Arc::new(StaticChannels::draw(&plan.config, &plan.channel, &mut rng)?))
}

/// Precoder chosen by the plan's policy. `snr_db` matters only for the
/// optimized policy.
pub fn select_precoder(
    plan: &ExperimentPlan,
    alphabet: &Alphabet<f64>,
    statics: &StaticChannels<f64>,
    snr_db: f64,
) -> Result<(CMatrix<f64>, Option<SdrSolution<f64>>)> {
    let cfg = &alphabet.config;
    match plan.precoder {
        PrecoderPolicy::Random => {
            let mut rng = trial_rng(plan.precoder_seed.unwrap_or(plan.seed), PRECODER_POINT, 0);
            Ok((random_precoder(cfg.n_t, cfg.n_s, &mut rng), None))
        }
        PrecoderPolicy::Identity => Ok((identity_precoder(cfg.n_t, cfg.n_s), None)),
        PrecoderPolicy::Keyhole => {
            if cfg.n_s != 1 {
                return Err(Error::Unsupported("keyhole precoder needs n_s = 1".into()));
            }
            let w = keyhole_closed_form(&strongest_path_steering(statics)?)?;
            Ok((CMatrix::from_column_slice(cfg.n_t, 1, w.as_slice()), None))
        }
        PrecoderPolicy::Optimized => {
            let set = PairwiseMatrixSet::from_statics(alphabet, statics)?;
            let p = power_at(plan.optimize_snr_db.unwrap_or(snr_db), cfg.sigma2);
            let sol = solve_sdr(&set, p, cfg.sigma2, cfg.n_r, &plan.weighting, &plan.sdr);
            let w = CMatrix::from_column_slice(cfg.n_t, 1, sol.w.as_slice());
            Ok((w, Some(sol)))
        }
    }
}

/// Per-scheme data shared by every trial.
struct SchemeRun {
    scheme: Scheme,
    alphabet: Alphabet<f64>,
    statics: Arc<StaticChannels<f64>>,
    w: CMatrix<f64>,
    gw: CMatrix<f64>,
    per_point_precoder: bool,
}

impl SchemeRun {
    fn new(plan: &ExperimentPlan, scheme: Scheme, statics: Arc<StaticChannels<f64>>) -> Result<Self> {
        let cfg = SystemConfig { scheme, ..plan.config.clone() };
        let alphabet = Alphabet::new(&cfg)?;
        let per_point_precoder = plan.precoder == PrecoderPolicy::Optimized && plan.optimize_snr_db.is_none();
        let (w, _) = select_precoder(plan, &alphabet, &statics, plan.snr_grid_db[0])?;
        let gw = &statics.g * &w;
        Ok(Self { scheme, alphabet, statics, w, gw, per_point_precoder })
    }

    fn prepare_point(&mut self, plan: &ExperimentPlan, snr_db: f64) -> Result<()> {
        if self.per_point_precoder {
            let (w, _) = select_precoder(plan, &self.alphabet, &self.statics, snr_db)?;
            self.gw = &self.statics.g * &w;
            self.w = w;
        }
        Ok(())
    }

    fn aligned(&self) -> bool {
        self.statics.policy == BasePhasePolicy::PbfAligned
    }

    fn channel(&self, rng: &mut rand_chacha::ChaCha8Rng) -> ChannelSet<f64> {
        let mut ch = ChannelSet::draw(&self.statics, rng);
        if self.aligned() {
            ch.align_base_phases(&self.w);
        }
        ch
    }

    /// Union bound and capacity; NaN when the run is outside the analytical
    /// model (per-draw aligned base phases).
    fn analytical(&self, plan: &ExperimentPlan, p: f64) -> Result<(f64, f64, f64)> {
        if self.aligned() {
            return Ok((f64::NAN, f64::NAN, f64::NAN));
        }
        let sigma2 = self.alphabet.config.sigma2;
        let engine = PairwiseEngine::new(&self.alphabet, &self.statics, &self.w)?;
        let ub = engine.aber_union_bound(p, sigma2, &plan.qbound, &plan.limits);
        let cap = engine.dcmc_capacity(p, sigma2, &plan.limits);
        Ok((ub.value, ub.clamped, cap))
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct DetOutcome {
    bit_errors: u64,
    visited: u64,
    nanos: u128,
}

fn detect_once(
    kind: DetectorKind,
    plan: &ExperimentPlan,
    alphabet: &Alphabet<f64>,
    y: &crate::scalar::CVector<f64>,
    h: &CMatrix<f64>,
    p: f64,
    sigma2: f64,
) -> Result<(usize, u64, u128)> {
    let start = plan.timing.then(Instant::now);
    let res = match kind {
        DetectorKind::Ml => ml_detect(y, h, alphabet, p, DEFAULT_ML_CAP)?,
        DetectorKind::Sd => sd_layered_detect(y, h, alphabet, p, sigma2, &plan.sd)?,
        DetectorKind::Zf => linear_detect(y, h, alphabet, p, sigma2, LinearKind::Zf)?,
        DetectorKind::Mmse => linear_detect(y, h, alphabet, p, sigma2, LinearKind::Mmse)?,
    };
    let nanos = start.map_or(0, |s| s.elapsed().as_nanos());
    Ok((res.index, res.visited_nodes, nanos))
}

fn run_trial(
    run: &SchemeRun,
    plan: &ExperimentPlan,
    detectors: &[DetectorKind],
    p: f64,
    key: u64,
    trial: u64,
) -> Result<Vec<DetOutcome>> {
    let a = &run.alphabet;
    let sigma2 = a.config.sigma2;
    let mut rng = trial_rng(plan.seed, key, trial);
    let ch = run.channel(&mut rng);
    let (_, pair) = a.random_pair(&mut rng);
    let y = a.synthesize_received(&pair, &ch, &run.w, p, sigma2, &mut rng)?;
    let h = a.assemble_with_gw(&ch, &run.w, &run.gw);
    let sent = a.pair_index(&pair);
    detectors
        .iter()
        .map(|&d| {
            let (idx, visited, nanos) = detect_once(d, plan, a, &y, &h, p, sigma2)?;
            Ok(DetOutcome { bit_errors: u64::from(a.error_bits(sent, idx)), visited, nanos })
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
struct Tally {
    trials: u64,
    per_detector: Vec<DetOutcome>,
}

/// Runs batches in parallel and merges them in trial order. Stops after the
/// first batch that reaches `min_errors` on detector 0, or at `max_trials`.
fn run_point(
    run: &SchemeRun,
    plan: &ExperimentPlan,
    detectors: &[DetectorKind],
    p: f64,
    key: u64,
    max_trials: u64,
    min_errors: Option<u64>,
) -> Result<Tally> {
    let mut tally = Tally { trials: 0, per_detector: vec![DetOutcome::default(); detectors.len()] };
    while tally.trials < max_trials {
        let end = (tally.trials + plan.batch_size).min(max_trials);
        let batch: Vec<Vec<DetOutcome>> = (tally.trials..end)
            .into_par_iter()
            .map(|t| run_trial(run, plan, detectors, p, key, t))
            .collect::<Result<_>>()?;
        for outcome in batch {
            for (acc, o) in tally.per_detector.iter_mut().zip(outcome) {
                acc.bit_errors += o.bit_errors;
                acc.visited += o.visited;
                acc.nanos += o.nanos;
            }
        }
        tally.trials = end;
        if let Some(target) = min_errors {
            if tally.per_detector[0].bit_errors >= target {
                break;
            }
        }
    }
    Ok(tally)
}

fn mean_us(o: &DetOutcome, trials: u64, timing: bool) -> f64 {
    if timing {
        o.nanos as f64 / 1e3 / trials as f64
    } else {
        f64::NAN
    }
}

fn ber(o: &DetOutcome, trials: u64, r: usize) -> (f64, f64) {
    let n = (trials * r as u64) as f64;
    let e = o.bit_errors as f64 / n;
    (e, (e * (1.0 - e) / n).sqrt())
}

fn scheme_runs(plan: &ExperimentPlan) -> Result<Vec<SchemeRun>> {
    plan.validate()?;
    let statics = draw_statics(plan, 0)?;
    plan.scheme_list().into_iter().map(|s| SchemeRun::new(plan, s, Arc::clone(&statics))).collect()
}

/// Monte Carlo ABER with the union bound alongside.
pub fn run_aber_sweep(plan: &ExperimentPlan) -> Result<SweepResult> {
    let mut points = Vec::new();
    for (si, mut run) in scheme_runs(plan)?.into_iter().enumerate() {
        let sigma2 = run.alphabet.config.sigma2;
        let r = run.alphabet.rate_bits();
        for (pi, &snr) in plan.snr_grid_db.iter().enumerate() {
            run.prepare_point(plan, snr)?;
            let p = power_at(snr, sigma2);
            let tally = run_point(
                &run,
                plan,
                &[plan.detector],
                p,
                point_key(si, pi),
                plan.trials_per_point,
                Some(plan.min_bit_errors),
            )?;
            let o = &tally.per_detector[0];
            let (e, se) = ber(o, tally.trials, r);
            let (ub, ub_clamped, cap) = run.analytical(plan, p)?;
            log::debug!("{} {snr} dB: aber {e:.3e} over {} trials", scheme_name(run.scheme), tally.trials);
            points.push(SweepPoint {
                mc_aber: e,
                mc_aber_stderr: se,
                analytical_aber: ub,
                analytical_capacity: cap,
                mean_visited_nodes: o.visited as f64 / tally.trials as f64,
                mean_detect_us: mean_us(o, tally.trials, plan.timing),
                trials: tally.trials,
                bit_errors: o.bit_errors,
                analytical_aber_clamped: ub_clamped,
                ..SweepPoint::empty(snr, run.scheme)
            });
        }
    }
    Ok(SweepResult { command: "simulate-aber".into(), points })
}

/// Union bound and capacity only.
pub fn run_analytical_aber(plan: &ExperimentPlan) -> Result<SweepResult> {
    let mut points = Vec::new();
    for mut run in scheme_runs(plan)? {
        let sigma2 = run.alphabet.config.sigma2;
        for &snr in &plan.snr_grid_db {
            run.prepare_point(plan, snr)?;
            let (ub, ub_clamped, cap) = run.analytical(plan, power_at(snr, sigma2))?;
            points.push(SweepPoint {
                analytical_aber: ub,
                analytical_aber_clamped: ub_clamped,
                analytical_capacity: cap,
                ..SweepPoint::empty(snr, run.scheme)
            });
        }
    }
    Ok(SweepResult { command: "analyze-aber".into(), points })
}

/// Monte Carlo estimate of `log2 S − log2(1 + E[Σ_{x̂≠x} e^{−P‖H(x−x̂)‖²/(2σ²)}]/S)`
/// over fading draws.
fn mc_capacity_proxy(run: &SchemeRun, plan: &ExperimentPlan, p: f64, key: u64) -> Result<f64> {
    let a = &run.alphabet;
    let s = a.size();
    if (s as u128) * (s as u128) > plan.limits.pair_cap as u128 || plan.capacity_trials == 0 {
        return Ok(f64::NAN);
    }
    let scale = p / (2.0 * a.config.sigma2);
    let symbols: Vec<_> = (0..s).map(|i| a.equivalent_symbol_at(i)).collect();
    let sums: Vec<f64> = (0..plan.capacity_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(plan.seed, key, t);
            let ch = run.channel(&mut rng);
            let h = a.assemble_with_gw(&ch, &run.w, &run.gw);
            let hx: Vec<_> = symbols.iter().map(|x| &h * x).collect();
            let mut acc = 0.0;
            for i in 0..s {
                for j in 0..s {
                    if i != j {
                        acc += (-scale * (&hx[i] - &hx[j]).norm_squared()).exp();
                    }
                }
            }
            acc
        })
        .collect();
    let mean = sums.iter().sum::<f64>() / plan.capacity_trials as f64;
    let sf = s as f64;
    Ok((sf.log2() - (1.0 + mean / sf).log2()).clamp(0.0, sf.log2()))
}

fn capacity_points(plan: &ExperimentPlan, with_mc: bool) -> Result<Vec<SweepPoint>> {
    plan.validate()?;
    let draws: Vec<Arc<StaticChannels<f64>>> =
        (0..plan.channel_draws as u64).map(|d| draw_statics(plan, d)).collect::<Result<_>>()?;
    let mut points = Vec::new();
    for (si, scheme) in plan.scheme_list().into_iter().enumerate() {
        let mut runs: Vec<SchemeRun> =
            draws.iter().map(|st| SchemeRun::new(plan, scheme, Arc::clone(st))).collect::<Result<_>>()?;
        let mut pbf_runs: Vec<SchemeRun> =
            draws.iter().map(|st| SchemeRun::new(plan, Scheme::Pbf, Arc::clone(st))).collect::<Result<_>>()?;
        for (pi, &snr) in plan.snr_grid_db.iter().enumerate() {
            let sigma2 = plan.config.sigma2;
            let p = power_at(snr, sigma2);
            let (mut cap, mut pbf) = (0.0, 0.0);
            for (run, base) in runs.iter_mut().zip(pbf_runs.iter_mut()) {
                run.prepare_point(plan, snr)?;
                base.prepare_point(plan, snr)?;
                cap += run.analytical(plan, p)?.2;
                pbf += base.analytical(plan, p)?.2;
            }
            let nd = draws.len() as f64;
            let proxy = if with_mc { mc_capacity_proxy(&runs[0], plan, p, point_key(si, pi))? } else { f64::NAN };
            points.push(SweepPoint {
                analytical_capacity: cap / nd,
                pbf_capacity: pbf / nd,
                mc_capacity_proxy: proxy,
                trials: if with_mc { plan.capacity_trials } else { 0 },
                ..SweepPoint::empty(snr, scheme)
            });
        }
    }
    Ok(points)
}

/// Capacity averaged over static draws, with the PBF baseline and a Monte
/// Carlo estimate of the same expression.
pub fn run_capacity_sweep(plan: &ExperimentPlan) -> Result<SweepResult> {
    Ok(SweepResult { command: "simulate-capacity".into(), points: capacity_points(plan, true)? })
}

pub fn run_analytical_capacity(plan: &ExperimentPlan) -> Result<SweepResult> {
    Ok(SweepResult { command: "analyze-capacity".into(), points: capacity_points(plan, false)? })
}

/// ML against the sphere decoder on identical received vectors.
/// `mean_visited_nodes`, `mc_aber` and `mean_detect_us` describe the sphere
/// decoder; `xi_hat = ln(mean visited)/ln(S)`.
pub fn bench_detectors(plan: &ExperimentPlan) -> Result<SweepResult> {
    let mut points = Vec::new();
    for (si, mut run) in scheme_runs(plan)?.into_iter().enumerate() {
        let sigma2 = run.alphabet.config.sigma2;
        let r = run.alphabet.rate_bits();
        let size = run.alphabet.size() as f64;
        for (pi, &snr) in plan.snr_grid_db.iter().enumerate() {
            run.prepare_point(plan, snr)?;
            let p = power_at(snr, sigma2);
            let tally = run_point(
                &run,
                plan,
                &[DetectorKind::Sd, DetectorKind::Ml],
                p,
                point_key(si, pi),
                plan.trials_per_point,
                None,
            )?;
            let (sd, ml) = (&tally.per_detector[0], &tally.per_detector[1]);
            let n = tally.trials as f64;
            let (e, se) = ber(sd, tally.trials, r);
            let visited = sd.visited as f64 / n;
            points.push(SweepPoint {
                mc_aber: e,
                mc_aber_stderr: se,
                mean_visited_nodes: visited,
                mean_detect_us: mean_us(sd, tally.trials, plan.timing),
                trials: tally.trials,
                bit_errors: sd.bit_errors,
                ml_visited_nodes: ml.visited as f64 / n,
                ml_detect_us: mean_us(ml, tally.trials, plan.timing),
                xi_hat: if size > 1.0 { visited.ln() / size.ln() } else { f64::NAN },
                ..SweepPoint::empty(snr, run.scheme)
            });
        }
    }
    Ok(SweepResult { command: "bench-detectors".into(), points })
}

/// Outcome of `optimize-precoder` at one SNR.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecoderPoint {
    pub snr_db: f64,
    pub objective: f64,
    pub relaxed_objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub rank_one_ratio: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_constant: bool,
    /// Union bound with the optimized precoder.
    pub analytical_aber: f64,
    /// Union bound with the plan's seeded random precoder.
    pub random_aber: f64,
    /// `re+imj` entries separated by `;`.
    pub w: String,
    pub schema_version: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecoderResult {
    pub command: String,
    pub points: Vec<PrecoderPoint>,
}

impl PrecoderResult {
    pub fn converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }
}

/// SDR optimization at `optimize_snr_db`, or at every grid point.
pub fn optimize_precoder(plan: &ExperimentPlan) -> Result<PrecoderResult> {
    plan.validate()?;
    let cfg = &plan.config;
    if cfg.n_s != 1 {
        return Err(Error::Unsupported("precoder optimization needs n_s = 1".into()));
    }
    let alphabet = Alphabet::new(cfg)?;
    let statics = draw_statics(plan, 0)?;
    let set = PairwiseMatrixSet::from_statics(&alphabet, &statics)?;
    let random =
        random_precoder(cfg.n_t, 1, &mut trial_rng(plan.precoder_seed.unwrap_or(plan.seed), PRECODER_POINT, 0));
    let grid = plan.optimize_snr_db.map_or_else(|| plan.snr_grid_db.clone(), |s| vec![s]);
    let engine_random = PairwiseEngine::new(&alphabet, &statics, &random)?;
    let mut points = Vec::with_capacity(grid.len());
    for snr in grid {
        let p = power_at(snr, cfg.sigma2);
        let sol = solve_sdr(&set, p, cfg.sigma2, cfg.n_r, &plan.weighting, &plan.sdr);
        let w = CMatrix::from_column_slice(cfg.n_t, 1, sol.w.as_slice());
        let opt =
            PairwiseEngine::new(&alphabet, &statics, &w)?.aber_union_bound(p, cfg.sigma2, &plan.qbound, &plan.limits);
        let rnd = engine_random.aber_union_bound(p, cfg.sigma2, &plan.qbound, &plan.limits);
        let w_text = sol.w.iter().map(|z| format!("{:e}{:+e}j", z.re, z.im)).collect::<Vec<_>>().join(";");
        points.push(PrecoderPoint {
            snr_db: snr,
            objective: sol.objective,
            relaxed_objective: sol.relaxed_objective,
            lower_bound: sol.lower_bound,
            gap: sol.gap,
            rank_one_ratio: sol.rank_one_ratio,
            iterations: sol.iterations,
            converged: sol.converged,
            objective_constant: sol.objective_constant,
            analytical_aber: opt.value,
            random_aber: rnd.value,
            w: w_text,
            schema_version: SCHEMA_VERSION,
        });
    }
    Ok(PrecoderResult { command: "optimize-precoder".into(), points })
}

/// Static channels plus the fading draw of trial 0 at point 0.
pub fn dump_channel(plan: &ExperimentPlan) -> Result<ChannelSet<f64>> {
    plan.validate()?;
    let statics = draw_statics(plan, 0)?;
    let mut rng = trial_rng(plan.seed, point_key(0, 0), 0);
    Ok(ChannelSet::draw(&statics, &mut rng))
}
