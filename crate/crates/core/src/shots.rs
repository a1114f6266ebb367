//! Projection-noise simulation: per-shot sampling, the two-stage probe
//! protocol, heating runs and Monte Carlo benchmarks.
//!
//! Every random draw comes from a ChaCha8 stream selected by
//! `(seed, stage, index, sub-index)`, and within a stream the draw for
//! repetition `r` and ion `i` sits at position `r · n_ions + i`. Results
//! therefore do not depend on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::analytic::{estimator_moments, fisher_bichromatic, optimal_time, pe_reduced};
use crate::dynamics::{weak_coupling_evolution, FockSweepLibrary, TrapConfig, WeakMode};
use crate::error::{domain, Error, Result};
use crate::fock::FockSpace;
use crate::estimators::{
    combine_ions, estimate_point, fit_sideband, heating_rate, mle_point, Estimate, EvolutionTrace,
    FitConfig, HeatingFit, HeatingPoint, HeatingSeries, SidebandFit, DEFAULT_MAX_NBAR,
};
use crate::optim::scan_then_golden;

/// Population at which the probe-time scan stops.
pub const SCAN_THRESHOLD: f64 = 0.27;

const STAGE_SCAN: u8 = 1;
const STAGE_PROBE: u8 = 2;
const STAGE_TRACE: u8 = 3;
const STAGE_BENCH: u8 = 4;
const INDEX_BITS: u32 = 28;

/// Stream selector packing a stage tag and two indices below `2^28`.
pub fn stream_id(stage: u8, a: u32, b: u32) -> u64 {
    assert!(a < 1 << INDEX_BITS && b < 1 << INDEX_BITS, "stream index out of range");
    (u64::from(stage) << (2 * INDEX_BITS)) | (u64::from(a) << INDEX_BITS) | u64::from(b)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Detection errors of the state readout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// Probability of reading `|e⟩` as ground.
    pub eps_eg: f64,
    /// Probability of reading `|g⟩` as excited.
    pub eps_ge: f64,
}

impl ReadoutModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps_eg", self.eps_eg), ("eps_ge", self.eps_ge)] {
            if !(0.0..1.0).contains(&v) {
                return Err(domain("ReadoutModel", format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// Probability of reading "excited" when the true population is `p`.
    pub fn apparent(&self, p: f64) -> f64 {
        p * (1.0 - self.eps_eg) + (1.0 - p) * self.eps_ge
    }
}

/// Draw `n` repetitions of every ion with excitation probabilities `pe`.
///
/// The result is ordered by repetition, then ion.
pub fn sample_shots(pe: &[f64], n: usize, seed: u64, stream_id: u64, readout: &ReadoutModel) -> Result<Vec<u8>> {
    readout.validate()?;
    if let Some(p) = pe.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(domain("sample_shots", format!("probabilities must lie in [0, 1], got {p}")));
    }
    let probs: Vec<f64> = pe.iter().map(|&p| readout.apparent(p)).collect();
    let mut rng = stream(seed, stream_id);
    let mut out = Vec::with_capacity(n * pe.len());
    for _ in 0..n {
        for &p in &probs {
            let u: f64 = rng.random();
            out.push(u8::from(u < p));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub time_us: f64,
    pub reps: usize,
}

/// One row of the tabular shot format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub time_us: f64,
    pub rep: usize,
    pub ion: usize,
    pub outcome: u8,
}

/// Binary detection outcomes on a schedule of probe times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTable {
    /// Absent for tables read from external data.
    pub seed: Option<u64>,
    pub n_ions: usize,
    pub schedule: Vec<SchedulePoint>,
    /// `outcomes[j][r · n_ions + i]`.
    pub outcomes: Vec<Vec<u8>>,
}

impl ShotTable {
    /// Sample every schedule point with the populations `pe[j][i]`, using
    /// stream `stream_id(stage, index, j)` for point `j`.
    pub fn simulate(
        schedule: Vec<SchedulePoint>,
        pe: &[Vec<f64>],
        seed: u64,
        stage: u8,
        index: u32,
        readout: &ReadoutModel,
    ) -> Result<Self> {
        if pe.len() != schedule.len() {
            return Err(domain("ShotTable", "one population vector per schedule point is required"));
        }
        let n_ions = pe.first().map_or(0, Vec::len);
        if n_ions == 0 || pe.iter().any(|p| p.len() != n_ions) {
            return Err(domain("ShotTable", "every schedule point needs the same non-zero ion count"));
        }
        let outcomes = crate::par::map_indices(schedule.len(), |j| {
            sample_shots(&pe[j], schedule[j].reps, seed, stream_id(stage, index, j as u32), readout)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            seed: Some(seed),
            n_ions,
            schedule,
            outcomes,
        })
    }

    /// Assemble a table from rows in any order. Rows are grouped by exact
    /// time, sorted ascending; every `(rep, ion)` cell must appear once.
    pub fn from_records(records: &[ShotRecord], seed: Option<u64>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InsufficientData("no shot records".into()));
        }
        if let Some(r) = records.iter().find(|r| r.outcome > 1 || !r.time_us.is_finite()) {
            return Err(domain(
                "ShotTable",
                format!("bad record at t = {} us: outcome {}", r.time_us, r.outcome),
            ));
        }
        let n_ions = records.iter().map(|r| r.ion).max().unwrap_or(0) + 1;
        let mut times: Vec<f64> = records.iter().map(|r| r.time_us).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut cells: Vec<Vec<Option<u8>>> = vec![Vec::new(); times.len()];
        for r in records {
            let j = times.partition_point(|t| *t < r.time_us);
            let pos = r.rep * n_ions + r.ion;
            let row = &mut cells[j];
            if row.len() <= pos {
                row.resize(pos + 1, None);
            }
            if row[pos].replace(r.outcome).is_some() {
                return Err(domain(
                    "ShotTable",
                    format!("duplicate record t = {} us, rep {}, ion {}", r.time_us, r.rep, r.ion),
                ));
            }
        }
        let mut schedule = Vec::with_capacity(times.len());
        let mut outcomes = Vec::with_capacity(times.len());
        for (t, mut row) in times.into_iter().zip(cells) {
            row.resize(row.len().div_ceil(n_ions) * n_ions, None);
            let full: Option<Vec<u8>> = row.into_iter().collect();
            let full = full.ok_or_else(|| {
                domain("ShotTable", format!("missing (rep, ion) cells at t = {t} us"))
            })?;
            schedule.push(SchedulePoint {
                time_us: t,
                reps: full.len() / n_ions,
            });
            outcomes.push(full);
        }
        Ok(Self {
            seed,
            n_ions,
            schedule,
            outcomes,
        })
    }

    pub fn records(&self) -> impl Iterator<Item = ShotRecord> + '_ {
        let m = self.n_ions;
        self.schedule.iter().zip(&self.outcomes).flat_map(move |(s, row)| {
            row.iter().enumerate().map(move |(k, &outcome)| ShotRecord {
                time_us: s.time_us,
                rep: k / m,
                ion: k % m,
                outcome,
            })
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Excitation counts `k[j][i]`.
    pub fn counts(&self) -> Vec<Vec<usize>> {
        self.outcomes
            .iter()
            .map(|row| {
                let mut k = vec![0; self.n_ions];
                for (idx, &o) in row.iter().enumerate() {
                    k[idx % self.n_ions] += usize::from(o);
                }
                k
            })
            .collect()
    }

    /// Measured trace for a sideband fit. The point value is the raw
    /// fraction; the weight uses `(k + ½)/(N + 1)` so that points with no
    /// or all excitations keep a finite uncertainty.
    pub fn to_trace(&self) -> Result<EvolutionTrace> {
        let n = self.schedule.first().map_or(0, |s| s.reps);
        if n == 0 || self.schedule.iter().any(|s| s.reps != n) {
            return Err(domain("ShotTable", "a trace needs the same non-zero repetitions at every time"));
        }
        let nf = n as f64;
        let counts = self.counts();
        let x = (0..self.n_ions)
            .map(|i| counts.iter().map(|k| k[i] as f64 / nf).collect())
            .collect();
        let sigma = (0..self.n_ions)
            .map(|i| {
                counts
                    .iter()
                    .map(|k| standard_error((k[i] as f64 + 0.5) / (nf + 1.0), n))
                    .collect()
            })
            .collect();
        Ok(EvolutionTrace {
            times_us: self.schedule.iter().map(|s| s.time_us).collect(),
            x,
            sigma,
            n_shots: n,
        })
    }
}

/// Standard error `√(p(1−p)/N)` of a binomial fraction.
pub fn standard_error(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub p_hat: f64,
    pub sigma: f64,
    pub k: usize,
    pub n: usize,
    /// Set when every outcome agreed, so `sigma` is zero.
    pub boundary: bool,
}

impl Population {
    pub fn from_counts(k: usize, n: usize) -> Result<Self> {
        if n == 0 || k > n {
            return Err(domain("empirical_population", format!("need 0 <= k <= n, n >= 1, got k={k}, n={n}")));
        }
        let p_hat = k as f64 / n as f64;
        Ok(Self {
            p_hat,
            sigma: standard_error(p_hat, n),
            k,
            n,
            boundary: k == 0 || k == n,
        })
    }
}

/// Excited fraction of every ion at every schedule point, `[j][i]`.
pub fn empirical_population(table: &ShotTable) -> Result<Vec<Vec<Population>>> {
    table
        .counts()
        .iter()
        .zip(&table.schedule)
        .map(|(k, s)| k.iter().map(|&ki| Population::from_counts(ki, s.reps)).collect())
        .collect()
}

/// True excited populations of a system as a function of `n̄`.
pub trait PopulationModel: Sync {
    fn n_ions(&self) -> usize;
    /// `pe[j][i]` at `times_s[j]`.
    fn populations(&self, nbar: f64, times_s: &[f64]) -> Result<Vec<Vec<f64>>>;
}

/// Numeric propagation of each ion under `(η_iΩ/2) σ_x (â + â†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementModel {
    pub eta: Vec<f64>,
    pub omega: f64,
    /// Thermal weight allowed above the truncated Fock space.
    pub tail_tol: f64,
}

impl DisplacementModel {
    pub fn new(config: &TrapConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            eta: config.eta.clone(),
            omega: config.omega,
            tail_tol: 1e-12,
        })
    }
}

impl PopulationModel for DisplacementModel {
    fn n_ions(&self) -> usize {
        self.eta.len()
    }

    fn populations(&self, nbar: f64, times_s: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut per_ion: Vec<Vec<f64>> = Vec::with_capacity(self.eta.len());
        for (i, &eta) in self.eta.iter().enumerate() {
            if let Some(j) = self.eta[..i].iter().position(|&e| e == eta) {
                let copy = per_ion[j].clone();
                per_ion.push(copy);
                continue;
            }
            let space = FockSpace::for_nbar(nbar, self.tail_tol)?;
            let tr = weak_coupling_evolution(nbar, eta, self.omega, times_s, WeakMode::Displacement, Some(space))?;
            per_ion.push(tr.pe.iter().map(|p| p.clamp(0.0, 1.0)).collect());
        }
        Ok(transpose(&per_ion, times_s.len()))
    }
}

/// The closed form `pe_reduced` for every ion.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticModel {
    pub eta: Vec<f64>,
    pub omega: f64,
}

impl PopulationModel for AnalyticModel {
    fn n_ions(&self) -> usize {
        self.eta.len()
    }

    fn populations(&self, nbar: f64, times_s: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(times_s
            .iter()
            .map(|&t| self.eta.iter().map(|&e| pe_reduced(nbar, e, self.omega, t)).collect())
            .collect())
    }
}

impl PopulationModel for FockSweepLibrary {
    fn n_ions(&self) -> usize {
        FockSweepLibrary::n_ions(self)
    }

    /// Only times on the library grid are available.
    fn populations(&self, nbar: f64, times_s: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (mix, _) = self.thermal_mixture(nbar)?;
        let grid = self.times_s();
        times_s
            .iter()
            .map(|&t| {
                let j = grid
                    .iter()
                    .position(|&g| (g - t).abs() <= 1e-9 * g.abs().max(1e-6))
                    .ok_or_else(|| domain("FockSweepLibrary", format!("time {t} s is not on the library grid")))?;
                Ok(mix.iter().map(|row| row[j].clamp(0.0, 1.0)).collect())
            })
            .collect()
    }
}

fn transpose(per_ion: &[Vec<f64>], nt: usize) -> Vec<Vec<f64>> {
    (0..nt).map(|j| per_ion.iter().map(|row| row[j]).collect()).collect()
}

/// Evenly spaced schedule `start, start + step, …` up to `stop` inclusive.
pub fn uniform_schedule(start_us: f64, step_us: f64, stop_us: f64, reps: usize) -> Result<Vec<SchedulePoint>> {
    if !(step_us > 0.0) || !(start_us >= 0.0) || !(stop_us >= start_us) || !stop_us.is_finite() {
        return Err(domain("uniform_schedule", "need 0 <= start <= stop and step > 0"));
    }
    let n = ((stop_us - start_us) / step_us + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|j| SchedulePoint {
            time_us: start_us + j as f64 * step_us,
            reps,
        })
        .collect())
}

/// Settings of the scan-then-probe protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPlan {
    pub scan_start_us: f64,
    pub scan_step_us: f64,
    pub scan_stop_us: f64,
    pub scan_shots: usize,
    pub probe_shots: usize,
    pub threshold: f64,
    pub readout: ReadoutModel,
}

impl Default for ProtocolPlan {
    fn default() -> Self {
        Self {
            scan_start_us: 0.0,
            scan_step_us: 2.0,
            scan_stop_us: 200.0,
            scan_shots: 100,
            probe_shots: 2000,
            threshold: SCAN_THRESHOLD,
            readout: ReadoutModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub estimate: Estimate,
    pub per_ion: Vec<Estimate>,
    pub probe_time_us: f64,
    pub scan: ShotTable,
    pub probe: ShotTable,
}

/// Index of the earliest scan point whose ion-averaged excited fraction
/// reaches `threshold`.
pub fn choose_probe_point(scan: &ShotTable, threshold: f64) -> Result<usize> {
    let pops = empirical_population(scan)?;
    let mean: Vec<f64> = pops
        .iter()
        .map(|row| row.iter().map(|p| p.p_hat).sum::<f64>() / row.len() as f64)
        .collect();
    if let Some(j) = mean.iter().position(|&p| p >= threshold) {
        return Ok(j);
    }
    let (jmax, pmax) = mean
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, &p)| if p > acc.1 { (j, p) } else { acc });
    Err(Error::Protocol(format!(
        "scan never reached {threshold}: largest excited fraction {pmax:.4} at {} us over {} points",
        scan.schedule.get(jmax).map_or(f64::NAN, |s| s.time_us),
        scan.schedule.len()
    )))
}

/// Two-stage measurement: scan the probe time, then repeat at the first
/// time that reaches the threshold and invert each ion's fraction.
pub fn run_protocol(config: &TrapConfig, true_nbar: f64, seed: u64) -> Result<ProtocolOutcome> {
    let model = DisplacementModel::new(config)?;
    run_protocol_with(&model, config, true_nbar, seed, 0, &ProtocolPlan::default())
}

/// [`run_protocol`] with an explicit truth model, plan and stream index.
pub fn run_protocol_with(
    model: &dyn PopulationModel,
    config: &TrapConfig,
    true_nbar: f64,
    seed: u64,
    index: u32,
    plan: &ProtocolPlan,
) -> Result<ProtocolOutcome> {
    config.validate()?;
    if model.n_ions() != config.n_ions() {
        return Err(domain("run_protocol", "model and config disagree on the ion count"));
    }
    if plan.scan_shots == 0 || plan.probe_shots == 0 {
        return Err(domain("run_protocol", "shot counts must be >= 1"));
    }
    let schedule = uniform_schedule(plan.scan_start_us, plan.scan_step_us, plan.scan_stop_us, plan.scan_shots)?;
    let times_s: Vec<f64> = schedule.iter().map(|s| s.time_us / 1e6).collect();
    let truth = model.populations(true_nbar, &times_s)?;
    let scan = ShotTable::simulate(schedule, &truth, seed, STAGE_SCAN, index, &plan.readout)?;
    let j = choose_probe_point(&scan, plan.threshold)?;
    let t_us = scan.schedule[j].time_us;
    let probe = ShotTable::simulate(
        vec![SchedulePoint {
            time_us: t_us,
            reps: plan.probe_shots,
        }],
        std::slice::from_ref(&truth[j]),
        seed,
        STAGE_PROBE,
        index,
        &plan.readout,
    )?;
    let pops = empirical_population(&probe)?;
    let per_ion = pops[0]
        .iter()
        .zip(&config.eta)
        .map(|(p, &eta)| estimate_point(p.p_hat, p.n, eta, config.omega, t_us / 1e6))
        .collect::<Result<Vec<_>>>()?;
    let estimate = combine_ions(&per_ion)?;
    Ok(ProtocolOutcome {
        estimate,
        per_ion,
        probe_time_us: t_us,
        scan,
        probe,
    })
}

/// Simulate a sideband evolution trace from a library truth and fit it
/// with the same library.
pub fn sideband_experiment(
    library: &FockSweepLibrary,
    true_nbar: f64,
    shots_per_point: usize,
    seed: u64,
    index: u32,
    fitcfg: &FitConfig,
) -> Result<(SidebandFit, ShotTable)> {
    let times_s = library.times_s();
    let truth = PopulationModel::populations(library, true_nbar, &times_s)?;
    let schedule = library
        .times_us
        .iter()
        .map(|&t| SchedulePoint {
            time_us: t,
            reps: shots_per_point,
        })
        .collect();
    let table = ShotTable::simulate(schedule, &truth, seed, STAGE_TRACE, index, &ReadoutModel::default())?;
    let fit = fit_sideband(&table.to_trace()?, library, fitcfg)?;
    Ok((fit, table))
}

/// How `n̄` is measured at each delay of a heating run.
#[derive(Clone, Copy)]
pub enum Thermometer<'a> {
    Protocol {
        model: &'a dyn PopulationModel,
        config: &'a TrapConfig,
        plan: ProtocolPlan,
    },
    Sideband {
        library: &'a FockSweepLibrary,
        shots_per_point: usize,
        fit: FitConfig,
    },
}

impl Thermometer<'_> {
    pub fn measure(&self, nbar: f64, seed: u64, index: u32) -> Result<Estimate> {
        match self {
            Thermometer::Protocol { model, config, plan } => {
                Ok(run_protocol_with(*model, config, nbar, seed, index, plan)?.estimate)
            }
            Thermometer::Sideband {
                library,
                shots_per_point,
                fit,
            } => Ok(sideband_experiment(library, nbar, *shots_per_point, seed, index, fit)?.0.estimate),
        }
    }
}

/// Linear heating ground truth `n̄(d) = nbar0 + rate · d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingSetup {
    pub nbar0: f64,
    /// Phonons per μs.
    pub rate: f64,
    pub delays_us: Vec<f64>,
}

impl HeatingSetup {
    pub fn nbar_at(&self, delay_us: f64) -> f64 {
        self.nbar0 + self.rate * delay_us
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingRun {
    pub estimates: Vec<Estimate>,
    pub series: HeatingSeries,
    pub fit: HeatingFit,
}

/// Measure `n̄` at every delay and regress the heating rate.
pub fn simulate_heating(setup: &HeatingSetup, thermometer: &Thermometer<'_>, seed: u64) -> Result<HeatingRun> {
    if !(setup.nbar0 >= 0.0) || !setup.rate.is_finite() {
        return Err(domain("simulate_heating", "need nbar0 >= 0 and a finite rate"));
    }
    let estimates = crate::par::map_indices(setup.delays_us.len(), |k| {
        let nbar = setup.nbar_at(setup.delays_us[k]);
        if !(nbar >= 0.0) {
            return Err(domain("simulate_heating", format!("negative nbar {nbar} at delay index {k}")));
        }
        thermometer.measure(nbar, seed, k as u32)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let series = HeatingSeries {
        points: setup
            .delays_us
            .iter()
            .zip(&estimates)
            .map(|(&d, e)| HeatingPoint {
                delay_us: d,
                nbar_hat: e.nbar_hat,
                std: e.std,
            })
            .collect(),
    };
    let fit = heating_rate(&series)?;
    Ok(HeatingRun { estimates, series, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchEstimator {
    /// Inversion of the first ion's fraction.
    Point,
    /// Likelihood maximum for the first ion.
    Mle,
    /// Inverse-variance combination of every ion's inversion.
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbRow {
    pub nbar: f64,
    pub t_probe_us: f64,
    /// True excited population of each ion at the probe time.
    pub pe: Vec<f64>,
    pub mean: f64,
    pub empirical_std: f64,
    pub crb_std: f64,
    pub bias: f64,
    /// First-order bias and standard deviation of the first ion's
    /// inversion estimator.
    pub predicted_bias: f64,
    pub predicted_std: f64,
    pub n_seeds: usize,
    pub clipped: usize,
}

/// Probe time maximizing the summed Fisher information of the ions.
fn bench_probe_time(nbar: f64, eta: &[f64], omega: f64) -> Result<f64> {
    let emin = eta.iter().copied().fold(f64::INFINITY, f64::min);
    let t1 = optimal_time(nbar, emin, omega)?.t_star;
    if eta.iter().all(|&e| e == emin) {
        return Ok(t1);
    }
    let (t, _) = scan_then_golden(
        |t| -eta.iter().map(|&e| fisher_bichromatic(nbar, e, omega, t)).sum::<f64>(),
        0.0,
        2.0 * t1,
        201,
        1e-12 * t1,
    );
    Ok(t)
}

/// Ensemble statistics of an estimator at the optimal probe time of each
/// `n̄`, against the Cramér-Rao bound of the ions it uses.
pub fn crb_benchmark(
    config: &TrapConfig,
    nbar_grid: &[f64],
    n_shots: usize,
    n_seeds: usize,
    estimator: BenchEstimator,
    seed: u64,
) -> Result<Vec<CrbRow>> {
    config.validate()?;
    if nbar_grid.is_empty() || n_seeds < 2 || n_shots == 0 {
        return Err(domain("crb_benchmark", "need a non-empty grid, n_shots >= 1 and n_seeds >= 2"));
    }
    let model = DisplacementModel::new(config)?;
    let omega = config.omega;
    let used = match estimator {
        BenchEstimator::Combined => config.n_ions(),
        _ => 1,
    };
    let eta = &config.eta[..used];
    let mut rows = Vec::with_capacity(nbar_grid.len());
    for (g, &nbar) in nbar_grid.iter().enumerate() {
        let t = bench_probe_time(nbar, eta, omega)?;
        let pe = model.populations(nbar, &[t])?.remove(0);
        let ests = crate::par::map_indices(n_seeds, |s| -> Result<Estimate> {
            let mut rng = stream(seed, stream_id(STAGE_BENCH, g as u32, s as u32));
            let mut per_ion = Vec::with_capacity(used);
            for (&p, &e) in pe[..used].iter().zip(eta) {
                let k = Binomial::new(n_shots as u64, p)
                    .map_err(|err| domain("crb_benchmark", err.to_string()))?
                    .sample(&mut rng) as usize;
                per_ion.push(match estimator {
                    BenchEstimator::Mle => mle_point(k, n_shots, e, omega, t, DEFAULT_MAX_NBAR)?,
                    _ => estimate_point(k as f64 / n_shots as f64, n_shots, e, omega, t)?,
                });
            }
            match estimator {
                BenchEstimator::Combined => combine_ions(&per_ion),
                _ => Ok(per_ion[0]),
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let (mean, var) = mean_var(ests.iter().map(|e| e.nbar_hat));
        let fisher: f64 = eta.iter().map(|&e| fisher_bichromatic(nbar, e, omega, t)).sum();
        let (predicted_bias, predicted_var) = estimator_moments(nbar, pe_reduced(nbar, eta[0], omega, t), n_shots)?;
        rows.push(CrbRow {
            nbar,
            t_probe_us: t * 1e6,
            pe,
            mean,
            empirical_std: var.sqrt(),
            crb_std: crate::analytic::crb_std(fisher, n_shots),
            bias: mean - nbar,
            predicted_bias,
            predicted_std: predicted_var.sqrt(),
            n_seeds,
            clipped: ests.iter().filter(|e| e.flags.clipped).count(),
        });
    }
    Ok(rows)
}

/// Mean and unbiased sample variance.
pub fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Sample skewness `m3 / m2^{3/2}`.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}
