use std::path::Path;

use ionthermo::analytic::{
    fisher_bichromatic, fisher_vs_pe, multi_qubit_qfi, optimal_time, pe_extended, pe_reduced, crb_std,
};
use ionthermo::dynamics::{
    bichromatic_generator, fock_sweep as sweep, ground_thermal_ensemble, propagate, weak_coupling_evolution,
    FockSweepLibrary, Generator, TrapConfig, WeakMode,
};
use ionthermo::estimators::{
    combine_ions, estimate_point, fit_sideband, mle_point, sideband_loss, Estimate, EvolutionTrace,
};
use ionthermo::fock::{qfi_thermal, FockSpace, ThermalState, DEFAULT_TAIL_TOL};
use ionthermo::shots::{
    crb_benchmark, empirical_population, mean_var, run_protocol_with, sideband_experiment, simulate_heating,
    BenchEstimator, DisplacementModel, PopulationModel, SchedulePoint, ShotTable, Thermometer,
};
use serde::Serialize;

use crate::config::{rad_s_to_khz, s_to_us, us_to_s, RunConfig};
use crate::error::CliError;
use crate::io::{num, read_shots, read_trace, shot_rows, Output, ShotSidecar, SHOT_COLUMNS};

fn ions_times_rows(times_us: &[f64], pe: &[Vec<f64>]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (j, t) in times_us.iter().enumerate() {
        for (i, per_ion) in pe.iter().enumerate() {
            rows.push(vec![num(*t), i.to_string(), num(per_ion[j])]);
        }
    }
    rows
}

/// `pe[i][j]` for every ion under the named model.
pub fn model_populations(cfg: &RunConfig, model: &str, nbar: f64, times_us: &[f64]) -> Result<Vec<Vec<f64>>, CliError> {
    let times_s: Vec<f64> = times_us.iter().map(|&t| us_to_s(t)).collect();
    let trap = cfg.trap(cfg.fock_for(nbar)?)?;
    let weak = |mode| -> Result<Vec<Vec<f64>>, CliError> {
        trap.eta
            .iter()
            .map(|&e| Ok(weak_coupling_evolution(nbar, e, trap.omega, &times_s, mode, Some(trap.fock))?.pe))
            .collect()
    };
    match model {
        "weak" => weak(WeakMode::Displacement),
        "weak-sideband" => weak(WeakMode::Sideband),
        "analytic-reduced" => Ok(trap
            .eta
            .iter()
            .map(|&e| times_s.iter().map(|&t| pe_reduced(nbar, e, trap.omega, t)).collect())
            .collect()),
        "analytic-extended" => Ok(trap
            .eta
            .iter()
            .map(|&e| times_s.iter().map(|&t| pe_extended(nbar, e, trap.omega, t)).collect())
            .collect()),
        "full" => {
            let thermal = ThermalState::new(nbar, trap.fock)?;
            let initial = ground_thermal_ensemble(&thermal.probs, 1);
            let dim = trap.fock.dim();
            (0..trap.n_ions())
                .map(|i| {
                    let gen = bichromatic_generator(&trap, i)?;
                    let prop = propagate(Generator::Driven(&gen), &initial, &times_s)?;
                    Ok((0..times_s.len()).map(|j| prop.excited(j, 1, dim)[0]).collect())
                })
                .collect()
        }
        "fit-hamiltonian" => {
            let lib = sweep(&cfg.sideband_trap(&cfg.sideband)?, cfg.n_sweep, &times_s)?;
            Ok(lib.thermal_mixture(nbar)?.0)
        }
        other => Err(CliError::Usage(format!(
            "unknown model '{other}' (full | weak | weak-sideband | fit-hamiltonian | analytic-reduced | analytic-extended)"
        ))),
    }
}

pub fn simulate(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let times = cfg.times_us()?;
    let pe = model_populations(cfg, &cfg.model, cfg.nbar, &times)?;
    let mut out = Output::new(dir, "simulate", &cfg.hash())?;
    let path = out.csv(
        "simulate.csv",
        &["time_us", "ion", "pe"],
        &ions_times_rows(&times, &pe),
        &format!("excited population, model {}, nbar {}", cfg.model, cfg.nbar),
    )?;
    out.finish()?;
    println!("{}", path.display());
    Ok(())
}

pub fn fock_sweep(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let times_s: Vec<f64> = cfg.times_us()?.iter().map(|&t| us_to_s(t)).collect();
    let lib = sweep(&cfg.sideband_trap(&cfg.sideband)?, cfg.n_sweep, &times_s)?;
    let mut out = Output::new(dir, "fock-sweep", &cfg.hash())?;
    let path = out.json("library.json", &lib, &format!(
            "{} sideband Fock sweep, n <= {}, carrier Rabi frequency 2pi x {} kHz",
            cfg.sideband,
            cfg.n_sweep,
            rad_s_to_khz(lib.config.omega)
        ),
    )?;
    out.finish()?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct PointEstimates {
    time_us: f64,
    per_ion: Vec<Estimate>,
    combined: Estimate,
}

#[derive(Serialize)]
struct EstimateReport {
    points: Vec<PointEstimates>,
}

pub fn estimate(cfg: &RunConfig, dir: &Path, shots: &Path, method: &str) -> Result<(), CliError> {
    if method != "point" && method != "mle" {
        return Err(CliError::Usage(format!("unknown method '{method}' (point | mle)")));
    }
    let (table, _) = read_shots(shots)?;
    if table.n_ions != cfg.eta.len() {
        return Err(CliError::Data(format!(
            "shot table has {} ions, configuration has {}",
            table.n_ions,
            cfg.eta.len()
        )));
    }
    let omega = cfg.trap(FockSpace::new(1)?)?.omega;
    let pops = empirical_population(&table)?;
    let mut points = Vec::new();
    for (s, row) in table.schedule.iter().zip(&pops) {
        let t = us_to_s(s.time_us);
        let per_ion = row
            .iter()
            .zip(&cfg.eta)
            .map(|(p, &eta)| match method {
                "mle" => mle_point(p.k, p.n, eta, omega, t, cfg.max_nbar),
                _ => estimate_point(p.p_hat, p.n, eta, omega, t),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let combined = combine_ions(&per_ion)?;
        points.push(PointEstimates {
            time_us: s.time_us,
            per_ion,
            combined,
        });
    }
    let report = EstimateReport { points };
    let mut out = Output::new(dir, "estimate", &cfg.hash())?;
    out.json("estimate.json", &report, "per-ion and combined estimates at every probe time")?;
    out.finish()?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn load_library(path: &Path) -> Result<FockSweepLibrary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(FockSweepLibrary::from_json(&text)?)
}

#[derive(Serialize)]
struct FitReport {
    estimate: Estimate,
    loss: f64,
    dof: usize,
    f_quantile: f64,
    sensitivity: f64,
    unit_weights: bool,
}

#[derive(Serialize)]
struct CoverageReport {
    true_nbar: f64,
    seeds: usize,
    within_two_std: usize,
    coverage: f64,
}

pub fn fit(
    cfg: &RunConfig,
    dir: &Path,
    library: &Path,
    trace: Option<&Path>,
    shots: Option<&Path>,
    self_test: bool,
    seeds: Option<usize>,
) -> Result<(), CliError> {
    let lib = load_library(library)?;
    let fitcfg = cfg.fit();
    let mut out = Output::new(dir, "fit", &cfg.hash())?;
    if seeds.is_some() {
        let n = cfg.seeds;
        let mut rows = Vec::with_capacity(n);
        let mut hits = 0;
        for k in 0..n {
            let (f, _) = sideband_experiment(&lib, cfg.nbar, cfg.shots, cfg.seed.wrapping_add(k as u64), 0, &fitcfg)?;
            let within = (f.estimate.nbar_hat - cfg.nbar).abs() <= 2.0 * f.estimate.std;
            hits += usize::from(within);
            rows.push(vec![
                k.to_string(),
                num(f.estimate.nbar_hat),
                num(f.estimate.std),
                u8::from(within).to_string(),
            ]);
        }
        out.csv("coverage.csv", &["seed_offset", "nbar_hat", "std", "within_two_std"], &rows, "synthetic fit coverage")?;
        let report = CoverageReport {
            true_nbar: cfg.nbar,
            seeds: n,
            within_two_std: hits,
            coverage: hits as f64 / n.max(1) as f64,
        };
        out.json("coverage.json", &report, "coverage summary")?;
        out.finish()?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }

    let (tr, unit) = match (trace, shots) {
        (Some(p), _) => {
            let (t, has_sigma) = read_trace(p)?;
            (t, !has_sigma)
        }
        (None, Some(p)) => (read_shots(p)?.0.to_trace()?, false),
        (None, None) if self_test => (noiseless_trace(&lib, cfg.nbar)?, true),
        (None, None) => return Err(CliError::Usage("fit needs --trace, --shots, --self-test or --seeds".into())),
    };
    let f = fit_sideband(&tr, &lib, &fitcfg)?;
    let hi = (4.0 * f.estimate.nbar_hat).max(5.0).min(fitcfg.max_nbar);
    let curve = (0..=200)
        .map(|k| {
            let n = hi * k as f64 / 200.0;
            Ok(vec![num(n), num(sideband_loss(&tr, &lib, n)?)])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.csv("loss_curve.csv", &["nbar", "loss"], &curve, "fit loss against nbar")?;
    let report = FitReport {
        estimate: f.estimate,
        loss: f.loss,
        dof: f.dof,
        f_quantile: f.f_quantile,
        sensitivity: f.sensitivity,
        unit_weights: unit,
    };
    out.json("fit.json", &report, "sideband fit")?;
    out.finish()?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if self_test {
        let err = (f.estimate.nbar_hat - cfg.nbar).abs();
        if err > 1e-6 * cfg.nbar.max(1.0) {
            return Err(CliError::Numerical(format!(
                "self-test recovered {} for nbar {} (error {err:e})",
                f.estimate.nbar_hat, cfg.nbar
            )));
        }
    }
    Ok(())
}

fn noiseless_trace(lib: &FockSweepLibrary, nbar: f64) -> Result<EvolutionTrace, CliError> {
    let (x, _) = lib.thermal_mixture(nbar)?;
    let sigma = x.iter().map(|row| vec![1.0; row.len()]).collect();
    Ok(EvolutionTrace {
        times_us: lib.times_us.clone(),
        x,
        sigma,
        n_shots: 0,
    })
}

#[derive(Serialize)]
struct HeatingReport {
    pipeline: String,
    rate: f64,
    rate_std: f64,
    intercept: f64,
    intercept_std: f64,
    repeats: usize,
    ensemble_rate_mean: f64,
    ensemble_rate_std: f64,
}

pub fn heating(cfg: &RunConfig, dir: &Path, pipeline: &str) -> Result<(), CliError> {
    let setup = cfg.heating();
    if cfg.repeats == 0 {
        return Err(CliError::Usage("repeats must be >= 1".into()));
    }
    let nbar_max = cfg.heating_nbar_max();
    let trap = cfg.trap(cfg.fock_for(nbar_max)?)?;
    let model = DisplacementModel::new(&trap)?;
    let library;
    let thermometer = match pipeline {
        "bichromatic" => Thermometer::Protocol {
            model: &model,
            config: &trap,
            plan: cfg.plan(),
        },
        "blue" | "red" => {
            let times_s: Vec<f64> = cfg.times_us()?.iter().map(|&t| us_to_s(t)).collect();
            library = sweep(&cfg.sideband_trap(pipeline)?, cfg.n_sweep, &times_s)?;
            let (_, tail) = library.thermal_mixture(nbar_max)?;
            if tail > DEFAULT_TAIL_TOL {
                eprintln!("ionthermo: warning: n_sweep = {} leaves thermal weight {tail:.1e} at nbar {nbar_max}", cfg.n_sweep);
            }
            Thermometer::Sideband {
                library: &library,
                shots_per_point: cfg.shots,
                fit: cfg.fit(),
            }
        }
        other => return Err(CliError::Usage(format!("unknown pipeline '{other}' (blue | red | bichromatic)"))),
    };
    let runs = (0..cfg.repeats)
        .map(|r| simulate_heating(&setup, &thermometer, cfg.seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &runs[0];
    let nd = setup.delays_us.len();
    let ensemble: Vec<(f64, f64)> = (0..nd)
        .map(|k| {
            if runs.len() < 2 {
                return (first.estimates[k].nbar_hat, f64::NAN);
            }
            let (m, v) = mean_var(runs.iter().map(|r| r.estimates[k].nbar_hat));
            (m, v.sqrt())
        })
        .collect();
    let mut rows = Vec::with_capacity(nd);
    let mut dn = Vec::with_capacity(nd);
    for (k, &d) in setup.delays_us.iter().enumerate() {
        let truth = setup.nbar_at(d);
        let e = &first.estimates[k];
        let mean_model_std = runs.iter().map(|r| r.estimates[k].std).sum::<f64>() / runs.len() as f64;
        rows.push(vec![num(d), num(truth), num(e.nbar_hat), num(e.std), num(ensemble[k].0), num(ensemble[k].1)]);
        let t = optimal_time(truth, trap.eta[0], trap.omega)?.t_star;
        let fisher: f64 = trap.eta.iter().map(|&eta| fisher_bichromatic(truth, eta, trap.omega, t)).sum();
        dn.push(vec![num(truth), num(ensemble[k].1), num(mean_model_std), num(crb_std(fisher, cfg.probe_shots))]);
    }
    let rates: Vec<f64> = runs.iter().map(|r| r.fit.rate).collect();
    let (rate_mean, rate_var) = if rates.len() >= 2 {
        mean_var(rates.iter().copied())
    } else {
        (rates[0], f64::NAN)
    };
    let report = HeatingReport {
        pipeline: pipeline.to_string(),
        rate: first.fit.rate,
        rate_std: first.fit.rate_std,
        intercept: first.fit.intercept,
        intercept_std: first.fit.intercept_std,
        repeats: runs.len(),
        ensemble_rate_mean: rate_mean,
        ensemble_rate_std: rate_var.sqrt(),
    };
    let mut out = Output::new(dir, "heating", &cfg.hash())?;
    out.csv(
        &format!("heating_{pipeline}.csv"),
        &["delay_us", "nbar_true", "nbar_hat", "std_model", "ensemble_mean", "std_ensemble"],
        &rows,
        "per-delay estimates of the first run, with model and ensemble uncertainties",
    )?;
    out.csv(
        &format!("dn_vs_n_{pipeline}.csv"),
        &["nbar", "std_ensemble", "std_model_mean", "crb_std"],
        &dn,
        "spread of the estimates against the bichromatic Cramer-Rao bound at the optimal time",
    )?;
    out.json(&format!("rate_{pipeline}.json"), &report, "heating-rate fit")?;
    out.finish()?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn fisher(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let trap = cfg.trap(FockSpace::new(1)?)?;
    let eta = trap.eta[0];
    let times: Vec<f64> = cfg.times_us()?.into_iter().filter(|&t| t > 0.0).collect();
    let mut by_time = Vec::new();
    let mut by_pe = Vec::new();
    let mut locus = Vec::new();
    for &nbar in &cfg.nbar_grid {
        for &t_us in &times {
            let t = us_to_s(t_us);
            by_time.push(vec![
                num(nbar),
                num(t_us),
                num(pe_reduced(nbar, eta, trap.omega, t)),
                num(fisher_bichromatic(nbar, eta, trap.omega, t)),
                num(multi_qubit_qfi(nbar, t, &trap)?),
            ]);
        }
        for k in 1..100 {
            let pe = k as f64 * 0.005;
            by_pe.push(vec![num(nbar), num(pe), num(fisher_vs_pe(nbar, pe)?)]);
        }
        let plan = optimal_time(nbar, eta, trap.omega)?;
        let f = fisher_bichromatic(nbar, eta, trap.omega, plan.t_star);
        locus.push(vec![
            num(nbar),
            num(s_to_us(plan.t_star)),
            num(plan.pe_star),
            num(f),
            num(crb_std(f, cfg.probe_shots)),
            num(multi_qubit_qfi(nbar, plan.t_star, &trap)?),
            num(qfi_thermal(nbar)?),
        ]);
    }
    let mut out = Output::new(dir, "fisher", &cfg.hash())?;
    out.csv(
        "fisher_time.csv",
        &["nbar", "time_us", "pe", "fisher", "fisher_all_ions"],
        &by_time,
        "per-shot Fisher information against probe time",
    )?;
    out.csv("fisher_pe.csv", &["nbar", "pe", "fisher"], &by_pe, "per-shot Fisher information against excited population")?;
    out.csv(
        "optimal.csv",
        &["nbar", "t_star_us", "pe_star", "fisher_max", "crb_std", "fisher_all_ions", "qfi_thermal"],
        &locus,
        "optimal probe locus and bounds",
    )?;
    out.finish()?;
    Ok(())
}

fn write_table(out: &mut Output, name: &str, table: &ShotTable, cfg: &RunConfig) -> Result<(), CliError> {
    let csv_name = format!("{name}.csv");
    out.csv(&csv_name, &SHOT_COLUMNS, &shot_rows(table), "binary detection outcomes")?;
    let sidecar = ShotSidecar {
        seed: table.seed,
        config_hash: cfg.hash(),
        readout: cfg.readout(),
        n_ions: table.n_ions,
    };
    std::fs::write(out.path(&format!("{name}.json")), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

pub fn sample(cfg: &RunConfig, dir: &Path, time_us: Option<f64>) -> Result<(), CliError> {
    let trap = cfg.trap(FockSpace::new(1)?)?;
    let model = DisplacementModel::new(&trap)?;
    let schedule = match time_us {
        Some(t) => vec![SchedulePoint {
            time_us: t,
            reps: cfg.probe_shots,
        }],
        None => cfg.schedule(cfg.shots)?,
    };
    let times_s: Vec<f64> = schedule.iter().map(|s| us_to_s(s.time_us)).collect();
    let pe = model.populations(cfg.nbar, &times_s)?;
    let table = ShotTable::simulate(schedule, &pe, cfg.seed, 0, 0, &cfg.readout())?;
    let mut out = Output::new(dir, "sample", &cfg.hash())?;
    write_table(&mut out, "shots", &table, cfg)?;
    out.finish()?;
    println!("{}", out_path(dir, "shots.csv"));
    Ok(())
}

fn out_path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[derive(Serialize)]
struct ProtocolReport {
    true_nbar: f64,
    probe_time_us: f64,
    estimate: Estimate,
    per_ion: Vec<Estimate>,
}

pub fn protocol(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let trap = cfg.trap(FockSpace::new(1)?)?;
    let model = DisplacementModel::new(&trap)?;
    let o = run_protocol_with(&model, &trap, cfg.nbar, cfg.seed, 0, &cfg.plan())?;
    let mut out = Output::new(dir, "protocol", &cfg.hash())?;
    write_table(&mut out, "scan", &o.scan, cfg)?;
    write_table(&mut out, "probe", &o.probe, cfg)?;
    let report = ProtocolReport {
        true_nbar: cfg.nbar,
        probe_time_us: o.probe_time_us,
        estimate: o.estimate,
        per_ion: o.per_ion,
    };
    out.json("protocol.json", &report, "scan-then-probe estimate")?;
    out.finish()?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn benchmark(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let estimator = match cfg.estimator.as_str() {
        "point" => BenchEstimator::Point,
        "mle" => BenchEstimator::Mle,
        "combined" => BenchEstimator::Combined,
        other => return Err(CliError::Usage(format!("unknown estimator '{other}' (point | mle | combined)"))),
    };
    let trap: TrapConfig = cfg.trap(FockSpace::new(1)?)?;
    let rows = crb_benchmark(&trap, &cfg.nbar_grid, cfg.probe_shots, cfg.seeds, estimator, cfg.seed)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.nbar),
                num(r.t_probe_us),
                num(r.mean),
                num(r.empirical_std),
                num(r.crb_std),
                num(r.bias),
                num(r.predicted_bias),
                num(r.predicted_std),
                r.clipped.to_string(),
            ]
        })
        .collect();
    let mut out = Output::new(dir, "benchmark", &cfg.hash())?;
    out.csv(
        "benchmark.csv",
        &[
            "nbar",
            "t_probe_us",
            "mean",
            "empirical_std",
            "crb_std",
            "bias",
            "predicted_bias",
            "predicted_std",
            "clipped",
        ],
        &table,
        &format!("{} estimator over {} seeds", cfg.estimator, cfg.seeds),
    )?;
    out.finish()?;
    Ok(())
}
