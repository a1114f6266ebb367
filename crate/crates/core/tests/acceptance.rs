//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use ionthermo::analytic::{
    fisher_bichromatic, fisher_vs_pe, multi_qubit_qfi, optimal_time, pe_extended, pe_reduced,
    pe_reduced_derivative, pe_star,
};
use ionthermo::dynamics::{
    bichromatic_generator, fock_sweep, stroboscopic_exact, vanvleck_components, vanvleck_effective,
    weak_coupling_evolution, weak_hamiltonian, FockSweepLibrary, TrapConfig, WeakMode,
};
use ionthermo::estimators::{estimate_point, FitConfig};
use ionthermo::fock::{build_lamb_dicke_ops, FockSpace};
use ionthermo::linalg::{kron, max_abs_diff, to_complex, CMatrix};
use ionthermo::shots::{
    crb_benchmark, sideband_experiment, simulate_heating, BenchEstimator, DisplacementModel,
    HeatingSetup, ProtocolPlan, Thermometer,
};
use ionthermo::Complex;
use rand::{Rng, SeedableRng};

const ETA: f64 = 0.1;
const NU: f64 = TAU * 1.0e6;
/// Bichromatic drive strength of the thermometry runs.
const OMEGA: f64 = TAU * 20.0e3;
/// Drive strength of the sideband evolution runs.
const OMEGA_SB: f64 = TAU * 50.0e3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn resonant(omega: f64, eta: &[f64], space: FockSpace) -> TrapConfig {
    TrapConfig::resonant(omega, NU, eta.to_vec(), space)
}

fn t_star(nbar: f64, omega: f64) -> f64 {
    optimal_time(nbar, ETA, omega).unwrap().t_star
}

fn closed_form_displacement() -> Outcome {
    let space = FockSpace::new(200).unwrap();
    let mut worst: f64 = 0.0;
    for nbar in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let ts = t_star(nbar, OMEGA);
        let times: Vec<f64> = (1..=50).map(|j| 2.0 * ts * j as f64 / 50.0).collect();
        let tr = weak_coupling_evolution(nbar, ETA, OMEGA, &times, WeakMode::Displacement, Some(space)).unwrap();
        for (t, p) in times.iter().zip(&tr.pe) {
            worst = worst.max((p - pe_reduced(nbar, ETA, OMEGA, *t)).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max |numeric - closed form| = {worst:.2e} (tol 1e-6)"))
}

fn extended_sideband_form() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for nbar in [5.0, 10.0, 20.0] {
        let ts = t_star(nbar, OMEGA);
        let times: Vec<f64> = (-5..=5).map(|j| ts * (1.0 + 0.02 * j as f64)).collect();
        let space = FockSpace::for_nbar(nbar, 1e-10).unwrap();
        let tr = weak_coupling_evolution(nbar, ETA, OMEGA, &times, WeakMode::Sideband, Some(space)).unwrap();
        let worst = times
            .iter()
            .zip(&tr.pe)
            .map(|(t, p)| (p - pe_extended(nbar, ETA, OMEGA, *t)).abs())
            .fold(0.0, f64::max);
        pass &= worst <= 0.01;
        parts.push(format!("nbar {nbar}: {worst:.4}"));
    }
    outcome(pass, format!("max |numeric - extended form| within 10% of t*: {} (tol 0.01)", parts.join(", ")))
}

/// Root of `d/dp ln F(p)` by bisection on a central difference.
fn fisher_argmax(nbar: f64) -> f64 {
    let slope = |p: f64| {
        let h = 1e-6;
        fisher_vs_pe(nbar, p + h).unwrap().ln() - fisher_vs_pe(nbar, p - h).unwrap().ln()
    };
    let (mut a, mut b) = (0.05, 0.45);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if slope(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

fn optimal_population() -> Outcome {
    let p = pe_star();
    let argmax: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&n| fisher_argmax(n)).collect();
    let spread = argmax.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
        - argmax.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let off = argmax.iter().map(|a| (a - p).abs()).fold(0.0, f64::max);
    let pass = (p - 0.274618).abs() <= 1e-5 && spread <= 1e-8 && off <= 1e-8;
    outcome(
        pass,
        format!("pe* = {p:.8}, numeric argmax {argmax:.8?}, spread {spread:.1e}, max offset from pe* {off:.1e}"),
    )
}

fn crb_saturation() -> Outcome {
    let cfg = resonant(OMEGA, &[ETA], FockSpace::new(60).unwrap());
    let rows = crb_benchmark(&cfg, &[0.1, 1.0, 5.0], 400, 2000, BenchEstimator::Point, 1).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.empirical_std / r.crb_std).collect();
    let pass = ratios.iter().all(|r| (0.9..=1.15).contains(r));
    outcome(pass, format!("std / CRB at nbar 0.1, 1, 5 = {ratios:.4?} (band [0.9, 1.15])"))
}

fn bias_and_variance() -> Outcome {
    let cfg = resonant(OMEGA, &[ETA], FockSpace::new(60).unwrap());
    let r = &crb_benchmark(&cfg, &[1.0], 2000, 1_000_000, BenchEstimator::Point, 2).unwrap()[0];
    let bias_rel = (r.bias / r.predicted_bias - 1.0).abs();
    let var_rel = ((r.empirical_std / r.predicted_std).powi(2) - 1.0).abs();
    outcome(
        bias_rel <= 0.15 && var_rel <= 0.15,
        format!(
            "bias {:.3e} vs {:.3e} (rel {bias_rel:.3}), variance {:.3e} vs {:.3e} (rel {var_rel:.3}), 1e6 seeds (tol 0.15)",
            r.bias,
            r.predicted_bias,
            r.empirical_std.powi(2),
            r.predicted_std.powi(2)
        ),
    )
}

/// Fisher information of three independent ions from the explicit joint
/// outcome distribution.
fn joint_fisher(nbar: f64, t: f64, eta: &[f64]) -> f64 {
    let m = eta.len();
    let mut total = 0.0;
    for k in 0..(1usize << m) {
        let mut prob = 1.0;
        let mut dprob = 0.0;
        for i in 0..m {
            let p = pe_reduced(nbar, eta[i], OMEGA, t);
            let dp = pe_reduced_derivative(nbar, eta[i], OMEGA, t);
            let (pi, di) = if k >> i & 1 == 1 { (p, dp) } else { (1.0 - p, -dp) };
            dprob = dprob * pi + prob * di;
            prob *= pi;
        }
        total += dprob * dprob / prob;
    }
    total
}

fn multi_ion_gain() -> Outcome {
    let space = FockSpace::new(60).unwrap();
    let single = resonant(OMEGA, &[ETA], space);
    let triple = resonant(OMEGA, &[ETA; 3], space);
    let s1 = crb_benchmark(&single, &[1.0], 400, 20_000, BenchEstimator::Point, 3).unwrap()[0].empirical_std;
    let s3 = crb_benchmark(&triple, &[1.0], 400, 20_000, BenchEstimator::Combined, 4).unwrap()[0].empirical_std;
    let gain = s1 / s3 / 3f64.sqrt();

    let eta = [0.1, 0.08, 0.1];
    let mixed = resonant(OMEGA, &eta, space);
    let mut qfi_err: f64 = 0.0;
    let mut additivity: f64 = 0.0;
    for nbar in [0.1, 1.0, 5.0] {
        for t in [10e-6, 40e-6, 90e-6] {
            let q = multi_qubit_qfi(nbar, t, &mixed).unwrap();
            qfi_err = qfi_err.max((q - joint_fisher(nbar, t, &eta)).abs());
            let sum: f64 = eta.iter().map(|&e| fisher_bichromatic(nbar, e, OMEGA, t)).sum();
            additivity = additivity.max((q - sum).abs());
        }
    }
    let pass = (gain - 1.0).abs() <= 0.10 && qfi_err <= 1e-10;
    outcome(
        pass,
        format!(
            "single/combined std = {:.4} x sqrt(3) (tol 10%); enumeration error {qfi_err:.1e} (tol 1e-10), additivity gap {additivity:.1e}",
            gain
        ),
    )
}

fn sigma_x() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(0, 1)] = Complex::new(1.0, 0.0);
    s[(1, 0)] = Complex::new(1.0, 0.0);
    s
}

fn stroboscopic_floquet() -> Outcome {
    let nbar = 0.5;
    let mut worst = Vec::new();
    for ratio in [0.05, 0.025] {
        let omega = ratio * NU;
        let space = FockSpace::for_nbar(nbar, 1e-8).unwrap();
        let cfg = resonant(omega, &[ETA], space);
        let exact = stroboscopic_exact(&cfg, nbar, 50).unwrap();
        let weak = weak_coupling_evolution(nbar, ETA, omega, &exact.times, WeakMode::Sideband, Some(space)).unwrap();
        worst.push(
            exact.pe[0]
                .iter()
                .zip(&weak.pe)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    let shrink = worst[0] / worst[1];

    let n_max = 12;
    let space = FockSpace::new(n_max).unwrap();
    let cfg = resonant(OMEGA, &[ETA], space);
    let comps = vanvleck_components(&bichromatic_generator(&cfg, 0).unwrap(), NU, 1).unwrap();
    let eff = vanvleck_effective(&comps, NU, 1).unwrap();
    let ops = build_lamb_dicke_ops(ETA, n_max).unwrap();
    let h_expect = weak_hamiltonian(ETA, OMEGA, space, WeakMode::Sideband).unwrap();
    let mut op_err = max_abs_diff(&eff.h_eff, &h_expect) / OMEGA;
    let base = kron(&sigma_x(), &to_complex(&ops.carrier())) * Complex::new(OMEGA / NU, 0.0);
    for k in 0..16 {
        let t = k as f64 * 0.173e-6;
        let expect = &base * Complex::new((NU * t).sin(), 0.0);
        op_err = op_err.max(max_abs_diff(&eff.kick_at(t), &expect));
    }
    let pass = worst[0] <= 1e-2 && shrink >= 3.0 && op_err <= 1e-12;
    outcome(
        pass,
        format!(
            "max deviation {:.2e} at ratio 0.05 (tol 1e-2), {:.2e} at 0.025, shrink {shrink:.2} (min 3); effective operators off by {op_err:.1e} (tol 1e-12)",
            worst[0], worst[1]
        ),
    )
}

fn coherences_vanish() -> Outcome {
    let mut worst: f64 = 0.0;
    for mode in [WeakMode::Displacement, WeakMode::Sideband] {
        for nbar in [0.0, 1.0, 5.0] {
            let ts = t_star(nbar, OMEGA);
            let times: Vec<f64> = (0..=40).map(|j| 3.0 * ts * j as f64 / 40.0).collect();
            let tr = weak_coupling_evolution(nbar, ETA, OMEGA, &times, mode, None).unwrap();
            for (re, im) in &tr.coherence {
                worst = worst.max(re.hypot(*im));
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |coherence| = {worst:.2e} (tol 1e-10)"))
}

fn blue_library(n_sweep: usize) -> FockSweepLibrary {
    let cfg = resonant(OMEGA_SB, &[ETA], FockSpace::new(n_sweep + 15).unwrap());
    let times: Vec<f64> = (0..=100).map(|j| j as f64 * 2e-6).collect();
    fock_sweep(&cfg, n_sweep, &times).unwrap()
}

fn red_library(n_sweep: usize) -> FockSweepLibrary {
    let cfg = resonant(OMEGA_SB, &[ETA], FockSpace::new(n_sweep + 15).unwrap()).with_detuning(-NU);
    let times: Vec<f64> = (0..=100).map(|j| j as f64 * 2e-6).collect();
    fock_sweep(&cfg, n_sweep, &times).unwrap()
}

fn sideband_coverage() -> Outcome {
    let lib = blue_library(60);
    let fit = FitConfig {
        max_nbar: 20.0,
        ..FitConfig::default()
    };
    let mut hits = 0;
    let seeds = 100;
    for seed in 0..seeds {
        let (f, _) = sideband_experiment(&lib, 2.0, 100, seed, 0, &fit).unwrap();
        if (f.estimate.nbar_hat - 2.0).abs() <= 2.0 * f.estimate.std {
            hits += 1;
        }
    }
    outcome(hits * 100 >= 90 * seeds, format!("{hits}/{seeds} fits within 2 std of nbar = 2 (min 90%)"))
}

fn heating_pipeline() -> Outcome {
    let rate = 0.073;
    let setup = HeatingSetup {
        nbar0: 1.0,
        rate,
        delays_us: vec![0.0, 20.0, 40.0, 60.0, 80.0],
    };
    let cfg = resonant(OMEGA, &[ETA], FockSpace::new(60).unwrap());
    let model = DisplacementModel::new(&cfg).unwrap();
    let bichromatic = Thermometer::Protocol {
        model: &model,
        config: &cfg,
        plan: ProtocolPlan::default(),
    };
    let blue = blue_library(120);
    let red = red_library(120);
    let fit = FitConfig {
        max_nbar: 30.0,
        ..FitConfig::default()
    };
    let sideband = |library| Thermometer::Sideband {
        library,
        shots_per_point: 100,
        fit,
    };
    let pipelines = [sideband(&blue), sideband(&red), bichromatic];
    let seeds = 50u64;
    let mut recovered = 0;
    let mut pair_hits = [0usize; 3];
    for seed in 0..seeds {
        let fits: Vec<_> = pipelines
            .iter()
            .map(|p| simulate_heating(&setup, p, seed).unwrap().fit)
            .collect();
        if (fits[2].rate - rate).abs() <= 2.0 * fits[2].rate_std {
            recovered += 1;
        }
        for (slot, (a, b)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
            let tol = 2.0 * fits[a].rate_std.hypot(fits[b].rate_std);
            if (fits[a].rate - fits[b].rate).abs() <= tol {
                pair_hits[slot] += 1;
            }
        }
    }
    let seeds = seeds as usize;
    let pass = recovered * 100 >= 95 * seeds && pair_hits.iter().all(|&h| h * 100 >= 90 * seeds);
    outcome(
        pass,
        format!(
            "bichromatic rate within 2 sigma in {recovered}/{seeds} (min 95%); pairwise agreement blue-red {}, blue-bichromatic {}, red-bichromatic {} of {seeds} (min 90%)",
            pair_hits[0], pair_hits[1], pair_hits[2]
        ),
    )
}

fn round_trip() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let nbar = 20.0 * rng.random::<f64>();
        let t = 2.0 * t_star(nbar, OMEGA) * (1.0 - rng.random::<f64>());
        let p = pe_reduced(nbar, ETA, OMEGA, t);
        let e = estimate_point(p, 2000, ETA, OMEGA, t).unwrap();
        worst = worst.max((e.nbar_hat - nbar).abs());
    }
    outcome(worst <= 1e-12, format!("max |estimate - nbar| = {worst:.2e} over 100 pairs (tol 1e-12)"))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 11] = [
        ("closed-form population under the displacement coupling", closed_form_displacement, Some(Duration::from_secs(60))),
        ("extended population under the sideband coupling", extended_sideband_form, Some(Duration::from_secs(120))),
        ("optimal probe population", optimal_population, None),
        ("Cramer-Rao saturation", crb_saturation, Some(Duration::from_secs(300))),
        ("bias and variance of the point estimator", bias_and_variance, None),
        ("multi-ion gain and joint Fisher information", multi_ion_gain, None),
        ("stroboscopic Floquet evolution", stroboscopic_floquet, None),
        ("qubit coherences vanish", coherences_vanish, None),
        ("sideband-fit coverage", sideband_coverage, Some(Duration::from_secs(600))),
        ("end-to-end heating rate", heating_pipeline, None),
        ("estimator round trip", round_trip, None),
    ];
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = run();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > *limit {
                o.pass = false;
                o.detail.push_str(&format!("; runtime {:.1}s exceeds {}s", elapsed.as_secs_f64(), limit.as_secs()));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
