//! Run configuration in laboratory units.
//!
//! Frequencies are given as `f` in kHz for an angular frequency `2π·f`, and
//! times in μs. [`RunConfig::trap`] converts to rad/s and seconds.

use std::f64::consts::TAU;
use std::path::Path;

use ionthermo::dynamics::TrapConfig;
use ionthermo::estimators::FitConfig;
use ionthermo::fock::FockSpace;
use ionthermo::shots::{uniform_schedule, HeatingSetup, ProtocolPlan, ReadoutModel, SchedulePoint};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn khz_to_rad_s(f_khz: f64) -> f64 {
    TAU * 1e3 * f_khz
}

pub fn rad_s_to_khz(w: f64) -> f64 {
    w / (TAU * 1e3)
}

pub fn us_to_s(t_us: f64) -> f64 {
    t_us / 1e6
}

pub fn s_to_us(t_s: f64) -> f64 {
    t_s * 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Bichromatic carrier Rabi frequency.
    pub omega_khz: f64,
    pub nu_khz: f64,
    pub eta: Vec<f64>,
    /// Qubit frequency offsets; empty means zero for every ion.
    pub delta_zeeman_khz: Vec<f64>,
    /// Fock cutoff; 0 picks one from `nbar` and `tail_tol`.
    pub n_max: usize,
    pub tail_tol: f64,
    /// Carrier Rabi frequency of sideband pulses.
    pub sideband_omega_khz: f64,
    /// `blue` or `red`.
    pub sideband: String,
    pub nbar: f64,
    pub model: String,
    pub time_start_us: f64,
    pub time_step_us: f64,
    pub time_stop_us: f64,
    pub shots: usize,
    pub probe_shots: usize,
    pub threshold: f64,
    pub eps_eg: f64,
    pub eps_ge: f64,
    pub beta: f64,
    pub max_nbar: f64,
    pub n_sweep: usize,
    pub nbar0: f64,
    pub rate_per_us: f64,
    pub delays_us: Vec<f64>,
    /// Independent repetitions of a heating run.
    pub repeats: usize,
    pub nbar_grid: Vec<f64>,
    pub estimator: String,
    pub seeds: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega_khz: 20.0,
            nu_khz: 1000.0,
            eta: vec![0.1],
            delta_zeeman_khz: Vec::new(),
            n_max: 0,
            tail_tol: 1e-10,
            sideband_omega_khz: 50.0,
            sideband: "blue".into(),
            nbar: 1.0,
            model: "weak".into(),
            time_start_us: 0.0,
            time_step_us: 2.0,
            time_stop_us: 200.0,
            shots: 100,
            probe_shots: 2000,
            threshold: ionthermo::shots::SCAN_THRESHOLD,
            eps_eg: 0.0,
            eps_ge: 0.0,
            beta: ionthermo::estimators::DEFAULT_BETA,
            max_nbar: 30.0,
            n_sweep: 120,
            nbar0: 1.0,
            rate_per_us: 0.073,
            delays_us: vec![0.0, 20.0, 40.0, 60.0, 80.0],
            repeats: 20,
            nbar_grid: vec![0.1, 1.0, 5.0],
            estimator: "point".into(),
            seeds: 100,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Fock space for thermal states up to `nbar`.
    pub fn fock_for(&self, nbar: f64) -> Result<FockSpace, CliError> {
        Ok(if self.n_max > 0 {
            FockSpace::new(self.n_max)?
        } else {
            FockSpace::for_nbar(nbar, self.tail_tol)?
        })
    }

    /// Bichromatic configuration with both tones detuned by `ν`.
    pub fn trap(&self, fock: FockSpace) -> Result<TrapConfig, CliError> {
        let mut cfg = TrapConfig::resonant(
            khz_to_rad_s(self.omega_khz),
            khz_to_rad_s(self.nu_khz),
            self.eta.clone(),
            fock,
        );
        if !self.delta_zeeman_khz.is_empty() {
            if self.delta_zeeman_khz.len() != self.eta.len() {
                return Err(CliError::Usage("delta_zeeman_khz needs one entry per ion".into()));
            }
            cfg.delta_zeeman = self.delta_zeeman_khz.iter().map(|&d| khz_to_rad_s(d)).collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Single-tone sideband configuration for the fitting Hamiltonian.
    pub fn sideband_trap(&self, sideband: &str) -> Result<TrapConfig, CliError> {
        let nu = khz_to_rad_s(self.nu_khz);
        let delta = match sideband {
            "blue" => nu,
            "red" => -nu,
            other => return Err(CliError::Usage(format!("unknown sideband '{other}' (blue | red)"))),
        };
        let n_max = if self.n_max > 0 {
            self.n_max
        } else {
            self.n_sweep + ionthermo::dynamics::SWEEP_MARGIN
        };
        let mut cfg = self.trap(FockSpace::new(n_max)?)?.with_detuning(delta);
        cfg.omega = khz_to_rad_s(self.sideband_omega_khz);
        Ok(cfg)
    }

    pub fn times_us(&self) -> Result<Vec<f64>, CliError> {
        Ok(self.schedule(0)?.iter().map(|s| s.time_us).collect())
    }

    pub fn schedule(&self, reps: usize) -> Result<Vec<SchedulePoint>, CliError> {
        Ok(uniform_schedule(self.time_start_us, self.time_step_us, self.time_stop_us, reps)?)
    }

    pub fn readout(&self) -> ReadoutModel {
        ReadoutModel {
            eps_eg: self.eps_eg,
            eps_ge: self.eps_ge,
        }
    }

    pub fn plan(&self) -> ProtocolPlan {
        ProtocolPlan {
            scan_start_us: self.time_start_us,
            scan_step_us: self.time_step_us,
            scan_stop_us: self.time_stop_us,
            scan_shots: self.shots,
            probe_shots: self.probe_shots,
            threshold: self.threshold,
            readout: self.readout(),
        }
    }

    pub fn fit(&self) -> FitConfig {
        FitConfig {
            beta: self.beta,
            max_nbar: self.max_nbar,
            ..FitConfig::default()
        }
    }

    pub fn heating(&self) -> HeatingSetup {
        HeatingSetup {
            nbar0: self.nbar0,
            rate: self.rate_per_us,
            delays_us: self.delays_us.clone(),
        }
    }

    /// Largest `n̄` a heating run reaches.
    pub fn heating_nbar_max(&self) -> f64 {
        let setup = self.heating();
        self.delays_us
            .iter()
            .map(|&d| setup.nbar_at(d))
            .fold(self.nbar0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions_invert() {
        for f in [0.0, 1.0, 20.0, 1234.5] {
            assert!((rad_s_to_khz(khz_to_rad_s(f)) - f).abs() <= 1e-12 * f.max(1.0));
        }
        assert!((khz_to_rad_s(1.0) - 6283.185307179586).abs() < 1e-9);
        assert_eq!(s_to_us(us_to_s(2.0)), 2.0);
        assert_eq!(us_to_s(200.0), 2e-4);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn partial_files_take_defaults_and_unknown_keys_fail() {
        let c = RunConfig::from_toml("nbar = 3.0\neta = [0.1, 0.1]").unwrap();
        assert_eq!(c.nbar, 3.0);
        assert_eq!(c.omega_khz, 20.0);
        assert!(RunConfig::from_toml("omega = 3.0").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig { nbar: 2.0, ..RunConfig::default() };
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn grid_has_101_points() {
        assert_eq!(RunConfig::default().times_us().unwrap().len(), 101);
    }

    #[test]
    fn sideband_detuning_sign() {
        let c = RunConfig::default();
        let blue = c.sideband_trap("blue").unwrap();
        let red = c.sideband_trap("red").unwrap();
        assert!(blue.delta_laser[0] > 0.0 && red.delta_laser[0] < 0.0);
        assert_eq!(blue.fock.n_max(), 135);
        assert!(c.sideband_trap("green").is_err());
    }
}
