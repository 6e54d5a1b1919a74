//! Parameter space, dimensionless groups, figures of merit and the
//! experimental presets.
//!
//! Everything is expressed with the waveguide decay rate γ set to 1; the
//! presets convert laboratory units once, here.

use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::math::sqrt;
use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 2.998e8;

/// A cavity configuration: central atom between two mirrors of `n_atoms` atoms each.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CavityParams {
    /// Waveguide decay rate. Solvers work in units where this is 1.
    pub gamma: f64,
    /// Atoms per mirror, N.
    pub n_atoms: u32,
    /// One-way delay γd/v_g.
    pub delay_tau: f64,
    /// φ in θ = (2n+1)π + φ.
    pub phase_offset: f64,
    /// Environment decay γ₀/γ.
    pub env_rate: f64,
}

impl CavityParams {
    /// Resonant, lossless cavity.
    pub fn new(n_atoms: u32, delay_tau: f64) -> Result<Self> {
        let p = CavityParams {
            gamma: 1.0,
            n_atoms,
            delay_tau,
            phase_offset: 0.0,
            env_rate: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_phase(mut self, phase_offset: f64) -> Result<Self> {
        self.phase_offset = phase_offset;
        self.validate()?;
        Ok(self)
    }

    pub fn with_env_rate(mut self, env_rate: f64) -> Result<Self> {
        self.env_rate = env_rate;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::config("gamma must be positive and finite"));
        }
        if self.n_atoms == 0 {
            return Err(Error::config("n_atoms must be at least 1"));
        }
        if !(self.delay_tau.is_finite() && self.delay_tau > 0.0) {
            return Err(Error::config("delay_tau must be positive and finite"));
        }
        if !(self.env_rate.is_finite() && self.env_rate >= 0.0) {
            return Err(Error::config("env_rate must be non-negative and finite"));
        }
        if !(self.phase_offset.is_finite() && self.phase_offset.abs() < PI) {
            return Err(Error::config("phase_offset must satisfy |phi| < pi"));
        }
        let a = self.n() * self.delay_tau;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::config("N * tau must be finite and positive"));
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> f64 {
        self.n_atoms as f64
    }

    pub fn derive_groups(&self) -> DerivedGroups {
        DerivedGroups {
            a: self.n() * self.delay_tau,
            detuning: self.phase_offset / self.delay_tau,
            half_trip: 0.5 * self.delay_tau,
            round_trip: self.delay_tau,
        }
    }

    pub fn figures_of_merit(&self) -> FiguresOfMerit {
        let a = self.n() * self.delay_tau;
        let kappa = 1.0 / ((1.0 + a) * (1.0 + a));
        let rabi_freq = sqrt(2.0 * self.n() / (1.0 + a));
        let critical_n = 1.0 / self.delay_tau;
        let cooperativity = if self.env_rate == 0.0 {
            f64::INFINITY
        } else {
            2.0 * self.n() * (1.0 + a) / self.env_rate
        };
        FiguresOfMerit {
            kappa,
            rabi_freq,
            critical_n,
            critical_n_rounded: crate::math::round(critical_n) as u64,
            cooperativity,
            cycles_ratio: rabi_freq / (kappa + self.env_rate),
        }
    }
}

/// Combinations of the inputs that the solvers actually use.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivedGroups {
    /// Key parameter Nγd/v_g.
    pub a: f64,
    /// Δ/γ = φ/τ.
    pub detuning: f64,
    /// d/(2v_g), the atom-to-mirror travel time.
    pub half_trip: f64,
    /// d/v_g.
    pub round_trip: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiguresOfMerit {
    pub kappa: f64,
    pub rabi_freq: f64,
    pub critical_n: f64,
    pub critical_n_rounded: u64,
    /// `f64::INFINITY` when there is no environment loss.
    pub cooperativity: f64,
    pub cycles_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Platform {
    Cesium,
    QuantumDot,
    Superconducting,
}

impl Platform {
    pub const ALL: [Platform; 3] = [
        Platform::Cesium,
        Platform::QuantumDot,
        Platform::Superconducting,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Platform::Cesium => "cesium",
            Platform::QuantumDot => "quantum_dot",
            Platform::Superconducting => "superconducting",
        }
    }

    pub fn preset(self) -> PlatformPreset {
        match self {
            Platform::Cesium => PlatformPreset {
                label: self,
                omega_a_ghz: 2.1e6,
                two_gamma_mhz: 32.0,
                gamma_ratio: 1.1,
                vg_over_c: 0.1,
                d_mm: 1.0,
                tau: 5.3e-4,
            },
            Platform::QuantumDot => PlatformPreset {
                label: self,
                omega_a_ghz: 2.0e6,
                two_gamma_mhz: 6.2e3,
                gamma_ratio: 63.0,
                vg_over_c: 0.01,
                d_mm: 1e-2,
                tau: 1.0e-2,
            },
            // Only a lower bound (> 20) is known for the loss ratio; equality is used.
            Platform::Superconducting => PlatformPreset {
                label: self,
                omega_a_ghz: 7.1,
                two_gamma_mhz: 6e2,
                gamma_ratio: 20.0,
                vg_over_c: 0.5,
                d_mm: 10.0,
                tau: 2e-2,
            },
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cesium" | "cs" => Ok(Platform::Cesium),
            "quantum_dot" | "qd" => Ok(Platform::QuantumDot),
            "superconducting" | "sc" => Ok(Platform::Superconducting),
            other => Err(Error::Config(alloc::format!("unknown preset '{other}'"))),
        }
    }
}

/// One row of laboratory parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlatformPreset {
    pub label: Platform,
    pub omega_a_ghz: f64,
    pub two_gamma_mhz: f64,
    /// 2γ/γ₀.
    pub gamma_ratio: f64,
    pub vg_over_c: f64,
    pub d_mm: f64,
    /// Stored γd/v_g.
    pub tau: f64,
}

impl PlatformPreset {
    /// γd/v_g recomputed from the laboratory columns, reading MHz as 10⁶ s⁻¹.
    pub fn recomputed_tau(&self) -> f64 {
        let gamma = 0.5 * self.two_gamma_mhz * 1e6;
        gamma * self.d_mm * 1e-3 / (self.vg_over_c * SPEED_OF_LIGHT)
    }

    /// Relative mismatch between the stored and recomputed delay.
    pub fn tau_mismatch(&self) -> f64 {
        (self.recomputed_tau() - self.tau).abs() / self.tau
    }

    /// γ₀/γ = 2/(2γ/γ₀).
    pub fn env_rate(&self) -> f64 {
        2.0 / self.gamma_ratio
    }

    pub fn critical_n(&self) -> f64 {
        1.0 / self.tau
    }

    pub fn params(&self, n_atoms: u32) -> Result<CavityParams> {
        CavityParams::new(n_atoms, self.tau)?.with_env_rate(self.env_rate())
    }

    /// Cavity parameters at N = round(N_c).
    pub fn params_at_critical(&self) -> Result<CavityParams> {
        self.params(crate::math::round(self.critical_n()) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_groups_examples() {
        let p = CavityParams::new(100, 0.01).unwrap();
        let g = p.derive_groups();
        assert_eq!(g.a, 1.0);
        assert_eq!(g.detuning, 0.0);
        assert_eq!(g.half_trip, 0.005);

        let g = CavityParams::new(100, 0.0002).unwrap().derive_groups();
        assert!((g.a - 0.02).abs() < 1e-15);

        let g = p.with_phase(PI / 10.0).unwrap().derive_groups();
        assert!((g.detuning - 10.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(CavityParams::new(0, 0.1).is_err());
        assert!(CavityParams::new(1, 0.0).is_err());
        assert!(CavityParams::new(1, f64::NAN).is_err());
        assert!(CavityParams::new(1, 0.1).unwrap().with_phase(PI).is_err());
        assert!(CavityParams::new(1, 0.1)
            .unwrap()
            .with_env_rate(-0.1)
            .is_err());
    }

    #[test]
    fn transition_point_figures() {
        let f = CavityParams::new(100, 0.01).unwrap().figures_of_merit();
        assert_eq!(f.kappa, 0.25);
        assert!((f.rabi_freq - 10.0).abs() < 1e-12);
        assert!((f.critical_n - 100.0).abs() < 1e-9);
        assert!(f.cooperativity.is_infinite());
    }

    #[test]
    fn markov_and_macroscopic_limits() {
        let f = CavityParams::new(50, 1e-12).unwrap().figures_of_merit();
        assert!((f.kappa - 1.0).abs() < 1e-9);
        assert!((f.rabi_freq - 10.0).abs() < 1e-8);

        let tau = 0.02;
        let f = CavityParams::new(10_000_000, tau)
            .unwrap()
            .figures_of_merit();
        assert!((f.rabi_freq - sqrt(2.0 / tau)).abs() / sqrt(2.0 / tau) < 1e-5);
    }

    #[test]
    fn presets_round_trip_labels() {
        for p in Platform::ALL {
            assert_eq!(p.label().parse::<Platform>().unwrap(), p);
            assert_eq!(p.preset().label, p);
        }
        assert!("rubidium".parse::<Platform>().is_err());
    }

    #[test]
    fn preset_delays_are_consistent() {
        for p in Platform::ALL {
            let pre = p.preset();
            assert!(pre.tau_mismatch() < 0.10, "{p}: {}", pre.recomputed_tau());
        }
    }

    #[test]
    fn cesium_critical_size() {
        let pre = Platform::Cesium.preset();
        assert_eq!(pre.tau, 5.3e-4);
        assert_eq!(pre.gamma_ratio, 1.1);
        assert_eq!(crate::math::round(pre.critical_n()), 1887.0);
    }

    #[test]
    fn cycles_ratios_at_critical_size() {
        // Ω/(κ+γ₀) at N = N_c with κ = 1/4.
        let want = [
            (Platform::Cesium, 21.0),
            (Platform::QuantumDot, 35.5),
            (Platform::Superconducting, 20.2),
        ];
        for (p, w) in want {
            let f = p.preset().params_at_critical().unwrap().figures_of_merit();
            assert!(
                (f.cycles_ratio - w).abs() / w < 0.01,
                "{p}: {}",
                f.cycles_ratio
            );
        }
    }

    proptest::proptest! {
        #[test]
        fn critical_n_times_tau_is_one(tau in 1e-6f64..10.0) {
            let f = CavityParams::new(1, tau).unwrap().figures_of_merit();
            proptest::prop_assert!((f.critical_n * tau - 1.0).abs() < 1e-15);
        }

        #[test]
        fn kappa_decreases_with_n(tau in 1e-5f64..1.0, n in 1u32..100_000) {
            let k1 = CavityParams::new(n, tau).unwrap().figures_of_merit().kappa;
            let k2 = CavityParams::new(n + 1, tau).unwrap().figures_of_merit().kappa;
            proptest::prop_assert!(k2 < k1);
            proptest::prop_assert!(k1 > 0.0 && k1 <= 1.0);
        }
    }
}
