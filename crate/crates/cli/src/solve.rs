//! Method dispatch and the validity rules that gate each solver.

use qcavity_core::dde::{integrate_cavity, integrate_full_chain, ChainLayout, IntegratorConfig};
use qcavity_core::series::{required_terms, series_c0, SeriesOptions};
use qcavity_core::spectral::{
    detuned_general_c0, macroscopic_c0, rabi_approx, spectral_main, DEFAULT_POLE_COUNT,
};
use qcavity_core::{CavityParams, Method, Trajectory};

use crate::error::{CliError, Result};

/// Largest mirror size the atom-by-atom integrator is offered for.
pub const FULL_CHAIN_MAX_ATOMS: u32 = 200;

/// Why `method` should not be used for these parameters, if it should not.
pub fn invalid_reason(method: Method, params: &CavityParams, t_max: f64) -> Option<String> {
    let tau = params.delay_tau;
    let n = params.n_atoms;
    match method {
        Method::Dde => None,
        Method::Series => {
            let k = required_terms(tau, t_max);
            let limit = SeriesOptions::default().k_limit;
            (k > limit).then(|| format!("needs {k} series terms, limit is {limit}"))
        }
        Method::Spectral => (params.n() * tau < 10.0).then(|| {
            format!(
                "macroscopic poles need N >= 10/tau = {:.0}",
                (10.0 / tau).ceil()
            )
        }),
        Method::SpectralMain | Method::Approx | Method::Detuned => {
            if tau > 0.1 {
                Some(format!("closed forms need tau << 1 (tau = {tau})"))
            } else if n < 10 {
                Some(format!("closed forms need N >> 1 (N = {n})"))
            } else {
                None
            }
        }
        Method::FullChain => (n > FULL_CHAIN_MAX_ATOMS).then(|| {
            format!("full chain limited to {FULL_CHAIN_MAX_ATOMS} atoms per mirror (N = {n})")
        }),
    }
}

/// Runs `method` on `t_grid` (which starts at 0 and is sorted).
pub fn solve(method: Method, params: &CavityParams, t_grid: &[f64]) -> Result<Trajectory> {
    let t_max = t_grid.last().copied().unwrap_or(0.0);
    let traj = match method {
        Method::Dde => integrate_cavity(
            params,
            &IntegratorConfig::new(t_max).with_output_times(t_grid.to_vec()),
        )?,
        Method::FullChain => {
            let layout = ChainLayout::symmetric(
                params.n_atoms,
                params.delay_tau,
                params.phase_offset,
                1,
                1,
            )?;
            let cfg = IntegratorConfig::new(t_max).with_output_times(t_grid.to_vec());
            integrate_full_chain(&layout, params.env_rate, &cfg)?.into_trajectory(&layout, *params)
        }
        Method::Series => series_c0(params, t_grid, &SeriesOptions::default())?,
        Method::Spectral => {
            if let Some(reason) = invalid_reason(Method::Spectral, params, t_max) {
                return Err(CliError::config(format!("spectral: {reason}")));
            }
            macroscopic_c0(params, t_grid, DEFAULT_POLE_COUNT)?
        }
        Method::SpectralMain => spectral_main(params, t_grid)?,
        Method::Approx => rabi_approx(params, t_grid)?,
        Method::Detuned => detuned_general_c0(params, t_grid)?,
    };
    Ok(traj)
}
