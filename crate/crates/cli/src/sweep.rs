//! One-parameter sweeps with fitted decay rates and frequencies, in long format.

use qcavity_core::analysis::{fit_envelope, fit_frequency};
use qcavity_core::CavityParams;
use rayon::prelude::*;

use crate::cli::{Axis, Context, SweepArgs};
use crate::config::{resolve_method, GridSpec, MethodChoice, ParamSpec};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};
use crate::solve::solve;

pub const SWEEP_COLUMNS: [&str; 6] = ["index", "axis", "value", "statistic", "result", "note"];

/// Axis values, arithmetic or geometric, including both ends.
pub fn axis_values(from: f64, to: f64, count: usize, log: bool) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::config("sweep bounds must be finite"));
    }
    if log && !(from > 0.0 && to > 0.0) {
        return Err(CliError::config("logarithmic sweeps need positive bounds"));
    }
    let at = |f: f64| {
        if log {
            (from.ln() + f * (to.ln() - from.ln())).exp()
        } else {
            from + f * (to - from)
        }
    };
    Ok(match count {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n)
            .map(|i| {
                if i == n - 1 {
                    to
                } else {
                    at(i as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    })
}

/// The parameter set at one axis value.
pub fn apply_axis(base: &ParamSpec, axis: Axis, value: f64) -> Result<ParamSpec> {
    let mut spec = base.clone();
    match axis {
        Axis::NAtoms => {
            let n = value.round();
            if !(n >= 1.0 && n <= u32::MAX as f64) {
                return Err(CliError::config(format!(
                    "n_atoms = {value} is out of range"
                )));
            }
            spec.n_atoms = Some(n as u32);
        }
        Axis::DelayTau => {
            spec.delay_tau = Some(value);
            spec.physical = None;
        }
        Axis::PhaseOffset => spec.phase_offset = Some(value),
        Axis::EnvRate => spec.env_rate = Some(value),
    }
    Ok(spec)
}

/// Generalised Rabi frequency √(Ω² + (Δ/2)²).
fn rabi_theory(p: &CavityParams) -> f64 {
    let omega = p.figures_of_merit().rabi_freq;
    let half = 0.5 * p.derive_groups().detuning;
    (omega * omega + half * half).sqrt()
}

/// One statistic row: `(name, value, note)`.
pub type Statistic = (&'static str, Cell, String);

/// Statistic rows for one sweep point.
pub fn point_statistics(
    spec: &ParamSpec,
    choice: MethodChoice,
    grid: &GridSpec,
) -> Result<Vec<Statistic>> {
    let p = spec.resolve()?;
    let res = resolve_method(choice, &p, grid.t_max);
    let traj = solve(res.method, &p, &grid.times())?;
    let amp: Vec<f64> = traj.samples.iter().map(|s| s.c0.norm()).collect();
    let tag = format!("method={}", res.method);
    let fitted = |v: Option<f64>, what: &str| match v {
        Some(x) => (Cell::Num(x), tag.clone()),
        None => (Cell::Empty, format!("{tag}; too few peaks to fit {what}")),
    };
    let env = fit_envelope(&traj.t_grid, &amp);
    let (rate, rate_note) = fitted(env.map(|e| 2.0 * e.rate), "envelope");
    let (freq, freq_note) = fitted(fit_frequency(&traj.t_grid, &amp), "frequency");
    let f = p.figures_of_merit();
    Ok(vec![
        ("envelope_rate", rate, rate_note),
        ("frequency", freq, freq_note),
        (
            "kappa_plus_env",
            Cell::Num(f.kappa + p.env_rate),
            "theory".into(),
        ),
        ("rabi_theory", Cell::Num(rabi_theory(&p)), "theory".into()),
        (
            "p0_final",
            Cell::Num(traj.samples.last().map_or(f64::NAN, |s| s.p0())),
            tag,
        ),
    ])
}

pub fn sweep(ctx: &Context, args: &SweepArgs) -> Result<()> {
    let base = ctx.params(&args.params)?;
    let grid = ctx.grid(&args.grid)?;
    let choice = ctx.method(args.method);
    let values = axis_values(args.from, args.to, args.count, args.log)?;

    let results: Vec<(f64, Result<Vec<Statistic>>)> = values
        .par_iter()
        .map(|&v| {
            let spec = apply_axis(&base, args.axis, v);
            let value = match (&spec, args.axis) {
                (Ok(s), Axis::NAtoms) => s.n_atoms.map_or(v, f64::from),
                _ => v,
            };
            (
                value,
                spec.and_then(|s| point_statistics(&s, choice, &grid)),
            )
        })
        .collect();

    let mut table = Table::new(&SWEEP_COLUMNS);
    ctx.header(&mut table, "sweep");
    table
        .meta("axis", args.axis.label())
        .meta_f64("from", args.from)
        .meta_f64("to", args.to)
        .meta("count", args.count)
        .meta("spacing", if args.log { "log" } else { "linear" })
        .meta("method", choice)
        .meta_f64("t_max", grid.t_max)
        .meta("n_points", grid.n_points)
        .meta(
            "envelope_rate",
            "probability decay rate, twice the log-slope of the |c0| peaks",
        );
    let axis = args.axis.label();
    for (i, (value, res)) in results.into_iter().enumerate() {
        match res {
            Ok(stats) => {
                for (name, cell, note) in stats {
                    table.push(vec![
                        i.into(),
                        axis.into(),
                        value.into(),
                        name.into(),
                        cell,
                        note.into(),
                    ]);
                }
            }
            Err(e) => table.push(vec![
                i.into(),
                axis.into(),
                value.into(),
                "error".into(),
                Cell::Empty,
                e.to_string().into(),
            ]),
        }
    }
    ctx.write(&table)
}
