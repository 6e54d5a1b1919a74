//! The single-run subcommands.

use qcavity_core::analysis::Regime;
use qcavity_core::mirror::{
    bragg_spacing, chain_scattering, ensemble_statistics, half_max_detuning,
    lorentzian_reflectance, AtomChain, DisorderSpec, DEFAULT_OMEGA_A,
};
use qcavity_core::spectral::macroscopic_poles;
use qcavity_core::{CavityParams, Platform};
use rayon::prelude::*;

use crate::cli::{Context, GridArgs, ParamArgs, ReflectanceArgs};
use crate::config::{resolve_method, MethodChoice, ParamSpec};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};
use crate::solve::solve;
use crate::svg::{line_plot, Series};

pub const SIMULATE_COLUMNS: [&str; 6] = ["t_gamma", "re_c0", "im_c0", "p0", "re_cm", "im_cm"];
pub const REFLECTANCE_COLUMNS: [&str; 2] = ["delta_over_gamma", "reflectance"];
pub const DISORDER_COLUMNS: [&str; 3] = ["delta_over_gamma", "reflectance", "stderr"];
pub const POLE_COLUMNS: [&str; 5] = ["index", "re_s", "im_s", "re_weight", "im_weight"];
pub const FOM_COLUMNS: [&str; 2] = ["quantity", "value"];
pub const PRESET_COLUMNS: [&str; 12] = [
    "platform",
    "omega_a_ghz",
    "two_gamma_mhz",
    "gamma_ratio",
    "vg_over_c",
    "d_mm",
    "tau",
    "recomputed_tau",
    "tau_mismatch",
    "env_rate",
    "critical_n",
    "cycles_ratio_at_critical",
];

/// How preset rates are read; recorded wherever a preset is used.
const RATE_CONVENTION: &str = "MHz columns read as ordinary rates (1e6 1/s)";

/// Inputs and the derived quantities every dynamics table carries.
pub fn param_metadata(table: &mut Table, spec: &ParamSpec, p: &CavityParams) {
    if let Some(preset) = &spec.preset {
        table
            .meta("preset", preset)
            .meta("rate_convention", RATE_CONVENTION);
    }
    let g = p.derive_groups();
    let f = p.figures_of_merit();
    table
        .meta("n_atoms", p.n_atoms)
        .meta_f64("delay_tau", p.delay_tau)
        .meta_f64("phase_offset", p.phase_offset)
        .meta_f64("env_rate", p.env_rate)
        .meta_f64("a", g.a)
        .meta_f64("detuning", g.detuning)
        .meta("regime", Regime::classify(g.a))
        .meta_f64("kappa", f.kappa)
        .meta_f64("rabi_freq", f.rabi_freq)
        .meta_f64("probability_envelope_rate", f.kappa + p.env_rate)
        .meta_f64("amplitude_envelope_rate", 0.5 * (f.kappa + p.env_rate));
}

pub fn simulate(
    ctx: &Context,
    params: &ParamArgs,
    grid: &GridArgs,
    method: Option<MethodChoice>,
) -> Result<()> {
    let spec = ctx.params(params)?;
    let p = spec.resolve()?;
    let g = ctx.grid(grid)?;
    let res = resolve_method(ctx.method(method), &p, g.t_max);
    let traj = solve(res.method, &p, &g.times())?;

    let mut table = Table::new(&SIMULATE_COLUMNS);
    ctx.header(&mut table, "simulate");
    param_metadata(&mut table, &spec, &p);
    table
        .meta("method", res.method)
        .meta("method_resolution", &res.reason);
    table
        .meta_f64("t_max", g.t_max)
        .meta("n_points", g.n_points);
    if let Some(dt) = traj.meta.dt {
        table.meta_f64("dt", dt);
    }
    if let Some(e) = traj.meta.error_bound {
        table.meta_f64("error_bound", e);
    }
    for w in &traj.meta.warnings {
        table.meta("warning", w);
    }
    for (t, s) in traj.t_grid.iter().zip(&traj.samples) {
        let (re_cm, im_cm) =
            s.cm.map_or((Cell::Empty, Cell::Empty), |c| (c.re.into(), c.im.into()));
        table.push(vec![
            (*t).into(),
            s.c0.re.into(),
            s.c0.im.into(),
            s.p0().into(),
            re_cm,
            im_cm,
        ]);
    }
    ctx.write(&table)?;

    if ctx.svg.is_some() {
        let p0 = traj.p0();
        let rate = p.figures_of_merit().kappa + p.env_rate;
        let envelope: Vec<f64> = traj.t_grid.iter().map(|t| (-rate * t).exp()).collect();
        let title = format!("{} (N = {}, tau = {})", res.method, p.n_atoms, p.delay_tau);
        ctx.write_svg(&line_plot(
            &title,
            "γt",
            "P0",
            &[
                Series {
                    label: "P0",
                    x: &traj.t_grid,
                    y: &p0,
                    color: "#c0392b",
                    dashed: false,
                },
                Series {
                    label: "exp(-(κ+γ0)t)",
                    x: &traj.t_grid,
                    y: &envelope,
                    color: "black",
                    dashed: true,
                },
            ],
        ))?;
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || CliError::config(format!("expected lo:hi, got '{s}'"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn reflectance(ctx: &Context, args: &ReflectanceArgs) -> Result<()> {
    let n = args
        .n_atoms
        .or(ctx.config.params.n_atoms)
        .ok_or_else(|| CliError::config("--n-atoms is required"))?;
    if n == 0 {
        return Err(CliError::config("--n-atoms must be at least 1"));
    }
    if args.bragg_order == 0 {
        return Err(CliError::config("--bragg-order must be at least 1"));
    }
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
        return Err(CliError::config("--sigma must be non-negative"));
    }
    let (lo, hi) = match &args.delta_range {
        Some(s) => parse_range(s)?,
        None => (-3.0 * n as f64, 3.0 * n as f64),
    };
    let deltas = linspace(lo, hi, args.points);
    let disorder = args.sigma > 0.0;

    let mut table = Table::new(if disorder {
        &DISORDER_COLUMNS
    } else {
        &REFLECTANCE_COLUMNS
    });
    ctx.header(&mut table, "reflectance");
    table
        .meta("n_atoms", n)
        .meta("bragg_order", args.bragg_order);
    let chain = AtomChain::bragg(n, args.bragg_order, DEFAULT_OMEGA_A, 0.0)?;
    if let Ok(w) = half_max_detuning(&chain, 10.0 * n as f64 + 10.0) {
        table.meta_f64("half_width", w);
    }
    table.meta_f64("lorentzian_half_width", n as f64);

    let reflect: Vec<f64> = if disorder {
        if args.samples == 0 {
            return Err(CliError::config("--samples must be at least 1"));
        }
        let spec = DisorderSpec {
            n_atoms: n,
            spacing: bragg_spacing(args.bragg_order, DEFAULT_OMEGA_A),
            sigma: args.sigma,
            omega_a: DEFAULT_OMEGA_A,
            seed: ctx.seed,
        };
        let rows = (0..args.samples)
            .into_par_iter()
            .map(|s| spec.sample_reflectance(s, &deltas))
            .collect::<qcavity_core::Result<Vec<_>>>()?;
        let avg = ensemble_statistics(&rows);
        table
            .meta_f64("sigma", args.sigma)
            .meta("samples", avg.samples)
            .meta("seed", ctx.seed)
            .meta("averaging", "intensity");
        for ((d, m), e) in deltas.iter().zip(&avg.mean).zip(&avg.stderr) {
            table.push(vec![(*d).into(), (*m).into(), (*e).into()]);
        }
        avg.mean
    } else {
        let r = deltas
            .iter()
            .map(|&d| chain_scattering(&chain, d).map(|s| s.reflectance))
            .collect::<qcavity_core::Result<Vec<_>>>()?;
        for (d, v) in deltas.iter().zip(&r) {
            table.push(vec![(*d).into(), (*v).into()]);
        }
        r
    };
    ctx.write(&table)?;

    if ctx.svg.is_some() {
        let lorentz: Vec<f64> = deltas
            .iter()
            .map(|&d| lorentzian_reflectance(d, n))
            .collect();
        ctx.write_svg(&line_plot(
            &format!("Mirror reflectance (N = {n})"),
            "Δ/γ",
            "|r|²",
            &[
                Series {
                    label: "reflectance",
                    x: &deltas,
                    y: &reflect,
                    color: "#2c3e50",
                    dashed: false,
                },
                Series {
                    label: "Lorentzian",
                    x: &deltas,
                    y: &lorentz,
                    color: "#c0392b",
                    dashed: true,
                },
            ],
        ))?;
    }
    Ok(())
}

pub fn poles(ctx: &Context, params: &ParamArgs, count: usize) -> Result<()> {
    let spec = ctx.params(params)?;
    let tau = spec.tau()?;
    let phi = spec.phase_offset.unwrap_or(0.0);
    let set = macroscopic_poles(tau, phi / tau, count)?;
    let mut table = Table::new(&POLE_COLUMNS);
    ctx.header(&mut table, "poles");
    let residual = (0..set.len()).map(|i| set.residual(i)).fold(0.0, f64::max);
    table
        .meta_f64("delay_tau", tau)
        .meta_f64("phase_offset", phi)
        .meta("count_per_sign", count)
        .meta_f64("tail_bound", set.tail_bound)
        .meta_f64("non_main_weight", set.non_main_weight())
        .meta_f64("max_relative_residual", residual);
    for ((j, s), w) in set.labels.iter().zip(&set.poles).zip(&set.weights) {
        table.push(vec![
            (*j).into(),
            s.re.into(),
            s.im.into(),
            w.re.into(),
            w.im.into(),
        ]);
    }
    ctx.write(&table)
}

pub fn fom(ctx: &Context, params: &ParamArgs) -> Result<()> {
    let spec = ctx.params(params)?;
    let p = spec.resolve()?;
    let g = p.derive_groups();
    let f = p.figures_of_merit();
    let mut table = Table::new(&FOM_COLUMNS);
    ctx.header(&mut table, "fom");
    if let Some(preset) = &spec.preset {
        table
            .meta("preset", preset)
            .meta("rate_convention", RATE_CONVENTION);
    }
    let rows: [(&str, Cell); 15] = [
        ("n_atoms", (p.n_atoms as i64).into()),
        ("delay_tau", p.delay_tau.into()),
        ("phase_offset", p.phase_offset.into()),
        ("env_rate", p.env_rate.into()),
        ("a", g.a.into()),
        ("detuning", g.detuning.into()),
        ("half_trip", g.half_trip.into()),
        ("round_trip", g.round_trip.into()),
        ("kappa", f.kappa.into()),
        ("rabi_freq", f.rabi_freq.into()),
        ("critical_n", f.critical_n.into()),
        ("critical_n_rounded", (f.critical_n_rounded as i64).into()),
        ("cooperativity", f.cooperativity.into()),
        ("cycles_ratio", f.cycles_ratio.into()),
        ("regime", Regime::classify(g.a).label().into()),
    ];
    for (q, v) in rows {
        table.push(vec![q.into(), v]);
    }
    ctx.write(&table)
}

pub fn presets(ctx: &Context) -> Result<()> {
    let mut table = Table::new(&PRESET_COLUMNS);
    ctx.header(&mut table, "presets");
    table.meta("rate_convention", RATE_CONVENTION);
    for platform in Platform::ALL {
        let pr = platform.preset();
        let cycles = pr.params_at_critical()?.figures_of_merit().cycles_ratio;
        table.push(vec![
            platform.label().into(),
            pr.omega_a_ghz.into(),
            pr.two_gamma_mhz.into(),
            pr.gamma_ratio.into(),
            pr.vg_over_c.into(),
            pr.d_mm.into(),
            pr.tau.into(),
            pr.recomputed_tau().into(),
            pr.tau_mismatch().into(),
            pr.env_rate().into(),
            pr.critical_n().into(),
            cycles.into(),
        ]);
    }
    ctx.write(&table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-10:10").unwrap(), (-10.0, 10.0));
        assert_eq!(parse_range(" 1 : 2 ").unwrap(), (1.0, 2.0));
        for bad in ["3:1", "1", "a:b", "1:inf"] {
            assert_eq!(parse_range(bad).unwrap_err().exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn linspace_hits_both_ends() {
        assert_eq!(linspace(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(linspace(0.0, 1.0, 1), vec![0.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
