//! Cross-method comparison on a shared grid, judged against regime tolerances.

use qcavity_core::analysis::{pair_tolerance, probability_distances, Distances, Regime};
use qcavity_core::{CavityParams, Method, Trajectory};
use rayon::prelude::*;

use crate::cli::{Context, GridArgs, ParamArgs};
use crate::commands::param_metadata;
use crate::config::{resolve_method, GridSpec, MethodChoice};
use crate::error::{CliError, Result};
use crate::output::Table;
use crate::solve::{invalid_reason, solve};
use crate::svg::{line_plot, Series};

pub const COMPARE_COLUMNS: [&str; 6] = ["method_a", "method_b", "sup", "l2", "tolerance", "within"];

/// One compared pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub a: Method,
    pub b: Method,
    pub distances: Distances,
    pub tolerance: f64,
}

impl PairResult {
    pub fn within(&self) -> bool {
        self.distances.sup <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub regime: Regime,
    /// Requested methods that were not run, with the reason.
    pub skipped: Vec<(Method, String)>,
    pub trajectories: Vec<Trajectory>,
    pub pairs: Vec<PairResult>,
}

/// Runs every valid method once and compares `|c0|²` for each listed pair.
pub fn compare_methods(
    params: &CavityParams,
    choices: &[MethodChoice],
    grid: &GridSpec,
) -> Result<CompareReport> {
    let regime = Regime::classify(params.derive_groups().a);
    let mut listed = Vec::new();
    let mut skipped = Vec::new();
    for &c in choices {
        let m = resolve_method(c, params, grid.t_max).method;
        match invalid_reason(m, params, grid.t_max) {
            Some(why) => {
                if !skipped.iter().any(|(s, _)| *s == m) {
                    skipped.push((m, why));
                }
            }
            None => listed.push(m),
        }
    }
    if listed.len() < 2 {
        let why: Vec<String> = skipped.iter().map(|(m, r)| format!("{m}: {r}")).collect();
        return Err(CliError::config(format!(
            "compare needs at least two methods valid for these parameters (skipped: {})",
            if why.is_empty() {
                "none".into()
            } else {
                why.join("; ")
            }
        )));
    }
    let mut unique: Vec<Method> = Vec::new();
    for &m in &listed {
        if !unique.contains(&m) {
            unique.push(m);
        }
    }
    let times = grid.times();
    let trajectories = unique
        .par_iter()
        .map(|&m| solve(m, params, &times))
        .collect::<Result<Vec<Trajectory>>>()?;
    let traj = |m: Method| &trajectories[unique.iter().position(|&u| u == m).unwrap()];
    let mut pairs = Vec::new();
    for i in 0..listed.len() {
        for j in i + 1..listed.len() {
            let (a, b) = (listed[i], listed[j]);
            pairs.push(PairResult {
                a,
                b,
                distances: probability_distances(traj(a), traj(b))?,
                tolerance: pair_tolerance(regime, params.delay_tau, a, b),
            });
        }
    }
    Ok(CompareReport {
        regime,
        skipped,
        trajectories,
        pairs,
    })
}

pub fn compare(
    ctx: &Context,
    params: &ParamArgs,
    grid: &GridArgs,
    methods: &[MethodChoice],
) -> Result<()> {
    let spec = ctx.params(params)?;
    let p = spec.resolve()?;
    let g = ctx.grid(grid)?;
    let report = compare_methods(&p, methods, &g)?;

    let mut table = Table::new(&COMPARE_COLUMNS);
    ctx.header(&mut table, "compare");
    param_metadata(&mut table, &spec, &p);
    let f = p.figures_of_merit();
    table
        .meta_f64("critical_n", f.critical_n)
        .meta_f64("cooperativity", f.cooperativity)
        .meta_f64("cycles_ratio", f.cycles_ratio)
        .meta_f64("t_max", g.t_max)
        .meta("n_points", g.n_points)
        .meta(
            "distance",
            "sup and L2 norms of the difference in p0 = |c0|^2",
        );
    for (m, why) in &report.skipped {
        eprintln!("notice: skipping {m}: {why}");
        table.meta("skipped", format!("{m}: {why}"));
    }
    for pr in &report.pairs {
        table.push(vec![
            pr.a.label().into(),
            pr.b.label().into(),
            pr.distances.sup.into(),
            pr.distances.l2.into(),
            pr.tolerance.into(),
            pr.within().to_string().into(),
        ]);
    }
    ctx.write(&table)?;

    if ctx.svg.is_some() {
        const COLORS: [&str; 7] = [
            "#2c3e50", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d",
        ];
        let curves: Vec<(String, Vec<f64>)> = report
            .trajectories
            .iter()
            .map(|t| (t.meta.method.label().to_owned(), t.p0()))
            .collect();
        let series: Vec<Series<'_>> = curves
            .iter()
            .zip(&report.trajectories)
            .enumerate()
            .map(|(k, ((label, p0), t))| Series {
                label,
                x: &t.t_grid,
                y: p0,
                color: COLORS[k % COLORS.len()],
                dashed: k > 0,
            })
            .collect();
        ctx.write_svg(&line_plot(
            &format!("P0, {} regime", report.regime),
            "γt",
            "P0",
            &series,
        ))?;
    }

    let failed: Vec<String> = report
        .pairs
        .iter()
        .filter(|p| !p.within())
        .map(|p| {
            format!(
                "{} vs {}: sup {:.3e} > {:.3e}",
                p.a, p.b, p.distances.sup, p.tolerance
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "{} regime tolerance exceeded: {}",
            report.regime,
            failed.join("; ")
        )))
    }
}
