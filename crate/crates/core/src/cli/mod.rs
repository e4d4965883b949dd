//! `ringwave` command-line front end.
//!
//! Every command reads one JSON [`ExperimentConfig`], writes CSV (and for
//! some commands SVG) files into the output directory and returns a short
//! human summary. CSV files carry a leading `# generated …` timestamp line
//! unless `--deterministic` is given.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::equilibrium::{
    equilibrium_from_length, equilibrium_from_velocity, ClassId, Composition, EquilibriumFlow,
};
use crate::error::{Error, Result};
use crate::linearize::{linearize, LinearTrio, StabilityClass};
use crate::sim::{growth_rate, simulate};
use crate::spectrum::{eigenvalues_on_h, RingSystem};
use crate::stability::{
    self, critical_penetration, multi_phase_margin, round_counts, MarginVerdict,
};

use config::EquilibriumSpec;
pub use config::ExperimentConfig;
use output::{num, table, Series};

pub const THREADS_ENV: &str = "RINGWAVE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Equilibrium,
    Linearize,
    Tau0,
    Margin,
    Spectrum,
    Simulate,
    Sweep,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "ringwave",
    version,
    about = "Stability and stop-and-go waves of mixed traffic on a ring road"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Omit the timestamp comment line so outputs are byte-reproducible.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("ringwave: {e}");
            e.exit_code()
        }
    }
}

/// Value of `RINGWAVE_THREADS` (0 or unset means one thread per core).
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| {
            Error::Config(format!("{THREADS_ENV}={s:?} is not a non-negative integer"))
        }),
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    pool.install(|| execute(cli.command, &cfg, &cli.out, cli.deterministic))
}

/// Runs `command` on an already parsed configuration.
pub fn execute(
    command: Command,
    cfg: &ExperimentConfig,
    out: &Path,
    deterministic: bool,
) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    let mut w = Writer {
        dir: out,
        comment: (!deterministic).then(timestamp),
        files: Vec::new(),
    };
    let summary = match command {
        Command::Equilibrium => cmd_equilibrium(cfg, &mut w)?,
        Command::Linearize => cmd_linearize(cfg, &mut w)?,
        Command::Tau0 => cmd_tau0(cfg, &mut w)?,
        Command::Margin => cmd_margin(cfg, &mut w)?,
        Command::Spectrum => cmd_spectrum(cfg, &mut w)?,
        Command::Simulate => cmd_simulate(cfg, &mut w)?,
        Command::Sweep => cmd_sweep(cfg, &mut w)?,
    };
    Ok(Outcome {
        files: w.files,
        summary,
    })
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "generated by ringwave {} at unix time {secs}",
        env!("CARGO_PKG_VERSION")
    )
}

struct Writer<'a> {
    dir: &'a Path,
    comment: Option<String>,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, header: &str, rows: Vec<Vec<String>>) -> Result<String> {
        let doc = table(self.comment.as_deref(), header, rows);
        self.file(name, &doc)?;
        Ok(doc)
    }

    fn file(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

pub fn equilibrium_for(cfg: &ExperimentConfig, comp: &Composition) -> Result<EquilibriumFlow> {
    match cfg.equilibrium {
        EquilibriumSpec::Speed(v) => equilibrium_from_velocity(comp, v),
        EquilibriumSpec::Length(l) => equilibrium_from_length(comp, l),
        EquilibriumSpec::LengthPerVehicle(x) => {
            equilibrium_from_length(comp, x * comp.len() as f64)
        }
    }
}

/// Trios of the classes present in `comp`, in configuration order.
pub fn class_trios(comp: &Composition, eq: &EquilibriumFlow) -> Result<Vec<(ClassId, LinearTrio)>> {
    comp.populations()
        .iter()
        .filter(|p| p.count > 0)
        .map(|p| {
            Ok((
                p.class_id,
                linearize(&p.model, eq.h_bar[&p.class_id], eq.v_bar)?,
            ))
        })
        .collect()
}

fn class_name(c: StabilityClass) -> &'static str {
    match c {
        StabilityClass::Stable => "stable",
        StabilityClass::Critical => "critical",
        StabilityClass::Unstable => "unstable",
    }
}

fn verdict_name(v: MarginVerdict) -> &'static str {
    match v {
        MarginVerdict::StableAllN => "stable for all counts",
        MarginVerdict::UnstableForLargeN => "unstable for large counts",
        MarginVerdict::CriticalBoundary => "critical boundary",
    }
}

fn cmd_equilibrium(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let comp = cfg.composition()?;
    let eq = equilibrium_for(cfg, &comp)?;
    let rows = comp
        .populations()
        .iter()
        .filter(|p| p.count > 0)
        .map(|p| {
            vec![
                p.class_id.to_string(),
                num(eq.h_bar[&p.class_id]),
                num(eq.v_bar),
                num(eq.length),
            ]
        })
        .collect();
    w.csv("equilibrium.csv", output::EQUILIBRIUM_HEADER, rows)?;
    let mut s = format!(
        "equilibrium: v_bar = {:.6} m/s, L = {:.6} m, n = {}\n",
        eq.v_bar,
        eq.length,
        comp.len()
    );
    for (id, h) in &eq.h_bar {
        s += &format!("  class {id}: h_bar = {h:.6} m\n");
    }
    Ok(s)
}

fn cmd_linearize(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let comp = cfg.composition()?;
    let eq = equilibrium_for(cfg, &comp)?;
    let trios = class_trios(&comp, &eq)?;
    let mut s = String::new();
    let rows = trios
        .iter()
        .map(|(id, t)| {
            s += &format!(
                "class {id}: Δ = {:.6} ({})\n",
                t.discriminant(),
                class_name(t.classify())
            );
            vec![
                id.to_string(),
                num(t.alpha),
                num(t.beta),
                num(t.gamma),
                num(t.discriminant()),
                class_name(t.classify()).to_string(),
            ]
        })
        .collect();
    w.csv("linearize.csv", output::LINEARIZE_HEADER, rows)?;
    Ok(s)
}

fn cmd_tau0(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    if cfg.classes.len() != 2 {
        return Err(Error::Config(format!(
            "tau0 needs exactly 2 classes, got {}",
            cfg.classes.len()
        )));
    }
    let comp = cfg.composition()?;
    let eq = equilibrium_for(cfg, &comp)?;
    let trios = class_trios(&comp, &eq)?;
    if trios.len() != 2 {
        return Err(Error::Config(
            "tau0 needs a positive count for both classes".into(),
        ));
    }
    let mut s = String::new();
    for (id, t) in &trios {
        s += &format!(
            "class {id}: Δ = {:.6} ({})\n",
            t.discriminant(),
            class_name(t.classify())
        );
    }
    let stable = trios
        .iter()
        .find(|(_, t)| t.classify() == StabilityClass::Stable);
    let unstable = trios
        .iter()
        .find(|(_, t)| t.classify() == StabilityClass::Unstable);
    match (stable, unstable) {
        (Some((sid, st)), Some((_, ut))) => {
            let r = critical_penetration(st, ut)?;
            w.csv(
                "tau0.csv",
                output::TAU0_HEADER,
                vec![vec![
                    num(r.delta1),
                    num(r.delta2),
                    num(r.gamma_sq),
                    num(r.n0),
                    num(r.tau0),
                    num(r.bound_lower),
                    num(r.bound_upper),
                ]],
            )?;
            s += &format!(
                "tau0 = {:.4} (share of class {sid}); N0 = {:.6}; bounds [{:.6}, {:.6}]\n",
                r.tau0, r.n0, r.bound_lower, r.bound_upper
            );
        }
        (_, None) => s += "verdict: stable for all counts\n",
        (None, Some(_)) => s += "verdict: unstable for large counts at every penetration rate\n",
    }
    Ok(s)
}

fn margin_curve(
    trios: &[LinearTrio],
    counts: &[f64],
    upper: f64,
    points: usize,
) -> Vec<(f64, f64)> {
    crate::optimize::log_grid(upper * 1e-6, upper, points)
        .into_iter()
        .map(|y| {
            let m = trios
                .iter()
                .zip(counts)
                .map(|(t, c)| c * stability::log_gain(t, y).unwrap_or(f64::NAN))
                .sum();
            (y, m)
        })
        .collect()
}

fn cmd_margin(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let comp = cfg.composition()?;
    let eq = equilibrium_for(cfg, &comp)?;
    let trios: Vec<LinearTrio> = class_trios(&comp, &eq)?
        .into_iter()
        .map(|(_, t)| t)
        .collect();
    let counts: Vec<f64> = comp
        .populations()
        .iter()
        .filter(|p| p.count > 0)
        .map(|p| p.count as f64)
        .collect();
    let rep = multi_phase_margin(&trios, &counts)?;
    let curve = margin_curve(&trios, &counts, stability::margin_search_upper(&trios), 400);
    let doc = w.csv(
        "margin.csv",
        output::MARGIN_HEADER,
        curve.iter().map(|(y, m)| vec![num(*y), num(*m)]).collect(),
    )?;
    if cfg.svg {
        w.file("margin.svg", &margin_svg(&doc)?)?;
    }
    Ok(format!(
        "sup margin = {:e} at y = {:e}; slope at 0 = {:e}\nverdict: {}\n",
        rep.sup_margin,
        rep.argmax_y,
        rep.slope_at_zero,
        verdict_name(rep.verdict)
    ))
}

/// Plot of `margin.csv`: margin against log10 y.
pub fn margin_svg(csv: &str) -> Result<String> {
    let pts = output::columns(csv, 0, 1)?
        .into_iter()
        .map(|(y, m)| (y.log10(), m))
        .collect();
    Ok(output::line_plot(
        "Margin Σ n_k H_k(y)",
        "log10 y (1/s²)",
        "margin",
        &[Series {
            name: "margin".into(),
            points: pts,
        }],
    ))
}

fn cmd_spectrum(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let comp = cfg.composition()?;
    let eq = equilibrium_for(cfg, &comp)?;
    let rep = eigenvalues_on_h(&RingSystem::from_flow(&comp, &eq)?)?;
    let mut eig = rep.eigenvalues.clone();
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    w.csv(
        "spectrum.csv",
        output::SPECTRUM_HEADER,
        eig.iter().map(|z| vec![num(z.re), num(z.im)]).collect(),
    )?;
    let verdict = if rep.abscissa > stability::UNSTABLE_ABSCISSA {
        "unstable"
    } else {
        "stable"
    };
    Ok(format!(
        "n = {}: {} eigenvalues on the zero-sum subspace, abscissa = {:e} 1/s ({verdict})\n",
        comp.len(),
        rep.eigenvalues.len(),
        rep.abscissa
    ))
}

fn cmd_simulate(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let sim = cfg.simulation()?;
    let comp = cfg.composition()?;
    let eq = equilibrium_for(cfg, &comp)?;
    let trace = simulate(&comp, &eq, &sim)?;
    let rows = (0..trace.len())
        .map(|i| {
            vec![
                num(trace.times[i]),
                num(trace.speed_variance[i]),
                num(trace.min_headway[i]),
                num(trace.max_headway[i]),
            ]
        })
        .collect();
    let doc = w.csv("trace.csv", output::TRACE_HEADER, rows)?;
    if cfg.svg {
        w.file("trace.svg", &trace_svg(&doc)?)?;
    }
    let (v0, v1) = (
        trace.speed_variance[0],
        *trace.speed_variance.last().unwrap_or(&0.0),
    );
    let mut s = format!(
        "simulated n = {} to t = {} s ({} samples); speed variance {:e} -> {:e} (m/s)²\n",
        comp.len(),
        trace.times.last().unwrap_or(&0.0),
        trace.len(),
        v0,
        v1
    );
    if let Ok(rate) = growth_rate(&trace, (0.5 * sim.t_end, sim.t_end)) {
        s += &format!("variance growth rate over the second half: {rate:e} 1/s\n");
    }
    Ok(s)
}

/// Plot of `trace.csv`: log10 speed variance against time.
pub fn trace_svg(csv: &str) -> Result<String> {
    let pts = output::columns(csv, 0, 1)?
        .into_iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(t, v)| (t, v.log10()))
        .collect();
    Ok(output::line_plot(
        "Speed variance over time",
        "t (s)",
        "log10 speed variance ((m/s)²)",
        &[Series {
            name: "speed variance".into(),
            points: pts,
        }],
    ))
}

/// Class counts for a sweep point: `rate` for the first class, the rest split
/// by the configured counts of the others.
pub fn sweep_counts(cfg: &ExperimentConfig, rate: f64, total: usize) -> Result<Vec<usize>> {
    let others: Vec<f64> = cfg.classes[1..].iter().map(|c| c.count as f64).collect();
    let other_sum: f64 = others.iter().sum();
    let mut rates = vec![rate];
    if others.is_empty() || other_sum == 0.0 {
        if rate < 1.0 {
            return Err(Error::Config(
                "sweep rate below 1 needs other classes with positive counts".into(),
            ));
        }
        rates.extend(others);
    } else {
        rates.extend(others.iter().map(|c| (1.0 - rate) * c / other_sum));
    }
    Ok(round_counts(&rates, total))
}

fn cmd_sweep(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let sweep = cfg.sweep()?;
    let points: Vec<(f64, usize)> = sweep
        .rate_class1
        .iter()
        .flat_map(|&r| sweep.n_total.iter().map(move |&n| (r, n)))
        .collect();
    let results: Vec<f64> = points
        .par_iter()
        .map(|&(rate, n)| {
            let comp = cfg.composition_with(&sweep_counts(cfg, rate, n)?)?;
            let eq = equilibrium_for(cfg, &comp)?;
            Ok(eigenvalues_on_h(&RingSystem::from_flow(&comp, &eq)?)?.abscissa)
        })
        .collect::<Result<_>>()?;
    let verdict = |a: f64| {
        if a > stability::UNSTABLE_ABSCISSA {
            "unstable"
        } else {
            "stable"
        }
    };
    let rows = points
        .iter()
        .zip(&results)
        .map(|(&(r, n), &a)| vec![n.to_string(), num(r), num(a), verdict(a).to_string()])
        .collect();
    let doc = w.csv("sweep.csv", output::SWEEP_HEADER, rows)?;
    if cfg.svg {
        w.file("sweep.svg", &sweep_svg(&doc)?)?;
    }
    let unstable = results
        .iter()
        .filter(|a| **a > stability::UNSTABLE_ABSCISSA)
        .count();
    Ok(format!(
        "swept {} points: {unstable} unstable, {} stable\n",
        points.len(),
        points.len() - unstable
    ))
}

/// Plot of `sweep.csv`: abscissa against fleet size, one line per rate.
pub fn sweep_svg(csv: &str) -> Result<String> {
    let (_, rows) = output::parse_table(csv)?;
    let mut series: Vec<Series> = Vec::new();
    for r in &rows {
        let (n, a) = (output::parse_num(&r[0])?, output::parse_num(&r[2])?);
        let name = format!("rate {}", r[1]);
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((n, a)),
            None => series.push(Series {
                name,
                points: vec![(n, a)],
            }),
        }
    }
    Ok(output::line_plot(
        "Spectral abscissa against fleet size",
        "n",
        "abscissa (1/s)",
        &series,
    ))
}
