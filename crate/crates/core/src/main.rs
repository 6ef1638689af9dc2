//! `sublln`: scenario-driven experiments from a JSON config.
//!
//! Exit codes: 0 when the run's verdict holds, 1 when an experiment's
//! assertion fails (a trend that should shrink does not, a fit misses its
//! target, an audit finds a violation), 2 on configuration or usage errors.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use sublln::ambiguity::ChoquetTransform;
use sublln::capacity::{exact_upper_prob, search_upper_prob, EventContext};
use sublln::config::ScenarioConfig;
use sublln::harness::{
    fit_rate, kolmogorov_trend_ok, kronecker_from_variance, run_audit, run_kolmogorov,
    run_slln, run_wlln, verify_domination, wlln_trend_ok, AUDIT_TOL,
};
use sublln::report::{self, ExperimentRow, ReportFormat};
use sublln::truncation::{borel_cantelli_series, step1_series, step2_series, TruncationScheme};

#[derive(Parser)]
#[command(
    name = "sublln",
    version,
    about = "Worst-case law-of-large-numbers experiments over finite ambiguity sets"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Scenario JSON document.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the scenario replication count.
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Size of the worker pool; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall-clock times in reports (off by default so output is
    /// reproducible byte for byte).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Upper Choquet integral of |X|^r (or of X itself with --identity)
    Choquet {
        #[arg(long)]
        identity: bool,
    },
    /// Truncation series with their closed-form budgets
    Series {
        #[command(subcommand)]
        which: SeriesCmd,
    },
    /// Upper probability of the first configured event at the last horizon
    Capacity {
        #[command(subcommand)]
        how: CapacityCmd,
    },
    /// Deviation-probability decay across horizons
    Wlln,
    /// Tail-supremum exceedance fractions
    Slln,
    /// Band-coverage lower probabilities at order 1
    Kolmogorov,
    /// Log-log decay rate of the mean deviation
    Rate,
    /// Exhaustive conditional-law audit of the strategy family
    Audit {
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
}

#[derive(Subcommand)]
enum SeriesCmd {
    /// Normalized expected clamp excess
    Step1,
    /// Normalized clamped second moments
    Step2,
    /// Clamp-activation tail probabilities
    BorelCantelli,
    /// Summation-to-average consistency of the variance summands
    Kronecker,
}

#[derive(Subcommand)]
enum CapacityCmd {
    /// Backward induction over all adaptive strategies (discrete, short horizons)
    Exact,
    /// Monte Carlo over the strategy family (lower bound)
    Search,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<u8, Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    let format: ReportFormat = cli.format.parse()?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let path = cli.config.as_deref().ok_or("missing --config PATH")?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.reps {
        cfg.replications = r;
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let out = out.as_deref();
    let last_n = *cfg.horizons.last().expect("validated non-empty");

    match cli.cmd {
        Cmd::Choquet { identity } => {
            let (label, transform) = if identity {
                ("identity".to_string(), ChoquetTransform::Identity)
            } else {
                let r = cfg.domination.order;
                (format!("abs_power({r})"), ChoquetTransform::abs_power(r)?)
            };
            let v = cfg.theta.choquet_upper(transform)?;
            println!("{v}");
            if let Some(p) = out {
                std::fs::write(p, format!("transform,value\n{label},{v}\n"))?;
            }
            Ok(0)
        }
        Cmd::Series { which } => {
            verify_domination(&cfg)?;
            let scheme = TruncationScheme::new(cfg.domination.order)?;
            match which {
                SeriesCmd::Kronecker => {
                    let rep = kronecker_from_variance(&cfg, last_n)?;
                    let n = rep.kronecker.scaled_averages.len();
                    let stride = (n / 500).max(1);
                    let mut csv = String::from("N,ratio_partial_sum,scaled_average\n");
                    for i in 0..n {
                        if (i + 1) % stride == 0 || i + 1 == n || i == 0 {
                            csv.push_str(&format!(
                                "{},{},{}\n",
                                i + 1,
                                rep.kronecker.ratio_partial_sums[i],
                                rep.kronecker.scaled_averages[i]
                            ));
                        }
                    }
                    report::emit(out, &csv)?;
                    eprintln!(
                        "series_certified={} peak_average={} final_average={} demonstrated={}",
                        rep.series_certified,
                        rep.peak_average,
                        rep.final_average,
                        rep.demonstrated
                    );
                    Ok(u8::from(!rep.demonstrated))
                }
                _ => {
                    let series = match which {
                        SeriesCmd::Step1 => {
                            step1_series(&cfg.theta, &cfg.domination, &scheme, last_n)?
                        }
                        SeriesCmd::Step2 => {
                            step2_series(&cfg.theta, &cfg.domination, &scheme, last_n)?
                        }
                        SeriesCmd::BorelCantelli => {
                            borel_cantelli_series(&cfg.theta, &cfg.domination, &scheme, last_n)?
                        }
                        SeriesCmd::Kronecker => unreachable!(),
                    };
                    report::emit(out, &series.to_csv())?;
                    eprintln!(
                        "terms={} partial_sum={} bound={} remainder={} converged={}",
                        series.len(),
                        series.final_partial_sum(),
                        series.closed_form_bound,
                        series.remainder,
                        series.converged
                    );
                    let ok = match &series.cesaro {
                        // no finite budget is claimed at order 1; the
                        // averaged excess must still shrink
                        Some(ces) => ces.last() <= ces.first(),
                        None => series.converged,
                    };
                    Ok(u8::from(!ok))
                }
            }
        }
        Cmd::Capacity { how } => {
            verify_domination(&cfg)?;
            let event = cfg.events_or_default().remove(0);
            let ctx = EventContext::new(&cfg.theta, last_n, cfg.domination.order)?;
            let est = match how {
                CapacityCmd::Exact => exact_upper_prob(&cfg.theta, &event, &ctx)?,
                CapacityCmd::Search => search_upper_prob(
                    &cfg.theta,
                    &event,
                    &ctx,
                    &cfg.family(),
                    cfg.replications,
                    cfg.seed,
                )?,
            };
            println!("{}", est.value);
            if let Some(p) = out {
                let row = ExperimentRow {
                    scenario: cfg.name.clone(),
                    n: ctx.n,
                    event: event.describe(),
                    method: est.method.label().to_string(),
                    value: est.value,
                    stderr: est.mc_stderr,
                    center_hi: ctx.upper_center,
                    center_lo: ctx.lower_center,
                    wall_ms: 0,
                };
                std::fs::write(p, report::render(&[row], format))?;
            }
            Ok(0)
        }
        Cmd::Wlln => {
            let rows = run_wlln(&cfg, cli.timings)?;
            report::emit(out, &report::render(&rows, format))?;
            Ok(u8::from(!wlln_trend_ok(&rows, cfg.burn_in)))
        }
        Cmd::Slln => {
            let rep = run_slln(&cfg)?;
            let content = match format {
                ReportFormat::Csv => report::rows_to_csv(&rep.rows()),
                ReportFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&rep)?;
                    s.push('\n');
                    s
                }
            };
            report::emit(out, &content)?;
            Ok(u8::from(!rep.fractions_decrease()))
        }
        Cmd::Kolmogorov => {
            let rows = run_kolmogorov(&cfg, cli.timings)?;
            report::emit(out, &report::render(&rows, format))?;
            Ok(u8::from(!kolmogorov_trend_ok(&rows)))
        }
        Cmd::Rate => {
            let fit = fit_rate(&cfg)?;
            let content = match format {
                ReportFormat::Csv => fit.to_csv(),
                ReportFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&fit)?;
                    s.push('\n');
                    s
                }
            };
            report::emit(out, &content)?;
            Ok(u8::from(!fit.pass))
        }
        Cmd::Audit { depth } => {
            let summary = run_audit(&cfg, depth)?;
            let content = match format {
                ReportFormat::Csv => {
                    let mut csv = String::from("strategy,max_violation\n");
                    for (label, v) in &summary.per_strategy {
                        csv.push_str(&format!("{label},{v}\n"));
                    }
                    csv
                }
                ReportFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&summary)?;
                    s.push('\n');
                    s
                }
            };
            report::emit(out, &content)?;
            eprintln!(
                "histories={} max_violation={}",
                summary.histories_checked, summary.max_violation
            );
            Ok(u8::from(summary.max_violation > AUDIT_TOL))
        }
    }
}
