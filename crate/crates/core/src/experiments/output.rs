use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::runner::{FillStudyResult, McmcResult, RunResult};
use crate::error::Result;
use crate::sampling::RNG_ALGORITHM;

pub const CSV_VERSION: u32 = 1;

/// Leading comment line of every CSV file.
pub fn csv_header(cfg: &ExperimentConfig) -> String {
    format!(
        "# randbq-csv v{CSV_VERSION} experiment={} config={} rng={RNG_ALGORITHM}\n",
        cfg.experiment,
        cfg.hash()
    )
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

/// Writes `<exp>_trace.csv`, `<exp>_summary.csv` and, when rates were
/// fitted, `<exp>_fit.csv`.
pub fn write_run(cfg: &ExperimentConfig, res: &RunResult) -> Result<Vec<PathBuf>> {
    let name = cfg.experiment.name();
    let head = format!(
        "{}# hypers sigma_f2={} ell={} truth={}\n",
        csv_header(cfg),
        res.hypers.sigma_f2,
        res.hypers.ell,
        res.truth.value
    );

    let mut trace = head.clone();
    trace.push_str("repetition,strategy,n,posterior_mean,posterior_var,wce,radius,fill\n");
    for r in &res.records {
        let _ = writeln!(
            trace,
            "{},{},{},{},{},{},{},{}",
            r.repetition,
            r.strategy.name(),
            r.n,
            r.posterior_mean,
            r.posterior_var,
            r.wce,
            r.radius,
            r.fill
        );
    }

    let mut summary = head.clone();
    summary.push_str(
        "strategy,n,repetitions,grand_mean,within,between,total,q025,q975,median_var,median_wce,median_fill\n",
    );
    for a in &res.aggregates {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            a.strategy.name(),
            a.n,
            a.repetitions,
            a.report.grand_mean,
            a.report.within,
            a.report.between,
            a.report.total,
            opt(a.interval.map(|i| i.0)),
            opt(a.interval.map(|i| i.1)),
            a.median_var,
            a.median_wce,
            a.median_fill
        );
    }

    let mut paths = vec![
        write_file(&cfg.output_dir, &format!("{name}_trace.csv"), &trace)?,
        write_file(&cfg.output_dir, &format!("{name}_summary.csv"), &summary)?,
    ];
    if !res.rates.is_empty() {
        let mut fit = head;
        fit.push_str("strategy,quantity,slope,intercept,r_squared,theory\n");
        for r in &res.rates {
            for (q, f, t) in [
                ("wce", &r.wce, r.theory.error_exponent),
                ("variance", &r.variance, r.theory.variance_exponent),
            ] {
                let _ = writeln!(
                    fit,
                    "{},{q},{},{},{},{t}",
                    r.strategy.name(),
                    f.slope,
                    f.intercept,
                    f.r_squared
                );
            }
        }
        paths.push(write_file(
            &cfg.output_dir,
            &format!("{name}_fit.csv"),
            &fit,
        )?);
    }
    Ok(paths)
}

/// Writes fill distances, their medians and fits, and the concentration table.
pub fn write_fill_study(cfg: &ExperimentConfig, res: &FillStudyResult) -> Result<Vec<PathBuf>> {
    let name = cfg.experiment.name();
    let head = csv_header(cfg);

    let mut trace = head.clone();
    trace.push_str("repetition,strategy,n,radius,fill\n");
    for r in &res.records {
        let _ = writeln!(
            trace,
            "{},{},{},{},{}",
            r.repetition,
            r.strategy.name(),
            r.n,
            r.radius,
            r.fill
        );
    }

    let mut summary = head.clone();
    summary.push_str("strategy,n,median_fill,lower_quartile,upper_quartile\n");
    for s in &res.summaries {
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            s.strategy.name(),
            s.n,
            s.median_fill,
            s.lower_quartile,
            s.upper_quartile
        );
    }

    let mut fit = head.clone();
    fit.push_str("strategy,quantity,slope,intercept,r_squared\n");
    for (s, f) in &res.fits {
        let _ = writeln!(
            fit,
            "{},fill,{},{},{}",
            s.name(),
            f.slope,
            f.intercept,
            f.r_squared
        );
    }

    let mut conc = head;
    conc.push_str("strategy,n,trials,p,failures,failure_rate,bound\n");
    for c in &res.concentration {
        let _ = writeln!(
            conc,
            "{},{},{},{},{},{},{}",
            c.strategy.name(),
            c.n,
            c.trials,
            c.p,
            c.failures,
            c.failure_rate,
            c.bound
        );
    }

    Ok(vec![
        write_file(&cfg.output_dir, &format!("{name}_trace.csv"), &trace)?,
        write_file(&cfg.output_dir, &format!("{name}_summary.csv"), &summary)?,
        write_file(&cfg.output_dir, &format!("{name}_fit.csv"), &fit)?,
        write_file(&cfg.output_dir, &format!("{name}_concentration.csv"), &conc)?,
    ])
}

/// Writes the chain trace and a one-row summary.
pub fn write_mcmc(cfg: &ExperimentConfig, res: &McmcResult) -> Result<Vec<PathBuf>> {
    let name = cfg.experiment.name();
    let head = csv_header(cfg);
    let mut buf = Vec::new();
    res.chain.write_csv(&mut buf)?;
    let trace = head.clone() + &String::from_utf8(buf).expect("ascii csv");
    let c = &res.chain;
    let summary = format!(
        "{head}kernel,iterations,burn_in,step,acceptance_rate,sigma_f2_bar,ell_bar\n{},{},{},{},{},{},{}\n",
        cfg.kernel.name(),
        c.samples.len(),
        c.burn_in,
        c.step_size,
        c.acceptance_rate,
        c.posterior_mean.0,
        c.posterior_mean.1
    );
    Ok(vec![
        write_file(&cfg.output_dir, &format!("{name}_trace.csv"), &trace)?,
        write_file(&cfg.output_dir, &format!("{name}_summary.csv"), &summary)?,
    ])
}
