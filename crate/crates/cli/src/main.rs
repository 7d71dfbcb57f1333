use std::path::PathBuf;
use std::process::ExitCode;

use randbq::experiments::{
    run_fill_study, run_mcmc, run_rate_study, run_repeated, run_single, write_fill_study,
    write_mcmc, write_run, ExperimentConfig, RunResult,
};
use randbq_cli::{parse_cli, Action, ParseError};

fn print_run(res: &RunResult) {
    println!(
        "hyperparameters: sigma_f2 = {:.6}, ell = {:.6}; true integral {:.12}",
        res.hypers.sigma_f2, res.hypers.ell, res.truth.value
    );
    println!(
        "{:<9} {:>6} {:>5} {:>16} {:>12} {:>12}",
        "strategy", "n", "reps", "mean", "total var", "median var"
    );
    for a in &res.aggregates {
        println!(
            "{:<9} {:>6} {:>5} {:>16.12} {:>12.4e} {:>12.4e}",
            a.strategy.name(),
            a.n,
            a.repetitions,
            a.report.grand_mean,
            a.report.total,
            a.median_var
        );
    }
    for r in &res.rates {
        println!(
            "{} slopes: wce {:.3} (theory {:.3}), variance {:.3} (theory {:.3})",
            r.strategy.name(),
            r.wce.slope,
            r.theory.error_exponent,
            r.variance.slope,
            r.theory.variance_exponent
        );
    }
    if !res.failures.is_empty() {
        println!(
            "{} repetition(s) failed and were excluded",
            res.failures.len()
        );
    }
}

fn execute(action: Action, cfg: &ExperimentConfig) -> randbq::Result<Vec<PathBuf>> {
    match action {
        Action::Run | Action::Repeat | Action::Rates => {
            let res = match action {
                Action::Run => run_single(cfg)?,
                Action::Repeat => run_repeated(cfg)?,
                _ => run_rate_study(cfg)?,
            };
            print_run(&res);
            write_run(cfg, &res)
        }
        Action::Fill => {
            let res = run_fill_study(cfg)?;
            for (s, f) in &res.fits {
                println!(
                    "{} fill slope {:.3} (r² {:.3})",
                    s.name(),
                    f.slope,
                    f.r_squared
                );
            }
            for c in &res.concentration {
                println!(
                    "{} concentration at n={}: {}/{} below p/2 (bound {:.2e})",
                    c.strategy.name(),
                    c.n,
                    c.failures,
                    c.trials,
                    c.bound
                );
            }
            write_fill_study(cfg, &res)
        }
        Action::Mcmc => {
            let res = run_mcmc(cfg)?;
            println!(
                "acceptance {:.3}; posterior means sigma_f2 = {:.6}, ell = {:.6}",
                res.chain.acceptance_rate, res.hypers.sigma_f2, res.hypers.ell
            );
            write_mcmc(cfg, &res)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let inv = match parse_cli(std::env::args_os()) {
        Ok(inv) => inv,
        Err(ParseError::Usage(e)) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
        Err(ParseError::Config(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if inv.print_config {
        println!(
            "{}",
            serde_json::to_string_pretty(&inv.config).expect("config serializes")
        );
        return ExitCode::SUCCESS;
    }
    match execute(inv.action, &inv.config) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
