use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dgmvp::encoding::{enumerate_feasible, feasible_count, unconstrained_count, EncodingSpec};
use dgmvp::experiments::plot::scaling_points;
use dgmvp::experiments::{
    emit_plot_data, read_records_file, replay, run_preset, ExperimentConfig, FigureId, Preset,
};
use dgmvp::market::{compute_covariance_with, load_prices, CovarianceMode};
use dgmvp::metrics::fit_power_law;
use dgmvp::pauli::identities::{verify_identities, verify_three_qubit_bridges, verify_two_qubit_bridges};
use dgmvp::Result;

#[derive(Parser)]
#[command(name = "dgmvp", version, about = "QAOA experiments for the discrete minimum variance portfolio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset.
    Run {
        preset: String,
        /// JSON overrides on top of the preset defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every operator identity against dense matrices.
    VerifyIdentities {
        #[arg(long, default_value_t = 10)]
        angles: usize,
    },
    /// Count (and optionally list) feasible bitstrings.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        list: bool,
    },
    /// Fit `1/P_gm = a B^b` to scaling results.
    Fit {
        /// Scaling-study records or a fig10 table.
        #[arg(long = "in")]
        input: PathBuf,
        /// Only points with this initial state.
        #[arg(long)]
        initial: Option<String>,
        /// Only points with this `n`.
        #[arg(long)]
        fix_n: Option<usize>,
        /// Only points with this `l`.
        #[arg(long)]
        fix_l: Option<usize>,
    },
    /// Tidy plotting table from a result CSV.
    PlotData {
        #[arg(long = "in")]
        input: PathBuf,
        /// fig3, fig7, fig9, fig10 or table1.
        #[arg(long)]
        figure: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run one record of a finished run and compare its metrics.
    Replay {
        /// Output folder of `run`.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        row: usize,
    },
    /// Covariance matrix of a price file as JSON.
    Covariance {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long, value_delimiter = ',')]
        tickers: Vec<String>,
        #[arg(long)]
        returns: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            preset,
            config,
            seed,
            out,
        } => {
            let preset: Preset = preset.parse()?;
            let config = match config {
                Some(path) => ExperimentConfig::load(&path, preset)?,
                None => ExperimentConfig::preset_default(preset),
            };
            let summary = run_preset(&config, seed, &out)?;
            println!(
                "{}: {} records from {} tasks, config {}, results in {}",
                summary.preset,
                summary.records,
                summary.tasks,
                summary.config_hash,
                out.display()
            );
            println!("{}", serde_json::to_string_pretty(&summary.findings)?);
            if preset == Preset::IdentityVerification && summary.findings["all_pass"] != true {
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyIdentities { angles } => {
            let betas: Vec<f64> = (0..angles)
                .map(|i| std::f64::consts::TAU * (i as f64 + 0.5) / angles as f64)
                .collect();
            let mut ok = true;
            for c in verify_identities(&betas) {
                println!("{:<40} {:>10.3e} {}", c.name, c.max_error, if c.pass { "ok" } else { "FAIL" });
                ok &= c.pass;
            }
            for report in [verify_two_qubit_bridges(&betas)?, verify_three_qubit_bridges(&betas)?] {
                for c in report.violations() {
                    println!("{:<40} beta={:.4} error {:.3e} FAIL", c.pattern, c.beta, c.max_coefficient_error);
                }
                if report.all_pass() {
                    println!("{:<40} {} checks ok", "bridge decompositions", report.checks.len());
                }
                ok &= report.all_pass();
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Enumerate { n, l, list } => {
            let spec = EncodingSpec::new(n, l)?;
            println!("feasible {}", feasible_count(n, l));
            println!("unconstrained {}", unconstrained_count(n, l));
            if list {
                let stdout = io::stdout();
                let mut w = BufWriter::new(stdout.lock());
                for bits in enumerate_feasible(&spec)? {
                    let index = bits.to_index();
                    let lots: Vec<String> = (0..n).map(|t| spec.lots_of_index(index, t).to_string()).collect();
                    writeln!(w, "{bits} {}", lots.join(","))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            input,
            initial,
            fix_n,
            fix_l,
        } => {
            let points = fit_points(&input)?;
            let mut groups: std::collections::BTreeMap<String, Vec<(f64, f64)>> = Default::default();
            for (n, l, b, init, y) in points {
                if initial.as_ref().is_some_and(|i| *i != init)
                    || fix_n.is_some_and(|v| v != n)
                    || fix_l.is_some_and(|v| v != l)
                    || !y.is_finite()
                {
                    continue;
                }
                groups.entry(init).or_default().push((b, y));
            }
            let mut out = serde_json::Map::new();
            for (init, xy) in groups {
                let v = match fit_power_law(&xy) {
                    Ok(f) => serde_json::json!({ "a": f.a, "b": f.b, "b_stderr": f.b_stderr, "b_ci95": f.b_ci95, "points": xy.len() }),
                    Err(e) => serde_json::json!({ "error": e.to_string(), "points": xy.len() }),
                };
                out.insert(init, v);
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::PlotData { input, figure, out } => {
            let figure: FigureId = figure.parse()?;
            let records = read_records_file(&input)?;
            match out {
                Some(path) => emit_plot_data(&records, figure, BufWriter::new(File::create(path)?))?,
                None => emit_plot_data(&records, figure, io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { dir, row } => {
            let config: ExperimentConfig =
                serde_json::from_str(&std::fs::read_to_string(dir.join("config.json"))?)?;
            let records = read_records_file(&dir.join(format!("{}.csv", config.preset.name())))?;
            let record = records
                .get(row)
                .ok_or_else(|| dgmvp::Error::InvalidArgument(format!("no row {row}")))?;
            let replayed = replay(&config, record)?;
            let same = record.report() == Some(replayed);
            println!("{}", serde_json::to_string_pretty(&replayed)?);
            println!("{}", if same { "identical" } else { "DIFFERS" });
            Ok(if same { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Covariance {
            prices,
            tickers,
            returns,
        } => {
            let names: Vec<&str> = tickers.iter().map(String::as_str).collect();
            let series = load_prices(&prices, &names)?;
            let mode = if returns { CovarianceMode::Returns } else { CovarianceMode::PriceLevels };
            let cov = compute_covariance_with(&series, mode)?;
            println!("{}", serde_json::to_string_pretty(&cov)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// `(n, l, B, initial, mean 1/P_gm)` from a fig10 table or raw records.
fn fit_points(path: &PathBuf) -> Result<Vec<(usize, usize, f64, String, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().any(|h| h == "mean_inv_p_gm") {
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(cn), Some(cl), Some(cb), Some(ci), Some(cy)) =
            (col("n"), col("l"), col("b_nl"), col("initial"), col("mean_inv_p_gm"))
        else {
            return Err(dgmvp::Error::InvalidArgument("fig10 table is missing columns".into()));
        };
        let mut out = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let num = |c: usize| row.get(c).unwrap_or("").parse::<f64>().unwrap_or(f64::NAN);
            out.push((num(cn) as usize, num(cl) as usize, num(cb), row[ci].to_string(), num(cy)));
        }
        return Ok(out);
    }
    let records = read_records_file(path)?;
    Ok(scaling_points(&records)
        .into_iter()
        .map(|p| (p.n, p.l, p.b_nl, p.initial, p.mean_inv_p_gm))
        .collect())
}
