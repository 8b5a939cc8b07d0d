use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use transducer::coop::{cooperativities, efficiency_closed_form};
use transducer::ensemble::{convergence_scan, write_convergence_csv, EnsembleSpec};
use transducer::harness::fit::{fit_cascade, fit_envelope, fit_lorentzian, fit_reflection, FitResult, ReflectionDatum};
use transducer::harness::report::device_report;
use transducer::harness::sweep::{linspace, sweep, write_sweep_csv, SweepMode, SweepSpec};
use transducer::noise::{evaluate, fit_hemt, NoiseSettings};
use transducer::params::{default_paper_config, hz, Config};
use transducer::scattering::{build_system, solve_scattering, AtomGroup};
use transducer::{Error, Result};

#[derive(Parser)]
#[command(
    name = "transducer",
    version,
    about = "Rare-earth microwave-optical transducer model"
)]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the ensemble RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scattering problem at one probe detuning.
    Simulate {
        /// Probe detuning from the spin line, Hz.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        probe_hz: f64,
        /// Split the ensemble into this many identical groups.
        #[arg(long, default_value_t = 1)]
        groups: usize,
    },
    /// Sweep one config path over a linear grid.
    Sweep {
        /// Path such as probe.detuning_Hz or pump.power_mW.
        #[arg(long)]
        var: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Extra PATH=VALUE settings applied first.
        #[arg(long = "set")]
        sets: Vec<String>,
        /// exact, closed or mc.
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Monte-Carlo convergence scan over group counts.
    Mc {
        /// Comma-separated ascending group counts.
        #[arg(long, value_delimiter = ',', default_value = "10,30,100")]
        groups: Vec<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        probe_hz: f64,
    },
    /// Fit a phenomenological model to CSV data.
    Fit {
        #[arg(long, value_enum)]
        model: FitModel,
        /// CSV with a header row; see the README for column layouts.
        #[arg(long)]
        data: PathBuf,
    },
    /// Thermal and photoluminescence noise budget.
    Noise {
        /// Thermometry CSV (T_K, P_W) to fit the amplifier first.
        #[arg(long)]
        thermometry: Option<PathBuf>,
        /// Measurement bandwidth for the thermometry fit, Hz.
        #[arg(long, default_value_t = 1e6)]
        bandwidth_hz: f64,
    },
    /// Headline numbers next to the reported values.
    Report,
    /// Print the built-in operating point as a config file.
    Defaults,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Lorentzian,
    Lorentzian2,
    Cascade,
    Envelope,
    Reflection,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::param("config", "this command needs --config"))?;
    let mut cfg = Config::load(path)?;
    if let (Some(seed), Some(ens)) = (cli.seed, cfg.ensemble.as_mut()) {
        ens.seed = seed;
    }
    Ok(cfg)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match out {
        Some(p) => File::create(p)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|e| io_err(p, e)),
        None => Ok(Box::new(io::stdout())),
    }
}

fn io_err(p: &Path, source: io::Error) -> Error {
    Error::Io {
        path: p.display().to_string(),
        source,
    }
}

fn emit_json(cli: &Cli, v: &Value) -> Result<()> {
    let mut w = sink(&cli.out)?;
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w, "{text}").map_err(|e| io_err(Path::new("<out>"), e))
}

fn emit_table(cli: &Cli, rows: &[(String, String)]) -> Result<()> {
    let mut w = sink(&cli.out)?;
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (k, v) in rows {
        writeln!(w, "{k:<width$}  {v}").map_err(|e| io_err(Path::new("<out>"), e))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { probe_hz, groups } => simulate(cli, *probe_hz, *groups),
        Command::Sweep {
            var,
            from,
            to,
            points,
            sets,
            mode,
        } => {
            let cfg = load(cli)?;
            let overrides = sets.iter().map(|s| parse_set(s)).collect::<Result<Vec<_>>>()?;
            let spec = SweepSpec {
                variable: var.clone(),
                grid: linspace(*from, *to, *points),
                overrides,
                mode: mode.parse::<SweepMode>()?,
            };
            let rows = sweep(&spec, &cfg)?;
            if cli.format == Format::Json {
                emit_json(cli, &json!({ "variable": var, "rows": rows }))
            } else {
                write_sweep_csv(var, &rows, sink(&cli.out)?)
            }
        }
        Command::Mc {
            groups,
            trials,
            probe_hz,
        } => {
            let cfg = load(cli)?;
            let mut spec = cfg
                .ensemble
                .clone()
                .unwrap_or_else(|| EnsembleSpec::operating_point(&cfg.system));
            if let Some(t) = trials {
                spec.n_trials = *t;
            }
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let rows = convergence_scan(&spec, &cfg.system, hz(*probe_hz), groups)?;
            if cli.format == Format::Json {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|r| {
                        json!({"n_groups": r.n_groups, "mean_eta": r.mean_eta, "stderr": r.stderr,
                               "n_trials": r.n_trials, "seed": r.seed})
                    })
                    .collect();
                let closed = efficiency_closed_form(&cfg.system, hz(*probe_hz));
                emit_json(cli, &json!({ "rows": rows, "closed_form_eta": closed }))
            } else {
                write_convergence_csv(&rows, sink(&cli.out)?)
            }
        }
        Command::Fit { model, data } => {
            let fit = run_fit(cli, *model, data)?;
            if cli.format == Format::Table {
                let rows: Vec<(String, String)> = fit
                    .params
                    .iter()
                    .map(|p| {
                        let flag = if p.at_bound { "  (at bound)" } else { "" };
                        (p.name.clone(), format!("{:.6e} ± {:.2e}{flag}", p.value, p.stderr))
                    })
                    .collect();
                emit_table(cli, &rows)
            } else {
                emit_json(
                    cli,
                    &serde_json::to_value(&fit).map_err(|e| Error::Parse(e.to_string()))?,
                )
            }
        }
        Command::Noise {
            thermometry,
            bandwidth_hz,
        } => noise(cli, thermometry.as_deref(), *bandwidth_hz),
        Command::Defaults => {
            let text = default_paper_config().to_toml_string()?;
            write!(sink(&cli.out)?, "{text}").map_err(|e| io_err(Path::new("<out>"), e))
        }
        Command::Report => {
            let rep = device_report(&load(cli)?)?;
            let mut w = sink(&cli.out)?;
            let text = if cli.format == Format::Json {
                rep.to_json()?
            } else {
                rep.to_table()
            };
            writeln!(w, "{}", text.trim_end()).map_err(|e| io_err(Path::new("<out>"), e))
        }
    }
}

fn parse_set(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::param("set", format!("expected PATH=VALUE, got `{s}`")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::param("set", format!("`{v}` is not a number")))?;
    Ok((k.trim().to_string(), v))
}

fn simulate(cli: &Cli, probe_hz: f64, groups: usize) -> Result<()> {
    let cfg = load(cli)?;
    let p = &cfg.system;
    if groups == 0 {
        return Err(Error::param("groups", "must be >= 1"));
    }
    let r = solve_scattering(&build_system(&AtomGroup::split(p, groups), p, hz(probe_hz))?)?;
    let c = cooperativities(p, p.delta_ec, 0.0)?.population_weighted(p);
    let closed = efficiency_closed_form(p, hz(probe_hz));
    let fields = [
        ("eta_m2o", r.eta_m2o),
        ("eta_o2m", r.eta_o2m),
        ("refl_mw", r.refl_mw),
        ("refl_opt", r.refl_opt),
        ("noise_ratio", r.noise_ratio),
        ("eta_closed_form", closed),
        ("C_e", c.c_e.norm()),
        ("C_o", c.c_o.norm()),
        ("C_a", c.c_a),
    ];
    if cli.format == Format::Json {
        let mut m = serde_json::Map::new();
        m.insert("probe_detuning_Hz".into(), json!(probe_hz));
        for (k, v) in fields {
            m.insert(k.into(), json!(v));
        }
        emit_json(cli, &Value::Object(m))
    } else {
        let rows: Vec<(String, String)> = fields
            .iter()
            .map(|(k, v)| (k.to_string(), format!("{v:.6e}")))
            .collect();
        emit_table(cli, &rows)
    }
}

/// Numeric rows of a headed CSV file.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{}: row {}: `{f}` is not a number", path.display(), i + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn pairs(rows: &[Vec<f64>], path: &Path) -> Result<Vec<(f64, f64)>> {
    rows.iter()
        .map(|r| match r.as_slice() {
            [x, y, ..] => Ok((*x, *y)),
            _ => Err(Error::Parse(format!(
                "{}: expected at least two columns",
                path.display()
            ))),
        })
        .collect()
}

fn run_fit(cli: &Cli, model: FitModel, data: &Path) -> Result<FitResult> {
    let rows = read_rows(data)?;
    match model {
        FitModel::Lorentzian => fit_lorentzian(&pairs(&rows, data)?, 1),
        FitModel::Lorentzian2 => fit_lorentzian(&pairs(&rows, data)?, 2),
        FitModel::Cascade => fit_cascade(&pairs(&rows, data)?),
        FitModel::Envelope => fit_envelope(&pairs(&rows, data)?),
        FitModel::Reflection => {
            let cfg = load(cli)?;
            let pts = rows
                .iter()
                .map(|r| match r.as_slice() {
                    [f, re, im, ..] => Ok((hz(*f), ReflectionDatum::Complex(Complex64::new(*re, *im)))),
                    [f, mag] => Ok((hz(*f), ReflectionDatum::Magnitude(*mag))),
                    _ => Err(Error::Parse(format!("{}: expected 2 or 3 columns", data.display()))),
                })
                .collect::<Result<Vec<_>>>()?;
            fit_reflection(&pts, &cfg.system)
        }
    }
}

fn noise(cli: &Cli, thermometry: Option<&Path>, bandwidth_hz: f64) -> Result<()> {
    let cfg = load(cli)?;
    let settings = cfg.noise.clone().unwrap_or_else(NoiseSettings::operating_point);
    let summary = evaluate(&cfg.system, &cfg.material, &settings)?;
    let mut v = serde_json::to_value(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(path) = thermometry {
        let samples = pairs(&read_rows(path)?, path)?;
        let fit = fit_hemt(&samples, cfg.system.omega_e, bandwidth_hz)?;
        v["hemt"] = json!({
            "gain": fit.gain,
            "gain_stderr": fit.gain_stderr(),
            "n_hemt": fit.n_hemt,
            "n_hemt_stderr": fit.n_hemt_stderr(),
            "residual_norm": fit.residual_norm,
        });
    }
    if cli.format == Format::Table {
        let rows: Vec<(String, String)> = flatten("", &v);
        emit_table(cli, &rows)
    } else {
        emit_json(cli, &v)
    }
}

fn flatten(prefix: &str, v: &Value) -> Vec<(String, String)> {
    match v {
        Value::Object(m) => m
            .iter()
            .flat_map(|(k, v)| {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v)
            })
            .collect(),
        Value::Number(n) => vec![(
            prefix.to_string(),
            n.as_f64().map_or(n.to_string(), |x| format!("{x:.6e}")),
        )],
        other => vec![(prefix.to_string(), other.to_string())],
    }
}
