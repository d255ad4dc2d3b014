mod render;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use riskwarden_core::assessment::{self, Intervention, WhatIfScenario};
use riskwarden_core::cycle::{self, CycleConfig};
use riskwarden_core::store::{self, RegisterStore};
use riskwarden_core::{
    Declaration, DriverKind, Dynamics, Error, ErrorClass, Horizon, NewRisk, Observation, Origin,
    Presence,
};
use riskwarden_service::{ServeConfig, ServeError, Server};
use serde::de::DeserializeOwned;

#[derive(Debug, Parser)]
#[command(name = "riskwarden", version, about = "Proactive enterprise risk register")]
struct Cli {
    /// Register file.
    #[arg(long, global = true, env = "RISKWARDEN_REGISTER")]
    register: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Table,
    Structured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create an empty register.
    Init {
        /// Project stage the register covers.
        #[arg(long)]
        stage: String,
        /// Forecast horizon in periods.
        #[arg(long)]
        periods: u32,
        #[arg(long, default_value_t = riskwarden_core::register::DEFAULT_PERIOD_DAYS)]
        period_days: u32,
        /// Sphere labels, comma separated.
        #[arg(long, value_delimiter = ',')]
        taxonomy: Vec<String>,
        /// Calendar date of period 0 (defaults to today).
        #[arg(long)]
        epoch: Option<NaiveDate>,
    },
    /// Register a new risk. Mutating.
    Add {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
        #[arg(long, value_parser = parse_enum::<Origin>)]
        origin: Origin,
        #[arg(long, value_parser = parse_enum::<Presence>)]
        presence: Presence,
        #[arg(long)]
        sphere: String,
        #[arg(long, value_delimiter = ',')]
        depends: Vec<String>,
        /// Probability for probable risks, severity for existing ones.
        #[arg(long, allow_negative_numbers = true)]
        driver: f64,
        #[arg(long, value_parser = parse_enum::<Dynamics>)]
        dynamics: Option<Dynamics>,
    },
    /// Record one observation. Mutating.
    Observe {
        #[arg(long)]
        id: String,
        /// Period index or ISO-8601 date.
        #[arg(long, allow_negative_numbers = true)]
        t: String,
        #[arg(long, value_parser = parse_enum::<DriverKind>)]
        kind: DriverKind,
        #[arg(long, allow_negative_numbers = true)]
        value: f64,
        #[arg(long)]
        note: Option<String>,
        #[arg(long, value_parser = parse_enum::<Declaration>)]
        declare: Option<Declaration>,
    },
    /// Import observations from a CSV file. Mutating.
    Import { file: PathBuf },
    /// Print the register assessment.
    Assess {
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Assess a hypothetical register without saving it.
    Whatif {
        /// Driver overrides, e.g. `A=0.2,B=0.5`.
        #[arg(long, value_delimiter = ',', value_parser = parse_assignment)]
        set: Vec<(String, f64)>,
        #[arg(long, value_delimiter = ',')]
        remove: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run the nine-stage assessment cycle.
    Cycle {
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Print the event log, one JSON object per line.
    Events {
        #[arg(long, allow_negative_numbers = true)]
        since: Option<f64>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "RISKWARDEN_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = "RISKWARDEN_CORS_ORIGIN")]
        cors_origin: Option<String>,
    },
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unrecognized value '{s}'"))
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (id, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected id=VALUE, got '{s}'"))?;
    let v = v
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("'{v}' is not a number"))?;
    Ok((id.trim().to_string(), v))
}

enum Failure {
    Usage(String),
    Core(Error),
    Serve(ServeError),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ServeError> for Failure {
    fn from(e: ServeError) -> Self {
        Failure::Serve(e)
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Domain | ErrorClass::NotFound | ErrorClass::Conflict => 1,
        ErrorClass::Io => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
        Err(Failure::Serve(e)) => {
            eprintln!("error: {e}");
            let code = match &e {
                ServeError::Register(inner) => exit_code(inner.class()),
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let path = cli
        .register
        .ok_or_else(|| Failure::Usage("--register PATH (or RISKWARDEN_REGISTER) is required".into()))?;
    match cli.command {
        Command::Init {
            stage,
            periods,
            period_days,
            taxonomy,
            epoch,
        } => {
            let horizon = Horizon {
                stage,
                periods,
                period_days,
            };
            let epoch = epoch.unwrap_or_else(|| chrono::Utc::now().date_naive());
            store::create_register(&path, horizon, taxonomy, epoch)?;
            println!("created {}", path.display());
        }
        Command::Add {
            id,
            name,
            origin,
            presence,
            sphere,
            depends,
            driver,
            dynamics,
        } => {
            let mut st = RegisterStore::open(&path)?;
            let snap = st.add_risk(NewRisk {
                id: id.clone(),
                name,
                sphere,
                origin,
                presence,
                driver,
                dependencies: depends,
                dynamics,
            })?;
            println!("{id}\tscore {}\t{}", riskwarden_core::fixed12(snap.score), render::label(&snap.band));
        }
        Command::Observe {
            id,
            t,
            kind,
            value,
            note,
            declare,
        } => {
            let mut st = RegisterStore::open(&path)?;
            let t = store::parse_period(st.register(), &t).map_err(Failure::Usage)?;
            let obs = Observation {
                t,
                kind,
                value,
                note,
                declare,
            };
            let events = st.record_observation(&id, &obs)?;
            let score = st.register().get(&id)?.score;
            println!("{id}\tt {t}\tscore {}", riskwarden_core::fixed12(score));
            for e in &events {
                println!("{}", render::event_line(e));
            }
        }
        Command::Import { file } => {
            let table = std::fs::File::open(&file).map_err(|e| Error::Io {
                path: file.clone(),
                source: e,
            })?;
            let mut st = RegisterStore::open(&path)?;
            let summary = st.import_observations(table)?;
            print!("{}", render::import_summary(&summary));
        }
        Command::Assess { format } => {
            let reg = store::load_register(&path)?;
            let report = assessment::assess(&reg);
            emit(format, &report, || render::assessment(&report));
        }
        Command::Whatif { set, remove, format } => {
            let reg = store::load_register(&path)?;
            let scenario = scenario(set, remove);
            let report = assessment::what_if(&reg, &scenario)?;
            emit(format, &report, || render::assessment(&report));
        }
        Command::Cycle { format } => {
            let reg = store::load_register(&path)?;
            let report = cycle::run_cycle(&reg, &CycleConfig::from_register(&reg))?;
            emit(format, &report, || render::cycle(&report));
        }
        Command::Events { since } => {
            for e in store::read_events(&path, since)? {
                println!("{}", serde_json::to_string(&e).expect("log entries serialize"));
            }
        }
        Command::Serve { addr, cors_origin } => serve(&path, addr, cors_origin)?,
    }
    Ok(())
}

fn scenario(set: Vec<(String, f64)>, remove: Vec<String>) -> WhatIfScenario {
    let mut parts = Vec::new();
    let mut interventions: Vec<Intervention> = set
        .into_iter()
        .map(|(risk_id, value)| {
            parts.push(format!("{risk_id}={value}"));
            Intervention::SetDriver { risk_id, value }
        })
        .collect();
    for risk_id in remove {
        parts.push(format!("-{risk_id}"));
        interventions.push(Intervention::Remove { risk_id });
    }
    WhatIfScenario {
        label: parts.join(" "),
        interventions,
    }
}

fn emit<T: serde::Serialize>(format: Format, value: &T, table: impl FnOnce() -> String) {
    match format {
        Format::Table => print!("{}", table()),
        Format::Structured => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("reports serialize")
        ),
    }
}

fn serve(path: &Path, addr: SocketAddr, cors_origin: Option<String>) -> Result<(), Failure> {
    let cfg = ServeConfig {
        register: path.to_path_buf(),
        addr,
        cors_origin,
    };
    let rt = tokio::runtime::Runtime::new().map_err(ServeError::Io)?;
    rt.block_on(async {
        let server = Server::bind(&cfg).await?;
        eprintln!("listening on http://{}", server.local_addr());
        server.run().await
    })?;
    Ok(())
}
