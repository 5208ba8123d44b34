//! `tablog`: load programs, run tabled queries, dump traces and tables, check
//! against the bottom-up oracle and time the meta-interpreter.
//!
//! Every command is a request to the HTTP service. Without `--server` an
//! in-process server on a loopback port answers it.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tablog_api as api;
use tablog_client::{Client, ClientError};

#[derive(Parser)]
#[command(name = "tablog", version, about = "Tabled Horn-clause evaluation")]
struct Cli {
    /// Base URL of a running service; an in-process server is used when absent.
    #[arg(long, global = true, env = "TABLOG_SERVER")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one query and print its answers.
    Run(RunArgs),
    /// Run one query with a trace (log format unless `--trace` says otherwise).
    Trace(RunArgs),
    /// Print the program with every table_index directive compiled away.
    Transform { programs: Vec<PathBuf> },
    /// Run one query and print every table entry.
    DumpTables(RunArgs),
    /// Compare engine answers with the least model.
    Check {
        programs: Vec<PathBuf>,
        #[arg(long)]
        query: String,
        /// Also print the bottom-up iteration log.
        #[arg(long)]
        iterations: bool,
    },
    /// Time the bottom-up meta-interpreter on triangular programs.
    Bench {
        /// Proposition-occurrence targets, increasing.
        #[arg(long, value_delimiter = ',', default_values_t = [10_000u64, 20_000, 100_000, 200_000, 1_000_000])]
        sizes: Vec<u64>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, value_enum, default_value_t = ScheduleArg::Model)]
        schedule: ScheduleArg,
    },
    /// Look up employees through the file-reading emp_data/4 table.
    IngestDemo {
        /// File of emp(Id,Name,Addr) records, relative to the data directory.
        file: String,
        /// Employee ids to query, one query each.
        #[arg(long, value_delimiter = ',', default_values_t = [1i64, 2])]
        ids: Vec<i64>,
        #[arg(long, env = "TABLOG_DATA_DIR")]
        data_dir: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Program files, loaded in order.
    #[arg(required = true)]
    programs: Vec<PathBuf>,
    #[arg(long)]
    query: String,
    #[arg(long, value_enum)]
    trace: Option<TraceArg>,
    #[arg(long)]
    step_limit: Option<u64>,
    /// Report answers as they are derived.
    #[arg(long)]
    stream: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Model)]
    schedule: ScheduleArg,
    /// Directory that relative data_records/3 file names resolve against.
    #[arg(long, env = "TABLOG_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceArg {
    Off,
    Log,
    Machines,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Model,
    Eager,
}

impl From<TraceArg> for api::TraceMode {
    fn from(t: TraceArg) -> Self {
        match t {
            TraceArg::Off => api::TraceMode::Off,
            TraceArg::Log => api::TraceMode::Log,
            TraceArg::Machines => api::TraceMode::Machines,
        }
    }
}

impl From<ScheduleArg> for api::Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Model => api::Schedule::Model,
            ScheduleArg::Eager => api::Schedule::Eager,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Client(ClientError),
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        Failure::Client(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input: {m}"),
            Failure::Client(ClientError::Api { body, .. }) => write!(f, "{}: {}", body.kind, body.message),
            Failure::Client(e) => write!(f, "{e}"),
        }
    }
}

/// Outcome of a command that ran: whether it produced answers (or passed).
type Outcome = Result<bool, Failure>;

fn read_programs(paths: &[PathBuf]) -> Result<String, Failure> {
    if paths.is_empty() {
        return Err(Failure::Input("no program files given".into()));
    }
    let mut text = String::new();
    for p in paths {
        let src = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        text.push_str(&src);
        text.push('\n');
    }
    Ok(text)
}

fn data_root(dir: &Option<PathBuf>) -> Result<Option<String>, Failure> {
    dir.as_ref()
        .map(|d| {
            std::path::absolute(d)
                .map(|p| p.to_string_lossy().into_owned())
                .map_err(|e| Failure::Input(format!("{}: {e}", d.display())))
        })
        .transpose()
}

fn print_answers(answers: &[api::AnswerRecord], format: Format) {
    match format {
        Format::Records => {
            for a in answers {
                println!("{}", serde_json::to_string(a).expect("records serialize"));
            }
        }
        Format::Text => {
            if answers.iter().any(|a| a.answer == "true") {
                println!("yes");
                return;
            }
            for a in answers {
                println!("{}", a.answer);
            }
            println!("no");
        }
    }
}

fn render_entry(e: &api::TableEntry) -> String {
    let susp: Vec<String> = e.suspensions.iter().map(|s| format!("{}:{}", s.consumer, s.cursor)).collect();
    format!("{}:[{}],[{}]", e.goal, e.answers.join(","), susp.join(","))
}

async fn run(client: &Client, args: RunArgs, default_trace: TraceArg, tables: bool) -> Outcome {
    let req = api::RunRequest {
        program: read_programs(&args.programs)?,
        query: args.query,
        trace: args.trace.unwrap_or(default_trace).into(),
        options: api::EngineOptions {
            schedule: args.schedule.into(),
            step_limit: args.step_limit,
            stream: args.stream,
            data_root: data_root(&args.data_dir)?,
        },
        tables,
    };
    let resp = client.run(&req).await?;
    if let Some(trace) = &resp.trace {
        // Records stay machine-readable on stdout; the trace moves aside.
        if args.format == Format::Records {
            eprint!("{trace}");
        } else {
            print!("{trace}");
        }
    }
    if let Some(entries) = &resp.tables {
        for e in entries {
            println!("{}", render_entry(e));
        }
    } else {
        print_answers(&resp.answers, args.format);
    }
    Ok(!resp.answers.is_empty())
}

async fn dispatch(client: &Client, command: Command) -> Outcome {
    match command {
        Command::Run(args) => run(client, args, TraceArg::Off, false).await,
        Command::Trace(args) => run(client, args, TraceArg::Log, false).await,
        Command::DumpTables(args) => run(client, args, TraceArg::Off, true).await,
        Command::Transform { programs } => {
            let resp = client.transform(&api::TransformRequest { program: read_programs(&programs)? }).await?;
            print!("{}", resp.program);
            Ok(true)
        }
        Command::Check { programs, query, iterations } => {
            let req = api::CheckRequest { program: read_programs(&programs)?, query, iterations };
            let resp = client.check(&req).await?;
            if let Some(log) = &resp.iterations {
                print!("{log}");
            }
            println!("engine: [{}]", resp.engine.join(", "));
            println!("oracle: [{}]", resp.oracle.join(", "));
            let mut pass = resp.agrees;
            if let Some(c) = &resp.conditions {
                println!("reachable: {}", c.reachable);
                println!("bodies: {}", c.bodies);
                if let Some(w) = &c.witness {
                    println!("witness: {w}");
                }
            }
            if let Some(m) = &resp.model {
                for f in &m.missing {
                    println!("missing: {f}");
                }
                for f in &m.extra {
                    println!("extra: {f}");
                }
                pass &= m.missing.is_empty() && m.extra.is_empty();
            }
            println!("{}", if pass { "PASS" } else { "FAIL" });
            Ok(pass)
        }
        Command::Bench { sizes, reps, warmup, schedule } => {
            let resp = client.bench(&api::BenchRequest { sizes, reps, warmup, schedule: schedule.into() }).await?;
            print!("{}", resp.table);
            Ok(true)
        }
        Command::IngestDemo { file, ids, data_dir } => {
            let req = api::IngestDemoRequest { file, ids, data_root: data_root(&data_dir)? };
            let resp = client.ingest_demo(&req).await?;
            for a in &resp.answers {
                println!("{}: {}", a.query, a.answer);
            }
            for (goal, n) in &resp.tables {
                println!("table {goal}: {n} answers");
            }
            println!("file opens: {}", resp.file_opens);
            Ok(!resp.answers.is_empty())
        }
        Command::Serve { .. } => unreachable!("handled before dispatch"),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve { addr } = &cli.command {
        let served = async {
            let listener = tokio::net::TcpListener::bind(addr).await?;
            eprintln!("listening on http://{}", listener.local_addr()?);
            tablog_server::serve(listener).await
        };
        return match served.await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        };
    }
    let client = match cli.server {
        Some(url) => Client::new(url),
        None => match tablog_server::spawn_local().await {
            Ok((addr, _)) => Client::new(format!("http://{addr}")),
            Err(e) => {
                eprintln!("error: cannot start local server: {e}");
                return ExitCode::from(2);
            }
        },
    };
    match dispatch(&client, cli.command).await {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
