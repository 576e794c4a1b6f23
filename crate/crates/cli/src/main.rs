//! `hybridsl`: check, run and benchmark programs, and manage context keys.
//!
//! Exit status is 0 on success, 1 for domain failures (violations, runtime
//! errors, authentication failures, bench mismatches) and 2 for usage or
//! format errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hybridsl_core::backends::BackendKind;

#[derive(Parser)]
#[command(name = "hybridsl", version, about = "Hybrid FHE/TEE computation language toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a program against a context or signature file.
    Check {
        program: PathBuf,
        /// Context file, or a signature file mapping names to {label, kind}.
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run a program on one backend and write the output context.
    Run {
        program: PathBuf,
        #[arg(long)]
        context: PathBuf,
        #[arg(long, default_value = "clear", value_parser = parse_backend)]
        backend: BackendKind,
        /// Key file path or 64 hex characters.
        #[arg(long, env = "HYBRIDSL_KEY", hide_env_values = true)]
        key: Option<String>,
        /// Output context path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated variables to keep in the output.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        #[arg(long)]
        cost_table: Option<PathBuf>,
    },
    /// Run a program repeatedly on several backends and compare them.
    Bench {
        program: PathBuf,
        #[arg(long)]
        context: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "clear,fhe-sim,tee-sim", value_parser = parse_backend)]
        backends: Vec<BackendKind>,
        #[arg(long, default_value_t = 5)]
        reps: u32,
        #[arg(long, env = "HYBRIDSL_KEY", hide_env_values = true)]
        key: Option<String>,
        #[arg(long)]
        cost_table: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print the parsed syntax tree.
    DumpAst {
        program: PathBuf,
        #[arg(long, value_enum, default_value_t = AstFormat::Text)]
        format: AstFormat,
    },
    /// Generate a context key.
    Keygen {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seal the plain encrypted-labelled variables of a context.
    Seal {
        #[arg(long, env = "HYBRIDSL_KEY", hide_env_values = true)]
        key: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Open every sealed variable of a context for inspection.
    Unseal {
        #[arg(long, env = "HYBRIDSL_KEY", hide_env_values = true)]
        key: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AstFormat {
    Text,
    Json,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse().map_err(|e: hybridsl_core::backends::UnknownBackend| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { program, input, json } => commands::check(&program, &input, json),
        Command::Run {
            program,
            context,
            backend,
            key,
            out,
            only,
            cost_table,
        } => commands::run(commands::RunArgs {
            program,
            context,
            backend,
            key,
            out,
            only,
            cost_table,
        }),
        Command::Bench {
            program,
            context,
            backends,
            reps,
            key,
            cost_table,
            json,
        } => commands::bench(commands::BenchArgs {
            program,
            context,
            backends,
            reps,
            key,
            cost_table,
            json,
        }),
        Command::DumpAst { program, format } => {
            commands::dump_ast(&program, matches!(format, AstFormat::Json))
        }
        Command::Keygen { out } => commands::keygen(out.as_deref()),
        Command::Seal { key, input, out } => commands::seal(key, &input, out.as_deref(), true),
        Command::Unseal { key, input, out } => commands::seal(key, &input, out.as_deref(), false),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message);
            ExitCode::from(failure.status)
        }
    }
}
