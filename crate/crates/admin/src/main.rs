use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser)]
#[command(name = "bib-admin", version, about = "Operate the cohort service data directory")]
struct Cli {
    /// Service data directory (snapshot, token table, recovery log).
    #[arg(long, global = true, env = "BIB_DATA_DIR")]
    data_dir: Option<PathBuf>,

    /// Token table path; defaults to <data-dir>/tokens.tsv.
    #[arg(long, global = true, env = "BIB_TOKENS")]
    tokens: Option<PathBuf>,

    /// Recovery log path; defaults to <data-dir>/recovery.log.
    #[arg(long, global = true, env = "BIB_RECOVERY_LOG")]
    recovery_log: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a cohort file and install it as the active snapshot.
    Import {
        file: PathBuf,
        /// Rewrite the file's #UPDATE to the current time before importing.
        #[arg(long)]
        stamp_now: bool,
    },
    /// Mother token management.
    Token {
        #[command(subcommand)]
        command: TokenCommand,
    },
    /// Forgot-ID request queue.
    Recovery {
        #[command(subcommand)]
        command: RecoveryCommand,
    },
    /// Run the SOAP endpoint until SIGTERM or Ctrl-C.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Seconds between checks for replaced snapshot or token files; 0 disables.
        #[arg(long, default_value_t = 2)]
        reload_secs: u64,
    },
}

#[derive(Subcommand)]
enum TokenCommand {
    /// Issue a new token for a mother, revoking any previous one.
    Issue { mother_id: String },
}

#[derive(Subcommand)]
enum RecoveryCommand {
    /// List requests (all by default).
    List(ListArgs),
}

#[derive(Args)]
struct ListArgs {
    #[arg(long, conflicts_with = "all")]
    pending: bool,
    #[arg(long)]
    all: bool,
    /// Mark a request handled before listing.
    #[arg(long, value_name = "ID")]
    handle: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();

    let Some(root) = cli.data_dir.clone() else {
        eprintln!("error: no data directory; pass --data-dir or set BIB_DATA_DIR");
        return ExitCode::FAILURE;
    };
    let mut data = bib_service::DataDir::new(root);
    if let Some(p) = cli.tokens {
        data = data.with_tokens_path(p);
    }
    if let Some(p) = cli.recovery_log {
        data = data.with_recovery_path(p);
    }

    let result = match cli.command {
        Command::Import { file, stamp_now } => commands::import(&data, &file, stamp_now, cli.format),
        Command::Token { command: TokenCommand::Issue { mother_id } } => {
            commands::issue_token(&data, &mother_id, cli.format)
        }
        Command::Recovery { command: RecoveryCommand::List(args) } => {
            commands::recovery_list(&data, args.pending, args.handle, cli.format)
        }
        Command::Serve { port, reload_secs } => commands::serve(data, port, reload_secs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
