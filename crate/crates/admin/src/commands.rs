use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use bib_core::cohort::{parse_cohort_file_with_lines, validate_snapshot};
use bib_core::{CohortError, Timestamp};
use bib_service::http::{self, ServeConfig};
use bib_service::{DataDir, Listing, StoreError, SwapError, TokenTable};

use crate::Format;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("{0}")]
    Recovery(#[from] bib_service::RecoveryError),
    #[error("{0}")]
    Serve(#[from] http::ServeError),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Syntax { path: String, line: usize, reason: String },
    #[error("{0} violation(s); nothing imported")]
    Invalid(usize),
    #[error("stale import: {offered} is not newer than the active {current}")]
    Stale { current: Timestamp, offered: Timestamp },
    #[error("unknown mother {0}")]
    UnknownMother(String),
}

pub fn import(data: &DataDir, file: &Path, stamp_now: bool, format: Format) -> Result<(), CommandError> {
    let shown = file.display().to_string();
    let read = |e| CommandError::Read { path: shown.clone(), source: e };
    let mut text = std::fs::read_to_string(file).map_err(read)?;
    let syntax = |e: CohortError| match e {
        CohortError::Syntax { line, reason } => CommandError::Syntax { path: shown.clone(), line, reason },
    };

    let (mut snapshot, mut lines) = parse_cohort_file_with_lines(&text).map_err(syntax)?;
    if stamp_now {
        let now = Timestamp::now();
        text = text
            .lines()
            .enumerate()
            .map(|(i, l)| if i + 1 == lines.update { now.to_string() } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
        bib_service::datadir::write_atomic(file, text.as_bytes(), false)?;
        (snapshot, lines) = parse_cohort_file_with_lines(&text).map_err(syntax)?;
    }

    let report = validate_snapshot(&snapshot);
    if !report.ok() {
        for v in &report.errors {
            match v.locator.line(&lines) {
                Some(line) => eprintln!("{shown}:{line}: {v}"),
                None => eprintln!("{shown}: {v}"),
            }
        }
        return Err(CommandError::Invalid(report.errors.len()));
    }

    let previous = match data.install_snapshot(&snapshot) {
        Err(StoreError::Swap(SwapError::StaleImport { current, offered })) => {
            return Err(CommandError::Stale { current, offered })
        }
        other => other?,
    };
    let (m, c, n) = snapshot.counts();
    let out = match format {
        Format::Text => {
            let mut s = format!("imported {}: {m} mothers, {c} children, {n} measurements", snapshot.update_date);
            if let Some(p) = previous {
                let _ = write!(s, " (replaces {p})");
            }
            s + "\n"
        }
        Format::Tsv => format!(
            "update_date\tmothers\tchildren\tmeasurements\treplaces\n{}\t{m}\t{c}\t{n}\t{}\n",
            snapshot.update_date,
            previous.map(|p| p.to_string()).unwrap_or_default()
        ),
    };
    print!("{out}");
    Ok(())
}

pub fn issue_token(data: &DataDir, mother_id: &str, format: Format) -> Result<(), CommandError> {
    let snapshot = data.require_snapshot()?;
    if snapshot.mother(mother_id).is_none() {
        return Err(CommandError::UnknownMother(mother_id.to_string()));
    }
    let mut table = data.load_tokens()?.unwrap_or_else(TokenTable::new);
    let token = table.issue(mother_id);
    data.save_tokens(&table)?;
    match format {
        Format::Text => println!("{token}"),
        Format::Tsv => println!("mother_id\ttoken\n{mother_id}\t{token}"),
    }
    Ok(())
}

pub fn recovery_list(
    data: &DataDir,
    pending_only: bool,
    handle: Option<u64>,
    format: Format,
) -> Result<(), CommandError> {
    let queue = data.open_recovery()?;
    if let Some(id) = handle {
        queue.mark_handled(id)?;
    }
    let listing = if pending_only { Listing::Pending } else { Listing::All };
    let rows = queue.list(listing);
    let mut out = String::new();
    match format {
        Format::Text => {
            let _ = writeln!(out, "{:>4}  {:<8} {:<20} HINT", "ID", "STATUS", "RECEIVED");
            for r in &rows {
                let hint = r.mother_hint.replace(['\n', '\r', '\t'], " ");
                let _ = writeln!(out, "{:>4}  {:<8} {:<20} {hint}", r.request_id, r.status.as_str(), r.received_at);
            }
        }
        Format::Tsv => {
            out.push_str("request_id\tstatus\treceived_at\thint\n");
            for r in &rows {
                let hint = r.mother_hint.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r");
                let _ = writeln!(out, "{}\t{}\t{}\t{hint}", r.request_id, r.status.as_str(), r.received_at);
            }
        }
    }
    print!("{out}");
    Ok(())
}

pub fn serve(data: DataDir, port: u16, reload_secs: u64) -> Result<(), CommandError> {
    let mut config = ServeConfig::new(port, data);
    config.reload_every = (reload_secs > 0).then(|| Duration::from_secs(reload_secs));
    http::run(config, |addr| {
        println!("listening on {addr}");
        let _ = std::io::stdout().flush();
    })?;
    Ok(())
}
