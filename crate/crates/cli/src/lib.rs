//! Command-line front end: flag and config-file parsing, subcommand
//! dispatch, JSON reports and CSV curves.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{parse_args, resolve, Kind, RunConfig};
pub use error::{CliError, CliResult};
pub use report::{Report, SCHEMA_ID};
pub use run::{run, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

/// Parses, runs and writes outputs; returns the process exit status.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match try_execute(argv) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprint!("{msg}");
            EXIT_ERROR
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn try_execute<I, T>(argv: I) -> CliResult<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let Some(cfg) = parse_args(argv)? else {
        return Ok(EXIT_OK);
    };
    let strict = cfg.output.strict;
    let json_path = cfg.output.json.clone();
    let csv_path = cfg.output.csv.clone();
    let outcome = run(cfg)?;
    let text = outcome.report.to_json();
    match &json_path {
        Some(path) => report::write_text(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &csv_path {
        match &outcome.csv {
            Some(table) => report::write_csv(path, table)?,
            None => eprintln!(
                "note: `{}` has no curve to write as CSV",
                outcome.report.kind.as_str()
            ),
        }
    }
    Ok(if strict && outcome.inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    })
}
