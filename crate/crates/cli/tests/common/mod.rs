//! Shared helpers for command transcripts.

use std::path::PathBuf;

use plderive_cli::run;

pub fn dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

/// Runs one command with fixture file names resolved, and renders the
/// transcript: stdout, stderr and exit status.
pub fn transcript(args: &str) -> String {
    let fixtures = dir("fixtures");
    let resolved: Vec<String> = args
        .split_whitespace()
        .map(|a| {
            let path = fixtures.join(a);
            if a.contains('.') && !a.contains('=') && !a.starts_with('-') && a.parse::<f64>().is_err() {
                path.to_string_lossy().into_owned()
            } else {
                a.to_owned()
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("plderive".to_owned()).chain(resolved), &mut out, &mut err);
    let prefix = format!("{}/", fixtures.display());
    let err = String::from_utf8(err).unwrap().replace(&prefix, "");
    format!("$ plderive {args}\n--- stdout\n{}--- stderr\n{err}--- exit {code}\n", String::from_utf8(out).unwrap())
}
