use std::io::Write;
use std::path::Path;

use mallows_lab::{LabError, VERSION};
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lab(LabError),
    Io(String),
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Lab(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lab(LabError::InvalidArgument(_)) => 2,
            CliError::Lab(_) | CliError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let error = match self {
            CliError::Usage(m) => json!({ "kind": "usage", "message": m }),
            CliError::Io(m) => json!({ "kind": "io", "message": m }),
            CliError::Lab(e) => {
                let mut v = json!({ "kind": e.kind(), "message": e.to_string() });
                match e {
                    LabError::ExistenceViolated { margin, required } => {
                        v["margin"] = json!(margin);
                        v["required"] = json!(required);
                    }
                    LabError::NonConvergence { iterations, last_change, .. } => {
                        v["iterations"] = json!(iterations);
                        v["last_change"] = json!(last_change);
                    }
                    LabError::InvalidArgument(_) => {}
                }
                v
            }
        };
        json!({ "version": VERSION, "error": error })
    }
}

/// Writes `content` to `path` through a temporary file in the same
/// directory and a rename, or to standard output.
pub fn emit(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out.write_all(content.as_bytes()).map_err(|e| CliError::Io(e.to_string()));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Two numeric columns `(coordinate, value)`; a non-numeric first row is
/// taken as a header.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        if rec.len() != 2 {
            return Err(CliError::Usage(format!("{name}: row {} needs two columns", row + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if row == 0 => continue,
            _ => return Err(CliError::Usage(format!("{name}: row {} is not numeric", row + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(CliError::Usage(format!("{name}: need at least two data rows")));
    }
    Ok((xs, vs))
}
