use std::path::{Path, PathBuf};

use dronesurvey_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// A file that cannot be read at all (missing column, bad JSON, ...).
    #[error("{0}")]
    Format(String),
    /// Rows or fields that failed validation, with line numbers.
    #[error("{}", .0.join("\n"))]
    Rows(Vec<String>),
    #[error(
        "coordinates look like longitude/latitude; reproject the region to a planar CRS in meters"
    )]
    ProjectionRequired,
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for input and validation problems, 3 when planning is impossible,
    /// 4 for numeric or model failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) => match e {
                CoreError::EmptyGrid | CoreError::NoLaunchPoint { .. } => 3,
                CoreError::NonIdentifiable(_)
                | CoreError::NonConvergence { .. }
                | CoreError::RankDeficient(_)
                | CoreError::PUndefined(_)
                | CoreError::Numeric(_) => 4,
                _ => 2,
            },
            _ => 2,
        }
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
