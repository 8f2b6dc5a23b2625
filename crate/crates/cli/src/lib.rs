//! Scenario configuration, runners and CSV output for `asymphot`.

pub mod config;
pub mod scenario;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

use asymphot::DispersionConvention;
use thiserror::Error;

use config::{parse_config, preset, ConfigError, ScenarioConfig};
use table::{emit_csv, OutputTable};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: asymphot::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for configuration and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Model { source, .. } if source.is_config() => 1,
            CliError::Model { .. } => 2,
        }
    }

    pub(crate) fn in_context(self, outer: String) -> Self {
        match self {
            CliError::Model { context, source } => CliError::Model {
                context: format!("{outer}: {context}"),
                source,
            },
            other => other,
        }
    }
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub no_normalize: bool,
    pub convention: Option<DispersionConvention>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if self.no_normalize {
            cfg.output.normalize = false;
        }
        if let Some(c) = self.convention {
            cfg.modes.convention = c;
        }
    }
}

/// `@name` selects a preset, anything else is read as a file.
pub fn load_config(arg: &str) -> Result<ScenarioConfig, CliError> {
    if let Some(name) = arg.strip_prefix('@') {
        return preset(name).ok_or_else(|| {
            ConfigError::Invalid {
                field: "scenario".into(),
                message: format!("no built-in scenario named `{name}`"),
            }
            .into()
        });
    }
    let text = fs::read_to_string(arg).map_err(|source| CliError::Io {
        path: arg.to_string(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(ConfigError::Invalid {
            field: "--threads".into(),
            message: "must be at least 1".into(),
        }
        .into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ConfigError::Invalid {
                    field: "--threads".into(),
                    message: e.to_string(),
                })?;
            Ok(pool.install(f))
        }
    }
}

pub fn output_path(out_dir: &Path, cfg: &ScenarioConfig, table: &OutputTable) -> PathBuf {
    out_dir.join(format!("{}_{}.csv", cfg.name(), table.kind))
}

pub fn write_tables(
    out_dir: &Path,
    cfg: &ScenarioConfig,
    tables: &[OutputTable],
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    tables
        .iter()
        .map(|t| {
            let path = output_path(out_dir, cfg, t);
            emit_csv(t, &path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}
