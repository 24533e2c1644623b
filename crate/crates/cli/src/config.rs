//! Workspace settings: defaults, the `.conflict-radar/config.toml` key=value
//! file, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use conflict_radar_sync::DEFAULT_PORT;

pub const META_DIR: &str = ".conflict-radar";
pub const CONFIG_FILE: &str = "config.toml";
pub const DEFAULT_DEBOUNCE_MILLIS: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RevisionProvider {
    #[default]
    File,
    Git,
}

impl FromStr for RevisionProvider {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "file" => Ok(RevisionProvider::File),
            "git" => Ok(RevisionProvider::Git),
            other => Err(ConfigError::Invalid { key: "revision_provider".into(), value: other.into() }),
        }
    }
}

impl fmt::Display for RevisionProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RevisionProvider::File => "file",
            RevisionProvider::Git => "git",
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown setting `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    Invalid { key: String, value: String },
    #[error("author must not be empty")]
    NoAuthor,
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkspaceConfig {
    pub project: String,
    pub root: PathBuf,
    pub include: Vec<String>,
    pub server: String,
    pub author: String,
    pub debounce_millis: u64,
    pub revision_provider: RevisionProvider,
}

impl WorkspaceConfig {
    /// Defaults for a workspace rooted at `root`; the project is named
    /// after the directory.
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        let project = root
            .canonicalize()
            .ok()
            .as_deref()
            .unwrap_or(&root)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".into());
        WorkspaceConfig {
            project,
            root,
            include: vec!["**/*.java".into()],
            server: format!("127.0.0.1:{DEFAULT_PORT}"),
            author: String::new(),
            debounce_millis: DEFAULT_DEBOUNCE_MILLIS,
            revision_provider: RevisionProvider::File,
        }
    }

    /// Defaults overlaid with the workspace's config file, if it has one.
    pub fn load(root: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let mut config = WorkspaceConfig::new(root);
        let path = config.meta_dir().join(CONFIG_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => config.apply_file(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(ConfigError::Io { path: path.display().to_string(), message: e.to_string() }),
        }
        Ok(config)
    }

    pub fn meta_dir(&self) -> PathBuf {
        self.root.join(META_DIR)
    }

    /// Applies `key = value` lines. Blank lines, `#` comments and
    /// `[section]` headers are skipped; values may be quoted, and
    /// `include` takes a comma list or a bracketed array.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('[') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let invalid = || ConfigError::Invalid { key: key.into(), value: value.into() };
        match key.replace('-', "_").to_ascii_lowercase().as_str() {
            "project" | "projectname" | "project_name" => self.project = unquote(value),
            "author" => self.author = unquote(value),
            "server" | "serveraddress" | "server_address" => self.server = unquote(value),
            "include" => {
                let list = value.trim().trim_start_matches('[').trim_end_matches(']');
                self.include = list.split(',').map(unquote).filter(|s| !s.is_empty()).collect();
                if self.include.is_empty() {
                    return Err(invalid());
                }
            }
            "debounce" | "debouncemillis" | "debounce_millis" => {
                self.debounce_millis = unquote(value).parse().map_err(|_| invalid())?;
            }
            "revisionprovider" | "revision_provider" => self.revision_provider = unquote(value).parse()?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.author.trim().is_empty() {
            return Err(ConfigError::NoAuthor);
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

fn unquote(value: &str) -> String {
    let v = value.trim();
    let stripped = v
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .or_else(|| v.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')));
    stripped.unwrap_or(v).to_string()
}
