//! Shell-flavoured command strings to structured [`ActionIr`] values.
//!
//! The grammar is a deliberately small POSIX subset: top-level connector
//! splitting (`;`, `&&`, `||`, `|`, `&`, newline), single/double quotes,
//! backslash escapes and redirections. Nothing is expanded or evaluated.
//! Command substitution, `eval`, variable references, subshells and
//! heredocs turn the whole simple command into [`ActionKind::Unknown`], as
//! does any program outside the recognizer table. Input is never dropped:
//! every non-empty command yields at least one action.

mod extension;
mod lexer;
mod recognize;

use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paths::{self, PersistenceDomain, DEFAULT_HOME};

pub use extension::{ExtensionError, ExtensionRule, RecognizerExtensions};

/// Largest accepted single command, in bytes.
pub const MAX_INPUT_BYTES: usize = 64 * 1024;

/// One planned host action. `sudo` is carried by the wrapper so that it
/// applies uniformly to every payload kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionIr {
    pub sudo: bool,
    #[serde(flatten)]
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ActionKind {
    Exec(Exec),
    FileWrite(FileOp),
    FileRead(FileOp),
    FileDelete(FileOp),
    NetBind(NetBind),
    FirewallChange(FirewallChange),
    PackageInstall(PackageInstall),
    ServiceControl(ServiceControl),
    ConfigEdit(ConfigEdit),
    Download(Download),
    Unknown(Unknown),
}

impl ActionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActionKind::Exec(_) => "Exec",
            ActionKind::FileWrite(_) => "FileWrite",
            ActionKind::FileRead(_) => "FileRead",
            ActionKind::FileDelete(_) => "FileDelete",
            ActionKind::NetBind(_) => "NetBind",
            ActionKind::FirewallChange(_) => "FirewallChange",
            ActionKind::PackageInstall(_) => "PackageInstall",
            ActionKind::ServiceControl(_) => "ServiceControl",
            ActionKind::ConfigEdit(_) => "ConfigEdit",
            ActionKind::Download(_) => "Download",
            ActionKind::Unknown(_) => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exec {
    pub program: String,
    pub argv: Vec<String>,
    pub piped_to_shell: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permission: Option<PermissionChange>,
}

/// Metadata recorded for `chmod`/`chown`/`chgrp`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionChange {
    pub tool: String,
    pub mode: Option<String>,
    /// Grants write access to everyone (`777`, `a+w`, ...).
    pub wide: bool,
    pub recursive: bool,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileOp {
    pub path: String,
    pub recursive: bool,
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InterfaceClass {
    Loopback,
    Private,
    Public,
    Wildcard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetBind {
    pub address: String,
    pub port: u16,
    pub interface_class: InterfaceClass,
    /// Reachability comes from a third-party tunnel rather than a socket.
    #[serde(default)]
    pub tunnel: bool,
}

impl NetBind {
    pub fn new(address: impl Into<String>, port: u16) -> NetBind {
        let address = address.into();
        let interface_class = classify_interface(&address);
        NetBind { address, port, interface_class, tunnel: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirewallDirection {
    Open,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirewallChange {
    pub direction: FirewallDirection,
    pub target_port: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageInstall {
    pub manager: String,
    pub packages: Vec<String>,
    pub system_wide: bool,
    pub added_repository: Option<String>,
    /// Registry the packages are fetched from (`apt`, `pypi`, `npm`, or an
    /// index host given on the command line).
    pub registry: String,
    #[serde(default)]
    pub options: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServiceOp {
    Start,
    Stop,
    Restart,
    ForceRestart,
    Enable,
    Disable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceControl {
    pub service: String,
    pub op: ServiceOp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEdit {
    pub path: String,
    pub persistence_domain: PersistenceDomain,
    /// Written with an explicit force flag (`cp -f`, `mv -f`, `ln -sf`).
    #[serde(default)]
    pub force_overwrite: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Download {
    pub url: String,
    pub executed_inline: bool,
    pub target_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unknown {
    pub raw: String,
}

impl ActionIr {
    pub fn new(kind: ActionKind) -> ActionIr {
        ActionIr { sudo: false, kind }
    }

    pub fn unknown(raw: impl Into<String>) -> ActionIr {
        ActionIr::new(ActionKind::Unknown(Unknown { raw: raw.into() }))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.kind, ActionKind::Unknown(_))
    }

    /// Every filesystem path the action names.
    pub fn paths(&self) -> Vec<&str> {
        match &self.kind {
            ActionKind::FileWrite(f) | ActionKind::FileRead(f) | ActionKind::FileDelete(f) => {
                vec![f.path.as_str()]
            }
            ActionKind::ConfigEdit(c) => vec![c.path.as_str()],
            ActionKind::Download(d) => d.target_path.iter().map(String::as_str).collect(),
            ActionKind::Exec(e) => e
                .permission
                .iter()
                .flat_map(|p| p.targets.iter().map(String::as_str))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Loopback for `127.0.0.0/8`, `::1` and `localhost`; private for RFC 1918;
/// wildcard for `0.0.0.0` and `::`; public otherwise.
pub fn classify_interface(address: &str) -> InterfaceClass {
    let trimmed = address.trim_start_matches('[').trim_end_matches(']');
    if trimmed.eq_ignore_ascii_case("localhost") {
        return InterfaceClass::Loopback;
    }
    match trimmed.parse::<IpAddr>() {
        Ok(IpAddr::V4(v4)) => {
            if v4.is_unspecified() {
                InterfaceClass::Wildcard
            } else if v4.is_loopback() {
                InterfaceClass::Loopback
            } else if v4.is_private() {
                InterfaceClass::Private
            } else {
                InterfaceClass::Public
            }
        }
        Ok(IpAddr::V6(v6)) => {
            if v6.is_unspecified() {
                InterfaceClass::Wildcard
            } else if v6.is_loopback() {
                InterfaceClass::Loopback
            } else {
                InterfaceClass::Public
            }
        }
        Err(_) => InterfaceClass::Public,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Byte range into the raw command.
    pub span: (usize, usize),
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub actions: Vec<ActionIr>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("command is {0} bytes, limit is {MAX_INPUT_BYTES}")]
    InputTooLarge(usize),
    #[error("working directory {0:?} is not absolute")]
    RelativeCwd(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeStatus {
    InScope,
    OutOfScope,
    NoPathInvolved,
}

/// InScope iff every path of the action sits under some scope prefix.
pub fn scope_check(action: &ActionIr, scope_paths: &[String]) -> ScopeStatus {
    let action_paths = action.paths();
    if action_paths.is_empty() {
        return ScopeStatus::NoPathInvolved;
    }
    let escapes = action_paths
        .iter()
        .any(|p| !scope_paths.iter().any(|s| paths::is_under(p, s)));
    if escapes {
        ScopeStatus::OutOfScope
    } else {
        ScopeStatus::InScope
    }
}

/// Parser configuration: the home directory used for `~` and user-profile
/// paths, and optional recognizer extensions loaded from a rule file.
#[derive(Debug, Clone)]
pub struct CommandParser {
    home: String,
    extensions: RecognizerExtensions,
}

impl Default for CommandParser {
    fn default() -> Self {
        CommandParser { home: DEFAULT_HOME.to_string(), extensions: RecognizerExtensions::default() }
    }
}

impl CommandParser {
    pub fn new(home: impl Into<String>) -> CommandParser {
        CommandParser { home: paths::lexical_normalize(&home.into()), ..Default::default() }
    }

    pub fn with_extensions(mut self, extensions: RecognizerExtensions) -> CommandParser {
        self.extensions = extensions;
        self
    }

    pub fn home(&self) -> &str {
        &self.home
    }

    pub fn extensions(&self) -> &RecognizerExtensions {
        &self.extensions
    }

    pub fn parse_command(&self, raw: &str, cwd: &str) -> Result<ParseReport, ParseError> {
        if raw.len() > MAX_INPUT_BYTES {
            return Err(ParseError::InputTooLarge(raw.len()));
        }
        if !cwd.starts_with('/') {
            return Err(ParseError::RelativeCwd(cwd.to_string()));
        }
        let cwd = paths::lexical_normalize(cwd);
        let mut report = ParseReport { actions: Vec::new(), diagnostics: Vec::new() };
        recognize::parse_into(self, raw, &cwd, 0, false, &mut report);
        if report.actions.is_empty() {
            report.actions.push(ActionIr::unknown(raw));
            report.diagnostics.push(Diagnostic { span: (0, raw.len()), message: "empty command".into() });
        }
        Ok(report)
    }
}

/// Parses with the default configuration.
pub fn parse_command(raw: &str, cwd: &str) -> Result<ParseReport, ParseError> {
    CommandParser::default().parse_command(raw, cwd)
}
