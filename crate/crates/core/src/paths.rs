//! Lexical path handling shared by the parser, the classifier and the host
//! simulator. Nothing here touches a real filesystem.

use serde::{Deserialize, Serialize};

/// How durable a change at a given path is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PersistenceDomain {
    Ephemeral,
    Workspace,
    UserProfile,
    System,
}

/// Resolves `raw` against `cwd` (and `~` against `home`) and collapses `.`
/// and `..` segments. `..` above the root stays at the root.
pub fn resolve(raw: &str, cwd: &str, home: &str) -> String {
    let joined = if raw == "~" {
        home.to_string()
    } else if let Some(rest) = raw.strip_prefix("~/") {
        format!("{home}/{rest}")
    } else if raw.starts_with('/') {
        raw.to_string()
    } else {
        format!("{cwd}/{raw}")
    };
    lexical_normalize(&joined)
}

/// Collapses an absolute path lexically.
pub fn lexical_normalize(abs: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for seg in abs.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    if parts.is_empty() {
        "/".to_string()
    } else {
        let mut out = String::with_capacity(abs.len());
        for p in parts {
            out.push('/');
            out.push_str(p);
        }
        out
    }
}

/// True for an absolute path without `.`/`..` segments, empty segments or a
/// trailing slash.
pub fn is_normalized_absolute(path: &str) -> bool {
    path.starts_with('/') && lexical_normalize(path) == path
}

/// Prefix containment on whole segments: `/work/proj` is under `/work` but
/// `/workshop` is not.
pub fn is_under(path: &str, prefix: &str) -> bool {
    if prefix == "/" {
        return path.starts_with('/');
    }
    path == prefix
        || (path.starts_with(prefix) && path.as_bytes().get(prefix.len()) == Some(&b'/'))
}

/// Final path segment.
pub fn file_name(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Shell-style glob over a single file name: `*` matches any run, `?` one char.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    fn go(p: &[char], n: &[char]) -> bool {
        match p.split_first() {
            None => n.is_empty(),
            Some(('*', rest)) => (0..=n.len()).any(|i| go(rest, &n[i..])),
            Some(('?', rest)) => !n.is_empty() && go(rest, &n[1..]),
            Some((c, rest)) => n.first() == Some(c) && go(rest, &n[1..]),
        }
    }
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    go(&p, &n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainPrefix {
    pub prefix: String,
    pub domain: PersistenceDomain,
}

/// Path root to persistence domain mapping. The longest matching prefix
/// wins; dotfiles and dot-directories in `home` (and everything under
/// them) count as user profile state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainTable {
    pub home: String,
    pub prefixes: Vec<DomainPrefix>,
}

impl Default for DomainTable {
    fn default() -> Self {
        let entry = |prefix: &str, domain| DomainPrefix { prefix: prefix.to_string(), domain };
        DomainTable {
            home: DEFAULT_HOME.to_string(),
            prefixes: vec![
                entry("/work", PersistenceDomain::Workspace),
                entry("/etc", PersistenceDomain::System),
                entry("/usr", PersistenceDomain::System),
                entry("/lib", PersistenceDomain::System),
                entry("/var", PersistenceDomain::System),
            ],
        }
    }
}

pub const DEFAULT_HOME: &str = "/home/user";
pub const DEFAULT_WORKSPACE: &str = "/work";

impl DomainTable {
    pub fn domain_of(&self, path: &str) -> PersistenceDomain {
        if self.is_profile_path(path) {
            return PersistenceDomain::UserProfile;
        }
        self.prefixes
            .iter()
            .filter(|e| is_under(path, &e.prefix))
            .max_by_key(|e| e.prefix.len())
            .map(|e| e.domain)
            .unwrap_or(PersistenceDomain::Ephemeral)
    }

    /// Highest domain of `path` or anything beneath it, for recursive
    /// operations.
    pub fn max_domain_under(&self, path: &str) -> PersistenceDomain {
        let mut best = self.domain_of(path);
        for e in &self.prefixes {
            if is_under(&e.prefix, path) {
                best = best.max(e.domain);
            }
        }
        if is_under(&self.home, path) {
            best = best.max(PersistenceDomain::UserProfile);
        }
        best
    }

    fn is_profile_path(&self, path: &str) -> bool {
        match path.strip_prefix(self.home.as_str()).and_then(|r| r.strip_prefix('/')) {
            Some(rest) => rest.starts_with('.'),
            None => false,
        }
    }
}
