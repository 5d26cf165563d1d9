//! The recognizer table: maps tokenized simple commands to actions.

use super::lexer::{self, Connector, RedirOp, Redirect, SimpleCommand};
use super::{
    classify_interface, ActionIr, ActionKind, CommandParser, ConfigEdit, Diagnostic, Download, Exec,
    FileOp, FirewallChange, FirewallDirection, InterfaceClass, NetBind, PackageInstall, ParseReport, PermissionChange,
    ServiceControl, ServiceOp,
};
use crate::paths::{self, PersistenceDomain};

const MAX_NESTING: usize = 4;

const SHELLS: &[&str] = &["sh", "bash", "zsh", "dash", "ksh", "fish"];
const SCRIPT_INTERPRETERS: &[&str] = &["python", "python3", "perl", "ruby", "node"];

/// Programs recognized as plain execution with no modelled side effect
/// beyond any bind address found in their arguments.
const PLAIN_EXEC: &[&str] = &[
    "pwd", "echo", "printf", "true", "false", "whoami", "id", "uname", "date", "hostname", "git",
    "make", "cmake", "deno", "bun", "pytest", "rustc", "gcc", "g++", "clang", "javac", "java",
    "mvn", "gradle", "journalctl", "ps", "top", "htop", "df", "free", "uptime", "which", "type",
    "command", "test", "[", "sleep", "export", "source", ".", "set", "unset", "alias", "uvicorn",
    "gunicorn", "flask", "jupyter", "nginx", "caddy", "http-server", "serve", "hugo", "kubectl",
    "helm", "lsof", "netstat", "ss", "ip", "ifconfig", "ping", "dig", "nslookup", "printenv",
    "history", "clear", "man", "vim", "vi", "nano", "emacs", "setenforce", "aa-teardown",
    "aa-disable", "aa-complain", "sysctl", "virtualenv", "tar", "unzip", "zip", "gzip", "gunzip",
    "supervisorctl", "pm2", "tmux", "screen", "exit", "wait", "cd", "env", "ssh", "docker",
    "podman", "npm", "yarn", "pnpm", "cargo", "go", "pip", "pip3", "gem", "brew", "snap", "apt",
    "apt-get", "aptitude", "dnf", "yum", "zypper", "apk", "pacman", "systemctl", "service",
    "ufw", "iptables", "ip6tables", "firewall-cmd", "crontab", "ngrok", "lt",
];

/// Pure readers: every positional argument is a file.
const FILE_READERS: &[&str] = &[
    "cat", "head", "tail", "less", "more", "wc", "stat", "file", "diff", "sort", "uniq", "strings",
    "xxd", "md5sum", "sha256sum", "sha1sum", "base64", "od", "hexdump",
];

struct Ctx<'a> {
    parser: &'a CommandParser,
    cwd: String,
    depth: usize,
}

impl Ctx<'_> {
    fn resolve(&self, p: &str) -> String {
        paths::resolve(p, &self.cwd, self.parser.home())
    }

    fn home(&self) -> &str {
        self.parser.home()
    }
}

enum Outcome {
    Actions(Vec<ActionIr>),
    /// An interpreter that executes whatever arrives on stdin.
    InterpreterStdin { sudo: bool, program: String },
}

pub(super) fn parse_into(
    parser: &CommandParser,
    raw: &str,
    cwd: &str,
    depth: usize,
    sudo: bool,
    report: &mut ParseReport,
) {
    let segments = match lexer::split_top_level(raw) {
        Ok(s) => s,
        Err(err) => {
            report.actions.push(ActionIr::unknown(raw));
            report.diagnostics.push(Diagnostic {
                span: (err.at, raw.len()),
                message: "UnbalancedQuote: quote opened here is never closed".into(),
            });
            return;
        }
    };
    let mut ctx = Ctx { parser, cwd: cwd.to_string(), depth };

    let mut pipeline: Vec<(Outcome, (usize, usize))> = Vec::new();
    let mut prev_connector = None;
    for seg in segments {
        let text = &raw[seg.start..seg.end];
        if !text.trim().is_empty() {
            let span = trimmed_span(raw, seg.start, seg.end);
            let outcome = stage(&mut ctx, &raw[span.0..span.1], span, sudo, report);
            pipeline.push((outcome, span));
        } else if binds_operands(seg.connector) || binds_operands(prev_connector) {
            // `| x`, `x &&` and friends are shell syntax errors.
            let mut unknown = ActionIr::unknown(raw);
            unknown.sudo = sudo;
            pipeline.push((Outcome::Actions(vec![unknown]), (seg.start, seg.end)));
            report.diagnostics.push(Diagnostic {
                span: (seg.start, seg.end),
                message: "operator is missing a command on one side".into(),
            });
        }
        prev_connector = seg.connector;
        if seg.connector != Some(Connector::Pipe) {
            flush_pipeline(std::mem::take(&mut pipeline), report);
        }
    }
    flush_pipeline(pipeline, report);
}

fn binds_operands(c: Option<Connector>) -> bool {
    matches!(c, Some(Connector::Pipe | Connector::And | Connector::Or))
}

fn trimmed_span(raw: &str, start: usize, end: usize) -> (usize, usize) {
    let text = &raw[start..end];
    let lead = text.len() - text.trim_start().len();
    let trail = text.len() - text.trim_end().len();
    (start + lead, end - trail)
}

fn flush_pipeline(stages: Vec<(Outcome, (usize, usize))>, report: &mut ParseReport) {
    let mut prev: Vec<ActionIr> = Vec::new();
    let mut have_prev = false;
    for (outcome, span) in stages {
        match outcome {
            Outcome::Actions(actions) => {
                report.actions.append(&mut prev);
                prev = actions;
                have_prev = true;
            }
            Outcome::InterpreterStdin { sudo, program } => {
                let downloads = prev.iter().any(|a| matches!(a.kind, ActionKind::Download(_)));
                if have_prev && downloads {
                    for action in prev.iter_mut() {
                        if let ActionKind::Download(d) = &mut action.kind {
                            d.executed_inline = true;
                            action.sudo |= sudo;
                        }
                    }
                } else {
                    for action in prev.iter_mut() {
                        if let ActionKind::Exec(e) = &mut action.kind {
                            e.piped_to_shell = true;
                        }
                    }
                    report.actions.append(&mut prev);
                    let mut unknown = ActionIr::unknown(program.clone());
                    unknown.sudo = sudo;
                    prev = vec![unknown];
                    let message = if have_prev {
                        format!("`{program}` executes commands read from a pipe")
                    } else {
                        format!("interactive `{program}` session cannot be modelled")
                    };
                    report.diagnostics.push(Diagnostic { span, message });
                }
                have_prev = true;
            }
        }
    }
    report.actions.append(&mut prev);
}

fn stage(ctx: &mut Ctx<'_>, text: &str, span: (usize, usize), sudo: bool, report: &mut ParseReport) -> Outcome {
    let cmd = lexer::tokenize(text);
    if !cmd.opaque.is_empty() {
        for reason in &cmd.opaque {
            report.diagnostics.push(Diagnostic { span, message: (*reason).to_string() });
        }
        let mut unknown = ActionIr::unknown(text);
        unknown.sudo = sudo;
        return Outcome::Actions(vec![unknown]);
    }
    simple(ctx, &cmd, text, span, sudo, report)
}

fn is_assignment(word: &str) -> bool {
    match word.split_once('=') {
        Some((name, _)) => {
            !name.is_empty()
                && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        }
        None => false,
    }
}

fn basename(program: &str) -> &str {
    paths::file_name(program)
}

fn simple(
    ctx: &mut Ctx<'_>,
    cmd: &SimpleCommand,
    text: &str,
    span: (usize, usize),
    mut sudo: bool,
    report: &mut ParseReport,
) -> Outcome {
    let words: Vec<String> = cmd.words.iter().map(|w| w.text.clone()).collect();
    let mut i = 0;
    let mut assignments = Vec::new();
    // Strip assignments, wrappers and privilege prefixes.
    while i < words.len() {
        let w = words[i].as_str();
        if is_assignment(w) {
            assignments.push(w.to_string());
            i += 1;
            continue;
        }
        match basename(w) {
            "sudo" | "doas" => {
                sudo = true;
                i += 1;
                while i < words.len() && words[i].starts_with('-') {
                    let flag = words[i].as_str();
                    i += 1;
                    if matches!(flag, "-u" | "-g" | "-C" | "-h" | "-p" | "-U" | "-r" | "-t" | "-D") {
                        i += 1;
                    } else if matches!(flag, "-i" | "-s" | "--login" | "--shell") && i >= words.len() {
                        report.diagnostics.push(Diagnostic { span, message: "root shell cannot be modelled".into() });
                        let mut u = ActionIr::unknown(text);
                        u.sudo = true;
                        return Outcome::Actions(vec![u]);
                    }
                }
            }
            "env" if i + 1 < words.len() => {
                i += 1;
                while i < words.len() && (words[i].starts_with('-') || is_assignment(&words[i])) {
                    if matches!(words[i].as_str(), "-u" | "-C" | "-S") {
                        i += 1;
                    }
                    i += 1;
                }
            }
            "nohup" | "time" | "exec" | "stdbuf" if i + 1 < words.len() => i += 1,
            "nice" if i + 1 < words.len() => {
                i += 1;
                if words.get(i).map(String::as_str) == Some("-n") {
                    i += 2;
                } else if words.get(i).is_some_and(|w| w.starts_with('-')) {
                    i += 1;
                }
            }
            "timeout" if i + 1 < words.len() => {
                i += 1;
                while i < words.len() && words[i].starts_with('-') {
                    if matches!(words[i].as_str(), "-s" | "-k" | "--signal" | "--kill-after") {
                        i += 1;
                    }
                    i += 1;
                }
                i += 1; // duration
            }
            _ => break,
        }
    }

    let rest = &words[i.min(words.len())..];
    let mut actions = Vec::new();
    if rest.is_empty() {
        if !assignments.is_empty() {
            actions.push(exec_action("env", &assignments));
        }
    } else if rest[0] == "eval" || rest[0] == "xargs" || rest[0] == "su" {
        report.diagnostics.push(Diagnostic { span, message: format!("`{}` runs commands indirectly", rest[0]) });
        actions.push(ActionIr::unknown(text));
    } else if let Some(found) = ctx.parser.extensions().apply(rest, &ctx.cwd, ctx.home()) {
        match found {
            Ok(kind) => actions.push(ActionIr::new(kind)),
            Err(message) => {
                report.diagnostics.push(Diagnostic { span, message });
                actions.push(ActionIr::unknown(text));
            }
        }
    } else {
        match recognize(ctx, rest, text, span, sudo, report) {
            Outcome::Actions(a) => actions = a,
            Outcome::InterpreterStdin { program, .. } => {
                return Outcome::InterpreterStdin { sudo, program };
            }
        }
    }

    for redirect in &cmd.redirects {
        if let Some(action) = redirect_action(ctx, redirect) {
            actions.push(action);
        }
    }
    if actions.is_empty() {
        report.diagnostics.push(Diagnostic { span, message: "no command found".into() });
        actions.push(ActionIr::unknown(text));
    }
    for a in actions.iter_mut() {
        a.sudo |= sudo;
    }
    Outcome::Actions(actions)
}

fn redirect_action(ctx: &Ctx<'_>, redirect: &Redirect) -> Option<ActionIr> {
    if redirect.target.is_empty() || redirect.op == RedirOp::Dup {
        return None;
    }
    let path = ctx.resolve(&redirect.target);
    if paths::is_under(&path, "/dev") {
        return None;
    }
    Some(match redirect.op {
        RedirOp::Input => ActionIr::new(ActionKind::FileRead(FileOp { path, recursive: false, force: false })),
        _ => write_action(ctx, path, false, false),
    })
}

/// Writes into system or shell-profile locations become `ConfigEdit`;
/// everything else is a plain `FileWrite`.
fn write_action(ctx: &Ctx<'_>, path: String, recursive: bool, force: bool) -> ActionIr {
    match config_domain(&path, ctx.home()) {
        Some(domain) => ActionIr::new(ActionKind::ConfigEdit(ConfigEdit {
            path,
            persistence_domain: domain,
            force_overwrite: force,
        })),
        None => ActionIr::new(ActionKind::FileWrite(FileOp { path, recursive, force })),
    }
}

const SYSTEM_ROOTS: &[&str] = &["/etc", "/usr", "/lib", "/lib64", "/bin", "/sbin", "/boot", "/run/systemd"];
const PROFILE_FILES: &[&str] = &[
    ".bashrc", ".profile", ".zshrc", ".bash_profile", ".bash_login", ".zprofile", ".zshenv",
    ".bash_aliases",
];

pub(crate) fn config_domain(path: &str, home: &str) -> Option<PersistenceDomain> {
    if SYSTEM_ROOTS.iter().any(|r| paths::is_under(path, r)) {
        return Some(PersistenceDomain::System);
    }
    if PROFILE_FILES.iter().any(|f| path == format!("{home}/{f}"))
        || paths::is_under(path, &format!("{home}/.config/systemd"))
        || paths::is_under(path, &format!("{home}/.config/autostart"))
    {
        return Some(PersistenceDomain::UserProfile);
    }
    None
}

fn exec_action(program: &str, argv: &[String]) -> ActionIr {
    ActionIr::new(ActionKind::Exec(Exec {
        program: program.to_string(),
        argv: argv.to_vec(),
        piped_to_shell: false,
        permission: None,
    }))
}

/// Flags and positionals split by a per-tool list of value-taking flags.
struct Args {
    flags: Vec<(String, Option<String>)>,
    positional: Vec<String>,
}

impl Args {
    fn parse(args: &[String], value_flags: &[&str]) -> Args {
        let mut flags = Vec::new();
        let mut positional = Vec::new();
        let mut i = 0;
        let mut ended = false;
        while i < args.len() {
            let a = &args[i];
            if ended || !a.starts_with('-') || a == "-" {
                positional.push(a.clone());
            } else if a == "--" {
                ended = true;
            } else if let Some((name, value)) = a.split_once('=').filter(|_| a.starts_with("--")) {
                flags.push((name.to_string(), Some(value.to_string())));
            } else if value_flags.contains(&a.as_str()) {
                flags.push((a.clone(), args.get(i + 1).cloned()));
                i += 1;
            } else {
                flags.push((a.clone(), None));
            }
            i += 1;
        }
        Args { flags, positional }
    }

    /// Long flags match exactly; single-letter short flags also match inside
    /// clusters like `-rf`.
    fn has(&self, names: &[&str]) -> bool {
        self.flags.iter().any(|(f, _)| {
            names.iter().any(|n| {
                f == n
                    || (n.len() == 2
                        && n.starts_with('-')
                        && !f.starts_with("--")
                        && f.len() > 2
                        && f[1..].contains(&n[1..]))
            })
        })
    }

    fn value(&self, names: &[&str]) -> Option<&str> {
        self.flags
            .iter()
            .find(|(f, v)| v.is_some() && names.contains(&f.as_str()))
            .and_then(|(_, v)| v.as_deref())
    }

    fn flag_strings(&self) -> Vec<String> {
        self.flags
            .iter()
            .map(|(f, v)| match v {
                Some(v) if f.starts_with("--") => format!("{f}={v}"),
                Some(v) => format!("{f} {v}"),
                None => f.clone(),
            })
            .collect()
    }
}

fn recognize(
    ctx: &mut Ctx<'_>,
    words: &[String],
    text: &str,
    span: (usize, usize),
    sudo: bool,
    report: &mut ParseReport,
) -> Outcome {
    let program_path = words[0].as_str();
    let program = basename(program_path);
    let args = &words[1..];
    let exec = || exec_action(program, args);

    let actions: Vec<ActionIr> = match program {
        "rm" | "rmdir" | "unlink" | "shred" => {
            let a = Args::parse(args, &[]);
            let recursive = program == "rm" && a.has(&["-r", "-R", "--recursive"]);
            let force = a.has(&["-f", "--force"]) || program == "shred";
            file_ops(ctx, &a.positional, |path| ActionKind::FileDelete(FileOp { path, recursive, force }))
        }
        "chmod" | "chown" | "chgrp" => permission_change(ctx, program, args),
        "mkdir" | "touch" => {
            let a = Args::parse(args, &["-m", "--mode", "-d", "--date", "-r", "--reference", "-t"]);
            let recursive = program == "mkdir" && a.has(&["-p", "--parents"]);
            a.positional.iter().map(|p| write_action(ctx, ctx.resolve(p), recursive, false)).collect()
        }
        "tee" => {
            let a = Args::parse(args, &[]);
            let mut out: Vec<ActionIr> =
                a.positional.iter().map(|p| ctx.resolve(p)).filter(|p| !paths::is_under(p, "/dev")).map(|p| write_action(ctx, p, false, false)).collect();
            if out.is_empty() {
                out.push(exec());
            }
            out
        }
        "cp" | "mv" | "install" | "ln" | "rsync" => copy_like(ctx, program, args),
        "sed" => sed(ctx, args),
        "grep" | "egrep" | "fgrep" | "rg" | "awk" => pattern_reader(ctx, program, args),
        "ls" | "find" | "du" | "tree" => lister(ctx, program, args),
        p if FILE_READERS.contains(&p) => {
            let a = Args::parse(args, &["-n", "-c", "--lines", "--bytes", "-k", "-t", "-o"]);
            let reads = file_ops(ctx, &a.positional, |path| {
                ActionKind::FileRead(FileOp { path, recursive: false, force: false })
            });
            if reads.is_empty() {
                vec![exec()]
            } else {
                reads
            }
        }
        "cd" => {
            let target = args.iter().find(|a| !a.starts_with('-'));
            ctx.cwd = match target {
                Some(t) => ctx.resolve(t),
                None => ctx.home().to_string(),
            };
            vec![exec()]
        }
        "apt" | "apt-get" | "aptitude" | "dnf" | "yum" | "zypper" | "apk" | "pacman" | "brew" | "snap" => {
            system_package(program, args).unwrap_or_else(|| vec![exec()])
        }
        "add-apt-repository" | "apt-add-repository" => {
            let a = Args::parse(args, &["-k", "--keyserver"]);
            match a.positional.first() {
                Some(repo) => vec![ActionIr::new(ActionKind::PackageInstall(PackageInstall {
                    manager: "apt".into(),
                    packages: Vec::new(),
                    system_wide: true,
                    added_repository: Some(repo.clone()),
                    registry: repo.clone(),
                    options: a.flag_strings(),
                }))],
                None => vec![exec()],
            }
        }
        "pip" | "pip3" => pip(program_path, args).unwrap_or_else(|| vec![exec()]),
        "npm" | "pnpm" | "yarn" | "npx" => node_package(program, args).unwrap_or_else(|| with_binds(exec(), args)),
        "cargo" | "gem" | "go" => other_package(program, args).unwrap_or_else(|| vec![exec()]),
        "systemctl" => systemctl(args).unwrap_or_else(|| vec![exec()]),
        "service" => match args {
            [name, op, ..] => match service_op(op) {
                Some(op) => vec![service(name, op)],
                None => vec![exec()],
            },
            _ => vec![exec()],
        },
        "kill" | "pkill" | "killall" => kill(program, args),
        "ufw" => ufw(args).unwrap_or_else(|| vec![exec()]),
        "iptables" | "ip6tables" => iptables(args).unwrap_or_else(|| vec![exec()]),
        "firewall-cmd" => firewall_cmd(args).unwrap_or_else(|| vec![exec()]),
        "curl" => curl(ctx, args).unwrap_or_else(|| unknown_with(report, span, text, "curl without a URL")),
        "wget" => wget(ctx, args).unwrap_or_else(|| unknown_with(report, span, text, "wget without a URL")),
        "ngrok" | "cloudflared" | "lt" | "localtunnel" => {
            tunnel(program, args).unwrap_or_else(|| vec![exec()])
        }
        "crontab" => {
            let path = format!("/var/spool/cron/crontabs/{}", basename(ctx.home()));
            let a = Args::parse(args, &["-u"]);
            if a.has(&["-l"]) {
                vec![exec()]
            } else if a.has(&["-r"]) {
                vec![ActionIr::new(ActionKind::FileDelete(FileOp { path, recursive: false, force: false }))]
            } else {
                vec![ActionIr::new(ActionKind::ConfigEdit(ConfigEdit {
                    path,
                    persistence_domain: PersistenceDomain::System,
                    force_overwrite: false,
                }))]
            }
        }
        "docker" | "podman" => {
            let mut out = vec![exec()];
            out.extend(container_publish(args));
            out
        }
        "ssh" => ssh(args),
        p if SHELLS.contains(&p) || SCRIPT_INTERPRETERS.contains(&p) => {
            return interpreter(ctx, program_path, args, text, span, sudo, report);
        }
        p if PLAIN_EXEC.contains(&p) => with_binds(exec(), args),
        _ => {
            mark_downloaded_executed(ctx, program_path, report);
            report.diagnostics.push(Diagnostic {
                span,
                message: format!("`{program}` is not in the recognizer table"),
            });
            let mut out = vec![ActionIr::unknown(text)];
            out.extend(bind_flags(args));
            out
        }
    };
    Outcome::Actions(actions)
}

/// Running a file fetched earlier in the same command line counts as
/// executing the download inline.
fn mark_downloaded_executed(ctx: &Ctx<'_>, script: &str, report: &mut ParseReport) {
    if !script.contains('/') && !script.contains('.') {
        return;
    }
    let path = ctx.resolve(script);
    for action in report.actions.iter_mut() {
        if let ActionKind::Download(d) = &mut action.kind {
            if d.target_path.as_deref() == Some(path.as_str()) {
                d.executed_inline = true;
            }
        }
    }
}

fn unknown_with(report: &mut ParseReport, span: (usize, usize), text: &str, message: &str) -> Vec<ActionIr> {
    report.diagnostics.push(Diagnostic { span, message: message.to_string() });
    vec![ActionIr::unknown(text)]
}

fn with_binds(exec: ActionIr, args: &[String]) -> Vec<ActionIr> {
    let mut out = vec![exec];
    out.extend(bind_flags(args));
    out
}

fn file_ops(ctx: &Ctx<'_>, targets: &[String], make: impl Fn(String) -> ActionKind) -> Vec<ActionIr> {
    targets.iter().map(|t| ActionIr::new(make(ctx.resolve(t)))).collect()
}

fn permission_change(ctx: &Ctx<'_>, program: &str, args: &[String]) -> Vec<ActionIr> {
    let a = Args::parse(args, &[]);
    let recursive = a.has(&["-R", "--recursive"]);
    let has_reference = a.flags.iter().any(|(f, _)| f == "--reference");
    let (mode, targets) = if has_reference {
        (None, a.positional.as_slice())
    } else {
        match a.positional.split_first() {
            Some((m, t)) => (Some(m.clone()), t),
            None => (None, &[][..]),
        }
    };
    // chmod modes like `-w` or `o-rwx` parse as flags; recover them.
    let mode = mode.or_else(|| {
        a.flags.iter().find(|(f, _)| program == "chmod" && f.len() > 1 && f[1..].chars().all(|c| "rwxXst".contains(c))).map(|(f, _)| f.clone())
    });
    let wide = program == "chmod" && mode.as_deref().is_some_and(mode_is_wide);
    let targets: Vec<String> = targets.iter().map(|t| ctx.resolve(t)).collect();
    vec![ActionIr::new(ActionKind::Exec(Exec {
        program: program.to_string(),
        argv: args.to_vec(),
        piped_to_shell: false,
        permission: Some(PermissionChange { tool: program.to_string(), mode, wide, recursive, targets }),
    }))]
}

/// Grants write to "other": octal with the other-write bit, or a symbolic
/// clause adding `w` for `a`, `o` or everyone.
pub(crate) fn mode_is_wide(mode: &str) -> bool {
    if !mode.is_empty() && mode.chars().all(|c| c.is_digit(8)) {
        let last = mode.chars().last().and_then(|c| c.to_digit(8)).unwrap_or(0);
        return last & 2 != 0;
    }
    mode.split(',').any(|clause| {
        let Some(op_at) = clause.find(['+', '=']) else { return false };
        let who = &clause[..op_at];
        let perms = &clause[op_at + 1..];
        perms.contains('w') && (who.is_empty() || who.contains('a') || who.contains('o'))
    })
}

fn copy_like(ctx: &Ctx<'_>, program: &str, args: &[String]) -> Vec<ActionIr> {
    let a = Args::parse(
        args,
        &["-t", "--target-directory", "-S", "--suffix", "-m", "--mode", "-o", "--owner", "-g", "--group", "-e", "--exclude", "--include"],
    );
    let exec = || exec_action(program, args);
    if program == "rsync" && a.positional.iter().any(|p| is_remote_spec(p)) {
        return vec![exec()];
    }
    if program == "install" && a.has(&["-d", "--directory"]) {
        return a.positional.iter().map(|p| write_action(ctx, ctx.resolve(p), true, false)).collect();
    }
    let target_dir = a.value(&["-t", "--target-directory"]).map(str::to_string);
    let (sources, dest, dest_is_dir): (&[String], String, bool) = match target_dir {
        Some(dir) => (&a.positional, dir, true),
        None => match a.positional.split_last() {
            Some((dest, sources)) if !sources.is_empty() => {
                (sources, dest.clone(), dest.ends_with('/') || sources.len() > 1)
            }
            _ => return vec![exec()],
        },
    };
    let recursive = a.has(&["-r", "-R", "-a", "--recursive", "--archive"]);
    let force = a.has(&["-f", "--force"]);
    let mut out = Vec::new();
    for src in sources {
        let src_path = ctx.resolve(src);
        let dest_path = if dest_is_dir {
            ctx.resolve(&format!("{}/{}", dest.trim_end_matches('/'), paths::file_name(&src_path)))
        } else {
            ctx.resolve(&dest)
        };
        match program {
            "cp" | "install" | "rsync" => out.push(ActionIr::new(ActionKind::FileRead(FileOp {
                path: src_path,
                recursive,
                force: false,
            }))),
            "mv" => out.push(ActionIr::new(ActionKind::FileDelete(FileOp {
                path: src_path,
                recursive: false,
                force,
            }))),
            _ => {}
        }
        out.push(write_action(ctx, dest_path, recursive, force));
    }
    out
}

fn is_remote_spec(arg: &str) -> bool {
    match arg.split_once(':') {
        Some((host, _)) => !host.is_empty() && !host.contains('/'),
        None => false,
    }
}

fn sed(ctx: &Ctx<'_>, args: &[String]) -> Vec<ActionIr> {
    let a = Args::parse(args, &["-e", "--expression", "-f", "--file", "-l"]);
    let in_place = a.flags.iter().any(|(f, _)| f.starts_with("-i") || f == "--in-place" || (f.len() > 2 && !f.starts_with("--") && f.contains('i')));
    let has_script = a.value(&["-e", "--expression", "-f", "--file"]).is_some();
    let files = if has_script { &a.positional[..] } else { a.positional.get(1..).unwrap_or(&[]) };
    if files.is_empty() {
        return vec![exec_action("sed", args)];
    }
    files
        .iter()
        .map(|f| {
            let path = ctx.resolve(f);
            if in_place {
                write_action(ctx, path, false, false)
            } else {
                ActionIr::new(ActionKind::FileRead(FileOp { path, recursive: false, force: false }))
            }
        })
        .collect()
}

fn pattern_reader(ctx: &Ctx<'_>, program: &str, args: &[String]) -> Vec<ActionIr> {
    let a = Args::parse(args, &["-e", "-f", "-m", "-A", "-B", "-C", "--include", "--exclude", "-F", "-v", "-g", "-t"]);
    let has_pattern_flag = program != "awk" && a.value(&["-e", "-f"]).is_some();
    let recursive = program == "rg" || a.has(&["-r", "-R", "--recursive"]);
    let files = if has_pattern_flag { &a.positional[..] } else { a.positional.get(1..).unwrap_or(&[]) };
    let mut out: Vec<ActionIr> = files
        .iter()
        .map(|f| ActionIr::new(ActionKind::FileRead(FileOp { path: ctx.resolve(f), recursive, force: false })))
        .collect();
    if out.is_empty() {
        if recursive {
            out.push(ActionIr::new(ActionKind::FileRead(FileOp { path: ctx.cwd.clone(), recursive, force: false })));
        } else {
            out.push(exec_action(program, args));
        }
    }
    out
}

fn lister(ctx: &Ctx<'_>, program: &str, args: &[String]) -> Vec<ActionIr> {
    let mut out = vec![exec_action(program, args)];
    let (roots, recursive): (Vec<String>, bool) = if program == "find" {
        let roots: Vec<String> = args
            .iter()
            .take_while(|a| !a.starts_with('-') && !matches!(a.as_str(), "(" | "!" | ")"))
            .cloned()
            .collect();
        let roots = if roots.is_empty() { Vec::new() } else { roots };
        (roots, true)
    } else {
        let a = Args::parse(args, &["-d", "--max-depth", "-L", "-I", "--block-size", "-w", "--width"]);
        let recursive = program != "ls" || a.has(&["-R", "--recursive"]);
        (a.positional, recursive)
    };
    if roots.is_empty() && recursive {
        out.push(ActionIr::new(ActionKind::FileRead(FileOp { path: ctx.cwd.clone(), recursive, force: false })));
    }
    for root in roots {
        out.push(ActionIr::new(ActionKind::FileRead(FileOp { path: ctx.resolve(&root), recursive, force: false })));
    }
    out
}

fn package(manager: &str, packages: Vec<String>, system_wide: bool, registry: String, options: Vec<String>) -> ActionIr {
    ActionIr::new(ActionKind::PackageInstall(PackageInstall {
        manager: manager.to_string(),
        packages,
        system_wide,
        added_repository: None,
        registry,
        options,
    }))
}

fn system_package(program: &str, args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(args, &["-t", "--target-release", "-o", "--option", "--enablerepo", "--repo", "--setopt", "--from-repo"]);
    let manager = match program {
        "apt-get" | "aptitude" => "apt",
        other => other,
    };
    let packages = if program == "pacman" {
        let sync = a.flags.iter().any(|(f, _)| f.starts_with("-S") && !f.contains('s') && !f.contains('i') && !f.contains('c'));
        if !sync {
            return None;
        }
        a.positional.clone()
    } else {
        let (sub, rest) = a.positional.split_first()?;
        match (program, sub.as_str()) {
            ("apk", "add") | ("zypper", "in") | (_, "install") | ("dnf" | "yum", "localinstall") => rest.to_vec(),
            ("snap" | "brew", _) => return None,
            (_, "upgrade" | "dist-upgrade" | "full-upgrade" | "update") if program != "apt" && program != "apt-get" && program != "aptitude" => {
                if sub == "update" && matches!(program, "apk") {
                    return None;
                }
                rest.to_vec()
            }
            (_, "upgrade" | "dist-upgrade" | "full-upgrade") => rest.to_vec(),
            _ => return None,
        }
    };
    let registry = match program {
        "brew" => "homebrew".to_string(),
        "snap" => "snapcraft".to_string(),
        _ => a
            .value(&["--enablerepo", "--repo", "--from-repo"])
            .map(str::to_string)
            .unwrap_or_else(|| manager.to_string()),
    };
    Some(vec![package(manager, packages, true, registry, a.flag_strings())])
}

fn url_host(url: &str) -> String {
    let without_scheme = url.split_once("://").map(|(_, r)| r).unwrap_or(url);
    let host_port = without_scheme.split(['/', '?', '#']).next().unwrap_or("");
    let host = host_port.rsplit_once('@').map(|(_, h)| h).unwrap_or(host_port);
    host.split(':').next().unwrap_or(host).to_string()
}

fn pip(program_path: &str, args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(
        args,
        &[
            "-r", "--requirement", "-c", "--constraint", "-i", "--index-url", "--extra-index-url", "-t",
            "--target", "--prefix", "--root", "--trusted-host", "-f", "--find-links", "--src", "-e",
            "--editable", "--python-version", "--platform", "--cache-dir", "--log",
        ],
    );
    let (sub, rest) = a.positional.split_first()?;
    if sub != "install" {
        return None;
    }
    let mut packages: Vec<String> = rest.to_vec();
    for (f, v) in &a.flags {
        if let Some(v) = v {
            if matches!(f.as_str(), "-r" | "--requirement") {
                packages.push(format!("-r {v}"));
            } else if matches!(f.as_str(), "-e" | "--editable") {
                packages.push(format!("-e {v}"));
            }
        }
    }
    let registry = a
        .value(&["--extra-index-url"])
        .or_else(|| a.value(&["-i", "--index-url"]))
        .map(url_host)
        .unwrap_or_else(|| "pypi".to_string());
    let venv_program = !program_path.starts_with('/') && program_path.contains('/')
        || program_path.split('/').any(|s| s == "venv" || s == ".venv" || s == "env");
    let local = venv_program || a.value(&["-t", "--target", "--prefix"]).is_some() || a.has(&["--user"]);
    let global = a.has(&["-g", "--global"]);
    Some(vec![package("pip", packages, global || !local, registry, a.flag_strings())])
}

fn node_package(program: &str, args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(args, &["--registry", "--prefix", "-w", "--workspace"]);
    let registry = a.value(&["--registry"]).map(url_host).unwrap_or_else(|| "npm".to_string());
    let global = a.has(&["-g", "--global"]) || a.positional.first().is_some_and(|s| s == "global");
    let positional: Vec<&String> = a.positional.iter().filter(|s| *s != "global").collect();
    let packages: Vec<String> = match (program, positional.split_first()) {
        ("npx", Some((pkg, _))) => vec![(*pkg).clone()],
        ("yarn", None) => Vec::new(),
        (_, Some((sub, rest))) if matches!(sub.as_str(), "install" | "i" | "add" | "ci") => {
            rest.iter().map(|s| (*s).clone()).collect()
        }
        _ => return None,
    };
    let manager = if program == "npx" { "npm" } else { program };
    Some(vec![package(manager, packages, global, registry, a.flag_strings())])
}

fn other_package(program: &str, args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(args, &["--root", "--registry", "--index", "-i", "--install-dir", "--version", "--git", "--path", "-v", "--source"]);
    let (sub, rest) = a.positional.split_first()?;
    if sub != "install" {
        return None;
    }
    let (registry, system_wide) = match program {
        "cargo" => (
            a.value(&["--registry", "--index"]).map(url_host).or_else(|| a.value(&["--git"]).map(url_host)).unwrap_or_else(|| "crates.io".into()),
            a.value(&["--root"]).is_none(),
        ),
        "gem" => (
            a.value(&["--source"]).map(url_host).unwrap_or_else(|| "rubygems".into()),
            a.value(&["-i", "--install-dir"]).is_none() && !a.has(&["--user-install"]),
        ),
        _ => ("proxy.golang.org".into(), true),
    };
    Some(vec![package(program, rest.to_vec(), system_wide, registry, a.flag_strings())])
}

fn service(name: &str, op: ServiceOp) -> ActionIr {
    let service = name.strip_suffix(".service").unwrap_or(name).to_string();
    ActionIr::new(ActionKind::ServiceControl(ServiceControl { service, op }))
}

fn service_op(op: &str) -> Option<ServiceOp> {
    Some(match op {
        "start" => ServiceOp::Start,
        "stop" => ServiceOp::Stop,
        "restart" | "try-restart" | "reload" | "reload-or-restart" | "force-reload" => ServiceOp::Restart,
        "kill" => ServiceOp::ForceRestart,
        "enable" => ServiceOp::Enable,
        "disable" | "mask" => ServiceOp::Disable,
        _ => return None,
    })
}

fn systemctl(args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(args, &["-s", "--signal", "-t", "--type", "-H", "--host", "-M", "--machine", "--state"]);
    let (op, units) = a.positional.split_first()?;
    let op = service_op(op)?;
    let now = a.has(&["--now"]);
    let forced = a.has(&["-f", "--force"]) && op == ServiceOp::Restart;
    let mut out = Vec::new();
    for unit in units {
        let op = if forced { ServiceOp::ForceRestart } else { op };
        out.push(service(unit, op));
        match op {
            ServiceOp::Enable if now => out.push(service(unit, ServiceOp::Start)),
            ServiceOp::Disable if now => out.push(service(unit, ServiceOp::Stop)),
            _ => {}
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

fn kill(program: &str, args: &[String]) -> Vec<ActionIr> {
    let a = Args::parse(args, &["-s", "--signal", "-u", "-n"]);
    let force = a.flags.iter().any(|(f, v)| {
        matches!(f.as_str(), "-9" | "-KILL" | "-SIGKILL")
            || (matches!(f.as_str(), "-s" | "--signal") && v.as_deref().is_some_and(|s| matches!(s, "9" | "KILL" | "SIGKILL")))
    });
    let op = if force { ServiceOp::ForceRestart } else { ServiceOp::Stop };
    if a.positional.is_empty() {
        return vec![exec_action(program, args)];
    }
    a.positional.iter().map(|t| service(t, op)).collect()
}

/// Port from forms like `8080`, `8080/tcp`, `host:8080`, `http://h:8080/x`.
pub(crate) fn parse_port(s: &str) -> Option<u16> {
    let s = s.split_once("://").map(|(_, r)| r).unwrap_or(s);
    let s = s.split('/').next().unwrap_or(s);
    if let Ok(p) = s.parse::<u16>() {
        return Some(p);
    }
    s.rsplit_once(':').and_then(|(_, p)| p.parse::<u16>().ok())
}

fn ufw(args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(args, &[]);
    let (sub, rest) = a.positional.split_first()?;
    let port_of = |rest: &[String]| -> Option<u16> {
        if let Some(i) = rest.iter().position(|w| w == "port") {
            return rest.get(i + 1).and_then(|p| parse_port(p));
        }
        rest.iter().find_map(|w| parse_port(w))
    };
    let change = |direction, target_port| {
        ActionIr::new(ActionKind::FirewallChange(FirewallChange { direction, target_port }))
    };
    Some(vec![match sub.as_str() {
        "allow" | "limit" => change(FirewallDirection::Open, port_of(rest)),
        "deny" | "reject" => change(FirewallDirection::Close, port_of(rest)),
        "delete" => change(FirewallDirection::Close, port_of(rest)),
        "disable" | "reset" => change(FirewallDirection::Open, None),
        "enable" => change(FirewallDirection::Close, None),
        "default" => match rest.first().map(String::as_str) {
            Some("allow") => change(FirewallDirection::Open, None),
            Some("deny" | "reject") => change(FirewallDirection::Close, None),
            _ => return None,
        },
        _ => return None,
    }])
}

fn iptables(args: &[String]) -> Option<Vec<ActionIr>> {
    let find = |names: &[&str]| args.iter().position(|a| names.contains(&a.as_str()));
    let value_after = |names: &[&str]| find(names).and_then(|i| args.get(i + 1)).map(String::as_str);
    let target = value_after(&["-j", "--jump"]);
    let port = value_after(&["--dport", "--destination-port"]).and_then(parse_port);
    let change = |direction, target_port| {
        Some(vec![ActionIr::new(ActionKind::FirewallChange(FirewallChange { direction, target_port }))])
    };
    if find(&["-F", "--flush"]).is_some() {
        return change(FirewallDirection::Open, None);
    }
    if let Some(i) = find(&["-P", "--policy"]) {
        return match args.get(i + 2).map(String::as_str) {
            Some("ACCEPT") => change(FirewallDirection::Open, None),
            Some("DROP" | "REJECT") => change(FirewallDirection::Close, None),
            _ => None,
        };
    }
    if find(&["-D", "--delete"]).is_some() {
        return change(FirewallDirection::Close, port);
    }
    if find(&["-A", "--append", "-I", "--insert"]).is_some() {
        return match target {
            Some("ACCEPT") => change(FirewallDirection::Open, port),
            Some("DROP" | "REJECT") => change(FirewallDirection::Close, port),
            _ => None,
        };
    }
    None
}

fn well_known_port(service: &str) -> Option<u16> {
    Some(match service {
        "http" => 80,
        "https" => 443,
        "ssh" => 22,
        "ftp" => 21,
        "mysql" => 3306,
        "postgresql" => 5432,
        "redis" => 6379,
        _ => return None,
    })
}

fn firewall_cmd(args: &[String]) -> Option<Vec<ActionIr>> {
    let mut out = Vec::new();
    for a in args {
        let Some((flag, value)) = a.split_once('=') else { continue };
        let (direction, port) = match flag {
            "--add-port" => (FirewallDirection::Open, parse_port(value)),
            "--add-service" => (FirewallDirection::Open, well_known_port(value)),
            "--remove-port" => (FirewallDirection::Close, parse_port(value)),
            "--remove-service" => (FirewallDirection::Close, well_known_port(value)),
            "--set-default-zone" if value == "trusted" => (FirewallDirection::Open, None),
            _ => continue,
        };
        out.push(ActionIr::new(ActionKind::FirewallChange(FirewallChange { direction, target_port: port })));
    }
    (!out.is_empty()).then_some(out)
}

fn download(ctx: &Ctx<'_>, url: &str, target: Option<String>) -> Vec<ActionIr> {
    vec![ActionIr::new(ActionKind::Download(Download {
        url: url.to_string(),
        executed_inline: false,
        target_path: target.map(|t| ctx.resolve(&t)),
    }))]
}

fn url_file_name(url: &str) -> String {
    let path = url.split_once("://").map(|(_, r)| r).unwrap_or(url);
    let path = path.split(['?', '#']).next().unwrap_or(path);
    match path.split_once('/') {
        Some((_, p)) if !p.is_empty() && !p.ends_with('/') => paths::file_name(p).to_string(),
        _ => "index.html".to_string(),
    }
}

fn curl(ctx: &Ctx<'_>, args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(
        args,
        &[
            "-o", "--output", "-H", "--header", "-d", "--data", "--data-raw", "--data-binary",
            "--data-urlencode", "-X", "--request", "-u", "--user", "-A", "--user-agent", "-e",
            "--referer", "-F", "--form", "-T", "--upload-file", "-x", "--proxy", "-m", "--max-time",
            "--connect-timeout", "-w", "--write-out", "--retry", "-b", "--cookie", "-c",
            "--cookie-jar", "-K", "--config", "-r", "--range", "--resolve", "--cacert", "--cert",
            "--key", "--url",
        ],
    );
    let url = a.value(&["--url"]).map(str::to_string).or_else(|| a.positional.first().cloned())?;
    let target = match a.value(&["-o", "--output"]) {
        Some("-") => None,
        Some(path) => Some(path.to_string()),
        None if a.has(&["-O", "--remote-name"]) => Some(url_file_name(&url)),
        None => None,
    };
    Some(download(ctx, &url, target))
}

fn wget(ctx: &Ctx<'_>, args: &[String]) -> Option<Vec<ActionIr>> {
    let mut output: Option<String> = None;
    let mut prefix: Option<String> = None;
    let mut url: Option<String> = None;
    let mut i = 0;
    while i < args.len() {
        let a = args[i].as_str();
        if let Some(v) = a.strip_prefix("--output-document=") {
            output = Some(v.to_string());
        } else if let Some(v) = a.strip_prefix("--directory-prefix=") {
            prefix = Some(v.to_string());
        } else if matches!(a, "--output-document" | "--directory-prefix" | "--header" | "--user-agent" | "--tries" | "--timeout" | "--output-file") {
            if a == "--output-document" {
                output = args.get(i + 1).cloned();
            } else if a == "--directory-prefix" {
                prefix = args.get(i + 1).cloned();
            }
            i += 1;
        } else if a.starts_with("--") {
        } else if let Some(cluster) = a.strip_prefix('-').filter(|c| !c.is_empty()) {
            for (pos, c) in cluster.char_indices() {
                if matches!(c, 'O' | 'P' | 'o' | 'U' | 't' | 'T' | 'e') {
                    let attached = &cluster[pos + 1..];
                    let value = if attached.is_empty() {
                        i += 1;
                        args.get(i).cloned()
                    } else {
                        Some(attached.to_string())
                    };
                    match c {
                        'O' => output = value,
                        'P' => prefix = value,
                        _ => {}
                    }
                    break;
                }
            }
        } else if url.is_none() {
            url = Some(a.to_string());
        }
        i += 1;
    }
    let url = url?;
    let target = match output.as_deref() {
        Some("-") => None,
        Some(path) => Some(path.to_string()),
        None => {
            let name = url_file_name(&url);
            Some(match prefix {
                Some(dir) => format!("{}/{name}", dir.trim_end_matches('/')),
                None => name,
            })
        }
    };
    Some(download(ctx, &url, target))
}

fn tunnel(program: &str, args: &[String]) -> Option<Vec<ActionIr>> {
    let a = Args::parse(args, &["--url", "--port", "-p", "--subdomain", "--region", "--hostname", "--config"]);
    let (address, port) = match program {
        "ngrok" => {
            let (_, rest) = a.positional.split_first()?;
            ("ngrok.io", rest.first().and_then(|p| parse_port(p)).unwrap_or(0))
        }
        "cloudflared" => {
            if a.positional.first().map(String::as_str) != Some("tunnel") {
                return None;
            }
            ("trycloudflare.com", a.value(&["--url"]).and_then(parse_port).unwrap_or(0))
        }
        _ => ("loca.lt", a.value(&["--port", "-p"]).and_then(parse_port).unwrap_or(0)),
    };
    let mut bind = NetBind::new(address, port);
    bind.tunnel = true;
    Some(vec![ActionIr::new(ActionKind::NetBind(bind))])
}

fn ssh(args: &[String]) -> Vec<ActionIr> {
    let a = Args::parse(args, &["-R", "-L", "-p", "-i", "-l", "-o", "-F", "-J", "-D", "-W", "-b", "-c", "-E", "-S"]);
    let mut out = vec![exec_action("ssh", args)];
    let host = a.positional.first().cloned().unwrap_or_default();
    let host = host.rsplit_once('@').map(|(_, h)| h.to_string()).unwrap_or(host);
    for (flag, value) in &a.flags {
        let Some(spec) = value else { continue };
        let fields: Vec<&str> = spec.split(':').collect();
        match flag.as_str() {
            "-R" => {
                let port = fields.iter().rev().nth(2).or(fields.first()).and_then(|p| p.parse().ok()).unwrap_or(0);
                let mut bind = NetBind::new(if host.is_empty() { "remote" } else { host.as_str() }, port);
                // Reachable from wherever the remote end listens.
                if bind.interface_class != InterfaceClass::Wildcard {
                    bind.interface_class = InterfaceClass::Public;
                }
                bind.tunnel = true;
                out.push(ActionIr::new(ActionKind::NetBind(bind)));
            }
            "-L" | "-D" => {
                let (addr, port) = match fields.as_slice() {
                    [addr, port, ..] if addr.parse::<std::net::IpAddr>().is_ok() || *addr == "localhost" || *addr == "*" => {
                        (if *addr == "*" { "0.0.0.0" } else { addr }, port.parse().unwrap_or(0))
                    }
                    [port, ..] => ("127.0.0.1", port.parse().unwrap_or(0)),
                    [] => continue,
                };
                out.push(ActionIr::new(ActionKind::NetBind(NetBind::new(addr, port))));
            }
            _ => {}
        }
    }
    out
}

fn container_publish(args: &[String]) -> Vec<ActionIr> {
    if !matches!(args.first().map(String::as_str), Some("run" | "create")) {
        return Vec::new();
    }
    let a = Args::parse(&args[1..], &["-p", "--publish", "-v", "--volume", "-e", "--env", "--name", "-w", "--network", "--net", "-u", "--user", "--entrypoint", "--mount", "-l", "--label"]);
    let mut out = Vec::new();
    for (flag, value) in &a.flags {
        if !matches!(flag.as_str(), "-p" | "--publish") {
            continue;
        }
        let Some(spec) = value else { continue };
        let spec = spec.split('/').next().unwrap_or(spec);
        let fields: Vec<&str> = spec.split(':').collect();
        let (addr, port) = match fields.as_slice() {
            [addr, host, _] => (*addr, host.parse().unwrap_or(0)),
            [host, _] => ("0.0.0.0", host.parse().unwrap_or(0)),
            [single] => ("0.0.0.0", single.parse().unwrap_or(0)),
            _ => continue,
        };
        out.push(ActionIr::new(ActionKind::NetBind(NetBind::new(addr, port))));
    }
    out
}

fn valid_bind_host(host: &str, strict: bool) -> bool {
    let h = host.trim_start_matches('[').trim_end_matches(']');
    if h.parse::<std::net::IpAddr>().is_ok() || h.eq_ignore_ascii_case("localhost") {
        return true;
    }
    !strict
        && h.contains('.')
        && h.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-')
        && h.chars().any(|c| c.is_ascii_alphabetic())
}

/// Splits `host`, `host:port`, `[v6]:port` and bare IPv6.
fn split_host_port(value: &str) -> (String, Option<u16>) {
    if let Some(rest) = value.strip_prefix('[') {
        if let Some((host, tail)) = rest.split_once(']') {
            return (host.to_string(), tail.strip_prefix(':').and_then(|p| p.parse().ok()));
        }
    }
    if value.parse::<std::net::IpAddr>().is_ok() {
        return (value.to_string(), None);
    }
    match value.rsplit_once(':') {
        Some((h, p)) if p.parse::<u16>().is_ok() => (h.to_string(), p.parse().ok()),
        _ => (value.to_string(), None),
    }
}

/// `--bind`, `--host`, `-b`, `--ip` and `host=` arguments carrying an address.
pub(crate) fn bind_flags(args: &[String]) -> Vec<ActionIr> {
    let mut out = Vec::new();
    let mut explicit_port: Option<u16> = None;
    let mut i = 0;
    let mut found: Vec<(String, Option<u16>)> = Vec::new();
    while i < args.len() {
        let a = args[i].as_str();
        let (flag, inline) = match a.split_once('=') {
            Some((f, v)) => (f, Some(v.to_string())),
            None => (a, None),
        };
        let is_bind = matches!(flag, "--bind" | "--host" | "-b" | "--ip" | "host" | "-H")
            || flag.ends_with(".ip");
        let is_port = matches!(flag, "--port" | "-p" | "port" | "-P");
        if is_bind || is_port {
            let value = match inline {
                Some(v) => Some(v),
                None if flag.starts_with('-') => {
                    let v = args.get(i + 1).cloned();
                    if v.is_some() {
                        i += 1;
                    }
                    v
                }
                None => None,
            };
            if let Some(v) = value {
                if is_bind {
                    let (host, port) = split_host_port(&v);
                    let strict = matches!(flag, "-b" | "-H");
                    if valid_bind_host(&host, strict) {
                        found.push((host, port));
                    }
                } else {
                    explicit_port = explicit_port.or(v.parse().ok());
                }
            }
        }
        i += 1;
    }
    let bare_port = args.iter().find_map(|a| a.parse::<u16>().ok());
    for (host, port) in found {
        let port = port.or(explicit_port).or(bare_port).unwrap_or(0);
        let host = host.trim_start_matches('[').trim_end_matches(']').to_string();
        let mut bind = NetBind::new(host, port);
        bind.interface_class = classify_interface(&bind.address);
        out.push(ActionIr::new(ActionKind::NetBind(bind)));
    }
    out
}

fn interpreter(
    ctx: &mut Ctx<'_>,
    program_path: &str,
    args: &[String],
    text: &str,
    span: (usize, usize),
    sudo: bool,
    report: &mut ParseReport,
) -> Outcome {
    let program = basename(program_path);
    let is_shell = SHELLS.contains(&program);
    if is_shell {
        if let Some(pos) = args.iter().position(|a| a == "-c" || (a.starts_with('-') && !a.starts_with("--") && a.ends_with('c'))) {
            let Some(script) = args.get(pos + 1) else {
                return Outcome::Actions(unknown_with(report, span, text, "`-c` without a script"));
            };
            if ctx.depth >= MAX_NESTING {
                return Outcome::Actions(unknown_with(report, span, text, "nested shells too deep"));
            }
            let mut inner = ParseReport { actions: Vec::new(), diagnostics: Vec::new() };
            parse_into(ctx.parser, script, &ctx.cwd, ctx.depth + 1, sudo, &mut inner);
            // Inner spans refer to the script; report them against this stage.
            report.diagnostics.extend(inner.diagnostics.into_iter().map(|d| Diagnostic { span, message: d.message }));
            if inner.actions.is_empty() {
                return Outcome::Actions(unknown_with(report, span, text, "empty `-c` script"));
            }
            return Outcome::Actions(inner.actions);
        }
    }
    let value_flags: &[&str] = if is_shell { &["-o", "-O", "--rcfile", "--init-file"] } else { &["-W", "-X", "-I", "-e", "-r", "--require", "-M"] };
    let a = Args::parse(args, value_flags);
    let reads_stdin = a.positional.is_empty() && !a.has(&["-c", "-m", "-e", "--version", "-V", "-h", "--help"]) || a.positional.first().is_some_and(|p| p == "-") || (is_shell && a.has(&["-s"]));
    if reads_stdin {
        return Outcome::InterpreterStdin { sudo, program: text.to_string() };
    }
    if let Some(script) = a.positional.first().filter(|_| !args.iter().any(|w| w == "-m" || w == "-c")) {
        mark_downloaded_executed(ctx, script, report);
    }
    // `python -m pip install ...`
    if let Some(i) = args.iter().position(|a| a == "-m") {
        if let Some(module) = args.get(i + 1) {
            if module == "pip" {
                if let Some(a) = pip(program_path, &args[i + 2..]) {
                    return Outcome::Actions(a);
                }
            }
        }
    }
    Outcome::Actions(with_binds(exec_action(program, args), args))
}
