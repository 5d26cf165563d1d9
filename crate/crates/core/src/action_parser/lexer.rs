//! Connector splitting and word tokenization with quote removal.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Connector {
    Seq,
    And,
    Or,
    Pipe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Segment {
    pub start: usize,
    pub end: usize,
    /// Connector that follows this segment, if any.
    pub connector: Option<Connector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct UnbalancedQuote {
    pub at: usize,
}

/// Splits `raw` at top-level connectors. Connectors inside quotes or after
/// a backslash never split.
pub(crate) fn split_top_level(raw: &str) -> Result<Vec<Segment>, UnbalancedQuote> {
    let bytes = raw.as_bytes();
    let mut segments = Vec::new();
    let mut start = 0;
    let mut i = 0;
    let mut in_single = false;
    let mut in_double = false;
    let mut quote_start = 0;

    let push = |segments: &mut Vec<Segment>, start: usize, end: usize, c: Option<Connector>| {
        segments.push(Segment { start, end, connector: c });
    };

    while i < bytes.len() {
        let c = bytes[i];
        if in_single {
            if c == b'\'' {
                in_single = false;
            }
            i += 1;
            continue;
        }
        if c == b'\\' {
            i += 2;
            continue;
        }
        if in_double {
            if c == b'"' {
                in_double = false;
            }
            i += 1;
            continue;
        }
        let next = bytes.get(i + 1).copied();
        let prev = if i > 0 { Some(bytes[i - 1]) } else { None };
        match c {
            b'\'' => {
                in_single = true;
                quote_start = i;
            }
            b'"' => {
                in_double = true;
                quote_start = i;
            }
            b';' | b'\n' => {
                push(&mut segments, start, i, Some(Connector::Seq));
                start = i + 1;
            }
            b'&' => {
                if next == Some(b'&') {
                    push(&mut segments, start, i, Some(Connector::And));
                    i += 2;
                    start = i;
                    continue;
                }
                // `>&`, `<&` and `&>` belong to redirections.
                if matches!(prev, Some(b'>') | Some(b'<')) || next == Some(b'>') {
                    i += 1;
                    continue;
                }
                push(&mut segments, start, i, Some(Connector::Seq));
                start = i + 1;
            }
            b'|' => {
                if next == Some(b'|') {
                    push(&mut segments, start, i, Some(Connector::Or));
                    i += 2;
                    start = i;
                    continue;
                }
                if prev == Some(b'>') {
                    i += 1;
                    continue;
                }
                push(&mut segments, start, i, Some(Connector::Pipe));
                // `|&` pipes stderr too.
                if next == Some(b'&') {
                    i += 1;
                }
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    if in_single || in_double {
        return Err(UnbalancedQuote { at: quote_start });
    }
    push(&mut segments, start, raw.len().max(start), None);
    Ok(segments)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Word {
    pub text: String,
    /// Any part of the word was quoted or escaped.
    pub quoted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RedirOp {
    /// `>` or `>|`
    Truncate,
    /// `>>`
    Append,
    /// `<`
    Input,
    /// `>&N` / `<&N` style descriptor duplication.
    Dup,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Redirect {
    pub op: RedirOp,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct SimpleCommand {
    pub words: Vec<Word>,
    pub redirects: Vec<Redirect>,
    /// Reasons the command cannot be modelled without evaluation.
    pub opaque: Vec<&'static str>,
}

/// Tokenizes one simple command.
pub(crate) fn tokenize(text: &str) -> SimpleCommand {
    let mut cmd = SimpleCommand::default();
    if text.contains("$(") || text.contains('`') {
        cmd.opaque.push("command substitution is not evaluated");
    }

    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut cur = String::new();
    let mut cur_quoted = false;
    let mut in_word = false;
    let mut pending: Option<RedirOp> = None;

    let flush = |cmd: &mut SimpleCommand,
                 cur: &mut String,
                 cur_quoted: &mut bool,
                 in_word: &mut bool,
                 pending: &mut Option<RedirOp>| {
        if !*in_word {
            return;
        }
        let text = std::mem::take(cur);
        match pending.take() {
            Some(op) => cmd.redirects.push(Redirect { op, target: text }),
            None => cmd.words.push(Word { text, quoted: *cur_quoted }),
        }
        *cur_quoted = false;
        *in_word = false;
    };

    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' => {
                flush(&mut cmd, &mut cur, &mut cur_quoted, &mut in_word, &mut pending);
            }
            '\\' => {
                in_word = true;
                cur_quoted = true;
                if let Some(&n) = chars.get(i + 1) {
                    cur.push(n);
                    i += 1;
                }
            }
            '\'' => {
                in_word = true;
                cur_quoted = true;
                i += 1;
                while i < chars.len() && chars[i] != '\'' {
                    cur.push(chars[i]);
                    i += 1;
                }
            }
            '"' => {
                in_word = true;
                cur_quoted = true;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    if chars[i] == '\\' && matches!(chars.get(i + 1), Some('"' | '\\' | '$' | '`')) {
                        i += 1;
                    } else if chars[i] == '$' && starts_expansion(chars.get(i + 1)) {
                        cmd.opaque.push("variable expansion is not evaluated");
                    }
                    cur.push(chars[i]);
                    i += 1;
                }
            }
            '$' if starts_expansion(chars.get(i + 1)) => {
                cmd.opaque.push("variable expansion is not evaluated");
                in_word = true;
                cur.push(c);
            }
            '(' | ')' => {
                cmd.opaque.push("subshells and process substitution are not evaluated");
                in_word = true;
                cur.push(c);
            }
            '>' | '<' => {
                // A bare descriptor number right before the operator (`2>`).
                let fd_prefix = in_word && !cur_quoted && cur.chars().all(|d| d.is_ascii_digit());
                if fd_prefix || (in_word && cur == "&") {
                    cur.clear();
                    in_word = false;
                } else {
                    flush(&mut cmd, &mut cur, &mut cur_quoted, &mut in_word, &mut pending);
                }
                let next = chars.get(i + 1).copied();
                let op = if c == '<' {
                    match next {
                        Some('<') => {
                            cmd.opaque.push("heredocs are not evaluated");
                            i += 1;
                            if chars.get(i + 1) == Some(&'<') {
                                i += 1;
                            }
                            RedirOp::Dup
                        }
                        Some('(') => {
                            cmd.opaque.push("subshells and process substitution are not evaluated");
                            RedirOp::Input
                        }
                        Some('&') => {
                            i += 1;
                            RedirOp::Dup
                        }
                        _ => RedirOp::Input,
                    }
                } else {
                    match next {
                        Some('>') => {
                            i += 1;
                            RedirOp::Append
                        }
                        Some('|') => {
                            i += 1;
                            RedirOp::Truncate
                        }
                        Some('&') => {
                            i += 1;
                            RedirOp::Dup
                        }
                        Some('(') => {
                            cmd.opaque.push("subshells and process substitution are not evaluated");
                            RedirOp::Truncate
                        }
                        _ => RedirOp::Truncate,
                    }
                };
                pending = Some(op);
                // Skip whitespace between operator and target.
                while matches!(chars.get(i + 1), Some(' ' | '\t')) {
                    i += 1;
                }
            }
            '{' | '}' if !in_word && matches!(chars.get(i + 1), None | Some(' ' | '\t')) => {
                cmd.opaque.push("command groups are not evaluated");
                in_word = true;
                cur.push(c);
            }
            _ => {
                in_word = true;
                cur.push(c);
            }
        }
        i += 1;
    }
    flush(&mut cmd, &mut cur, &mut cur_quoted, &mut in_word, &mut pending);
    if let Some(op) = pending {
        // Operator with no target: keep it visible as an empty-target redirect.
        cmd.redirects.push(Redirect { op, target: String::new() });
    }
    cmd.opaque.sort_unstable();
    cmd.opaque.dedup();
    cmd
}

fn starts_expansion(next: Option<&char>) -> bool {
    matches!(next, Some(c) if c.is_ascii_alphanumeric() || matches!(c, '_' | '{' | '(' | '@' | '*' | '#' | '?' | '!' | '$'))
}
