//! Strict, indentation-based document parser for spec files.
//!
//! The accepted language is a small YAML subset, chosen so that every
//! accepted document has exactly one obvious reading:
//!
//! - two-space indentation, tabs rejected everywhere;
//! - block mappings (`key: value` / `key:` + indented block) with
//!   `[a-z_][a-z0-9_]*` keys, duplicate keys rejected;
//! - block sequences (`- item`), flow sequences (`[a, b]`);
//! - plain, double-quoted (`\\ \" \n \t \r` escapes) and single-quoted
//!   scalars, one line each;
//! - `#` comments outside quotes, an optional leading `---`.
//!
//! Anchors, aliases, tags, block scalars, flow mappings, and multiple
//! documents are rejected. All scalars are strings; typed interpretation
//! happens in the schema layer.

use super::SpecError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Scalar(String),
    Sequence(Vec<Node>),
    Mapping(Vec<MapEntry>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapEntry {
    pub key: String,
    pub key_line: usize,
    pub value: Node,
}

impl Node {
    pub fn as_scalar(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Scalar(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&[Node]> {
        match &self.kind {
            NodeKind::Sequence(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_mapping(&self) -> Option<&[MapEntry]> {
        match &self.kind {
            NodeKind::Mapping(entries) => Some(entries),
            _ => None,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> SpecError {
    SpecError::Syntax { line, message: message.into() }
}

#[derive(Debug, Clone)]
struct Line {
    indent: usize,
    content: String,
    number: usize,
}

fn is_key_char(c: char, first: bool) -> bool {
    if first {
        c.is_ascii_lowercase() || c == '_'
    } else {
        c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'
    }
}

/// Strip a trailing comment, honoring quote context. `#` opens a comment only
/// at line start or after whitespace.
fn strip_comment(raw: &str) -> &str {
    let mut in_dquote = false;
    let mut in_squote = false;
    let mut escaped = false;
    let mut prev: Option<char> = None;
    for (idx, c) in raw.char_indices() {
        if in_dquote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_dquote = false;
            }
        } else if in_squote {
            if c == '\'' {
                in_squote = false;
            }
        } else if c == '"' {
            in_dquote = true;
        } else if c == '\'' {
            in_squote = true;
        } else if c == '#' && prev.is_none_or(|p| p == ' ') {
            return &raw[..idx];
        }
        prev = Some(c);
    }
    raw
}

fn scan_lines(text: &str) -> Result<Vec<Line>, SpecError> {
    let mut lines = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        if raw.contains('\t') {
            return Err(syntax(number, "tab character (indent and content must use spaces)"));
        }
        let stripped = strip_comment(raw);
        let indent = stripped.chars().take_while(|c| *c == ' ').count();
        let content = stripped[indent..].trim_end().to_string();
        if content.is_empty() {
            continue;
        }
        if content == "---" {
            if seen_content {
                return Err(syntax(number, "multiple documents are not supported"));
            }
            if indent != 0 {
                return Err(syntax(number, "`---` must start at column zero"));
            }
            seen_content = true;
            continue;
        }
        if content == "..." {
            return Err(syntax(number, "document end markers are not supported"));
        }
        seen_content = true;
        lines.push(Line { indent, content, number });
    }
    Ok(lines)
}

/// Find the split point of `key: value` / `key:` in a content line.
/// Returns (key, rest) where rest is `None` for the block form.
fn split_key(content: &str, number: usize) -> Result<Option<(String, Option<String>)>, SpecError> {
    let mut chars = content.char_indices();
    let Some((_, first)) = chars.next() else { return Ok(None) };
    if !is_key_char(first, true) {
        return Ok(None);
    }
    let mut key_end = content.len();
    for (idx, c) in content.char_indices().skip(1) {
        if !is_key_char(c, false) {
            key_end = idx;
            break;
        }
        key_end = content.len();
    }
    let key = &content[..key_end];
    let rest = &content[key_end..];
    if rest.is_empty() {
        // плain scalar made only of key characters, e.g. a sequence item.
        return Ok(None);
    }
    if rest == ":" {
        return Ok(Some((key.to_string(), None)));
    }
    if let Some(value) = rest.strip_prefix(": ") {
        let value = value.trim_start();
        if value.is_empty() {
            return Err(syntax(number, format!("missing value after `{key}:`")));
        }
        return Ok(Some((key.to_string(), Some(value.to_string()))));
    }
    Ok(None)
}

struct Parser {
    lines: Vec<Line>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Line> {
        self.lines.get(self.pos)
    }

    fn parse_block(&mut self, indent: usize) -> Result<Node, SpecError> {
        let line = match self.peek() {
            Some(l) => l.clone(),
            None => return Err(syntax(self.last_line(), "unexpected end of document")),
        };
        if line.indent != indent {
            return Err(syntax(
                line.number,
                format!("expected indentation of {indent}, found {}", line.indent),
            ));
        }
        if line.content == "-" || line.content.starts_with("- ") {
            self.parse_sequence(indent)
        } else if let Some((_, _)) = split_key(&line.content, line.number)? {
            self.parse_mapping(indent)
        } else {
            self.pos += 1;
            let node = parse_inline(&line.content, line.number)?;
            self.reject_deeper(indent)?;
            Ok(node)
        }
    }

    fn parse_sequence(&mut self, indent: usize) -> Result<Node, SpecError> {
        let start = self.peek().map(|l| l.number).unwrap_or(0);
        let mut items = Vec::new();
        loop {
            let line = match self.peek() {
                Some(l) if l.indent == indent => l.clone(),
                Some(l) if l.indent > indent => {
                    return Err(syntax(l.number, "unexpected indentation"));
                }
                _ => break,
            };
            if line.content == "-" {
                return Err(syntax(line.number, "empty sequence item"));
            }
            let Some(rest) = line.content.strip_prefix("- ") else {
                return Err(syntax(
                    line.number,
                    "cannot mix mapping keys and sequence items at one indentation",
                ));
            };
            let rest = rest.trim_start().to_string();
            if rest.is_empty() {
                return Err(syntax(line.number, "empty sequence item"));
            }
            // Re-enter the parser as if the item content started a line of its
            // own, two columns deeper; continuation lines line up with it.
            self.lines[self.pos] =
                Line { indent: indent + 2, content: rest, number: line.number };
            items.push(self.parse_block(indent + 2)?);
        }
        Ok(Node { kind: NodeKind::Sequence(items), line: start })
    }

    fn parse_mapping(&mut self, indent: usize) -> Result<Node, SpecError> {
        let start = self.peek().map(|l| l.number).unwrap_or(0);
        let mut entries: Vec<MapEntry> = Vec::new();
        loop {
            let line = match self.peek() {
                Some(l) if l.indent == indent => l.clone(),
                Some(l) if l.indent > indent => {
                    return Err(syntax(l.number, "unexpected indentation"));
                }
                _ => break,
            };
            if line.content == "-" || line.content.starts_with("- ") {
                return Err(syntax(
                    line.number,
                    "cannot mix mapping keys and sequence items at one indentation",
                ));
            }
            let Some((key, inline)) = split_key(&line.content, line.number)? else {
                return Err(syntax(
                    line.number,
                    format!("expected `key: value` or `key:`, found `{}`", line.content),
                ));
            };
            if entries.iter().any(|e| e.key == key) {
                return Err(syntax(line.number, format!("duplicate key `{key}`")));
            }
            self.pos += 1;
            let value = match inline {
                Some(text) => {
                    let node = parse_inline(&text, line.number)?;
                    self.reject_deeper(indent)?;
                    node
                }
                None => match self.peek() {
                    Some(next) if next.indent == indent + 2 => self.parse_block(indent + 2)?,
                    Some(next) if next.indent > indent => {
                        return Err(syntax(
                            next.number,
                            format!("expected indentation of {}, found {}", indent + 2, next.indent),
                        ));
                    }
                    _ => {
                        return Err(syntax(line.number, format!("missing value for key `{key}`")));
                    }
                },
            };
            entries.push(MapEntry { key, key_line: line.number, value });
        }
        Ok(Node { kind: NodeKind::Mapping(entries), line: start })
    }

    /// After an inline value, the next line must not be indented deeper.
    fn reject_deeper(&self, indent: usize) -> Result<(), SpecError> {
        if let Some(next) = self.peek() {
            if next.indent > indent {
                return Err(syntax(next.number, "unexpected indentation"));
            }
        }
        Ok(())
    }

    fn last_line(&self) -> usize {
        self.lines.last().map(|l| l.number).unwrap_or(0)
    }
}

fn parse_inline(text: &str, number: usize) -> Result<Node, SpecError> {
    let scalar = |s: String| Node { kind: NodeKind::Scalar(s), line: number };
    let mut chars = text.chars();
    match chars.next() {
        None => Err(syntax(number, "empty value")),
        Some('"') => {
            let (value, rest) = parse_double_quoted(text, number)?;
            if !rest.trim().is_empty() {
                return Err(syntax(number, "trailing characters after quoted scalar"));
            }
            Ok(scalar(value))
        }
        Some('\'') => {
            let (value, rest) = parse_single_quoted(text, number)?;
            if !rest.trim().is_empty() {
                return Err(syntax(number, "trailing characters after quoted scalar"));
            }
            Ok(scalar(value))
        }
        Some('[') => parse_flow_sequence(text, number),
        Some('{') => Err(syntax(number, "flow mappings are not supported")),
        Some(c) if "&*!|>%@`".contains(c) => {
            Err(syntax(number, format!("unsupported syntax `{c}`")))
        }
        Some(_) => {
            if text.contains(": ") {
                return Err(syntax(
                    number,
                    "plain scalar contains `: `; quote the value",
                ));
            }
            if text.ends_with(':') {
                return Err(syntax(number, "plain scalar ends with `:`; quote the value"));
            }
            Ok(scalar(text.to_string()))
        }
    }
}

/// Parse a double-quoted scalar from the start of `text`; returns the value
/// and whatever follows the closing quote.
fn parse_double_quoted(text: &str, number: usize) -> Result<(String, &str), SpecError> {
    debug_assert!(text.starts_with('"'));
    let mut value = String::new();
    let mut chars = text.char_indices().skip(1);
    while let Some((idx, c)) = chars.next() {
        match c {
            '"' => return Ok((value, &text[idx + 1..])),
            '\\' => match chars.next() {
                Some((_, '\\')) => value.push('\\'),
                Some((_, '"')) => value.push('"'),
                Some((_, 'n')) => value.push('\n'),
                Some((_, 't')) => value.push('\t'),
                Some((_, 'r')) => value.push('\r'),
                Some((_, other)) => {
                    return Err(syntax(number, format!("unknown escape `\\{other}`")))
                }
                None => return Err(syntax(number, "unterminated escape")),
            },
            other => value.push(other),
        }
    }
    Err(syntax(number, "unterminated double-quoted scalar"))
}

fn parse_single_quoted(text: &str, number: usize) -> Result<(String, &str), SpecError> {
    debug_assert!(text.starts_with('\''));
    let mut value = String::new();
    let bytes = text.as_bytes();
    let mut i = 1;
    while i < bytes.len() {
        if bytes[i] == b'\'' {
            if bytes.get(i + 1) == Some(&b'\'') {
                value.push('\'');
                i += 2;
            } else {
                return Ok((value, &text[i + 1..]));
            }
        } else {
            let c = text[i..].chars().next().unwrap();
            value.push(c);
            i += c.len_utf8();
        }
    }
    Err(syntax(number, "unterminated single-quoted scalar"))
}

fn parse_flow_sequence(text: &str, number: usize) -> Result<Node, SpecError> {
    debug_assert!(text.starts_with('['));
    let mut items = Vec::new();
    let mut rest = text[1..].trim_start();
    if let Some(after) = rest.strip_prefix(']') {
        if !after.trim().is_empty() {
            return Err(syntax(number, "trailing characters after `]`"));
        }
        return Ok(Node { kind: NodeKind::Sequence(items), line: number });
    }
    loop {
        rest = rest.trim_start();
        let (value, after) = if rest.starts_with('"') {
            parse_double_quoted(rest, number)?
        } else if rest.starts_with('\'') {
            parse_single_quoted(rest, number)?
        } else {
            let end = rest
                .find([',', ']'])
                .ok_or_else(|| syntax(number, "unterminated flow sequence"))?;
            let raw = rest[..end].trim();
            if raw.is_empty() {
                return Err(syntax(number, "empty flow sequence item"));
            }
            if raw.contains('[') || raw.contains('{') {
                return Err(syntax(number, "nested flow collections are not supported"));
            }
            (raw.to_string(), &rest[end..])
        };
        items.push(Node { kind: NodeKind::Scalar(value), line: number });
        rest = after.trim_start();
        if let Some(after_comma) = rest.strip_prefix(',') {
            rest = after_comma;
            continue;
        }
        if let Some(after_close) = rest.strip_prefix(']') {
            if !after_close.trim().is_empty() {
                return Err(syntax(number, "trailing characters after `]`"));
            }
            return Ok(Node { kind: NodeKind::Sequence(items), line: number });
        }
        return Err(syntax(number, "expected `,` or `]` in flow sequence"));
    }
}

/// Parse a complete document. The top level must be a mapping.
pub fn parse_document(text: &str) -> Result<Node, SpecError> {
    let lines = scan_lines(text)?;
    if lines.is_empty() {
        return Err(syntax(1, "empty document"));
    }
    let mut parser = Parser { lines, pos: 0 };
    let root = parser.parse_block(0)?;
    if let Some(extra) = parser.peek() {
        return Err(syntax(extra.number, "content after end of top-level block"));
    }
    if !matches!(root.kind, NodeKind::Mapping(_)) {
        return Err(syntax(root.line, "top level of a document must be a mapping"));
    }
    Ok(root)
}

/// Quote and escape `value` when it is not a safe plain scalar.
pub fn emit_scalar(value: &str) -> String {
    let plain_safe = !value.is_empty()
        && value
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '/' | '.'))
        && value
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | ':' | '@' | '+' | '-'))
        && !value.ends_with(':');
    if plain_safe {
        return value.to_string();
    }
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Node {
        parse_document(text).unwrap()
    }

    fn err(text: &str) -> SpecError {
        parse_document(text).unwrap_err()
    }

    #[test]
    fn minimal_mapping() {
        let doc = parse("name: demo\nversion: \"1.0\"\n");
        let map = doc.as_mapping().unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map[0].key, "name");
        assert_eq!(map[0].value.as_scalar(), Some("demo"));
        assert_eq!(map[1].value.as_scalar(), Some("1.0"));
    }

    #[test]
    fn nested_blocks_and_sequences() {
        let doc = parse(
            "---\n\
             name: r\n\
             tasks:\n\
             \x20 - id: a\n\
             \x20   dir:\n\
             \x20     path: /x\n\
             \x20 - id: b\n\
             \x20   command:\n\
             \x20     argv: [/bin/sh, -c, \"echo hi\"]\n",
        );
        let map = doc.as_mapping().unwrap();
        let tasks = map[1].value.as_sequence().unwrap();
        assert_eq!(tasks.len(), 2);
        let first = tasks[0].as_mapping().unwrap();
        assert_eq!(first[0].key, "id");
        assert_eq!(first[1].key, "dir");
        let second = tasks[1].as_mapping().unwrap();
        let argv = second[1].value.as_mapping().unwrap()[0].value.as_sequence().unwrap();
        let argv: Vec<&str> = argv.iter().map(|n| n.as_scalar().unwrap()).collect();
        assert_eq!(argv, vec!["/bin/sh", "-c", "echo hi"]);
    }

    #[test]
    fn scalar_sequence_items() {
        let doc = parse("roles:\n  - base\n  - oommf\n");
        let roles = doc.as_mapping().unwrap()[0].value.as_sequence().unwrap();
        assert_eq!(roles.len(), 2);
        assert_eq!(roles[1].as_scalar(), Some("oommf"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let doc = parse("# header\nname: demo # trailing\n\nnote: \"a # not comment\"\n");
        let map = doc.as_mapping().unwrap();
        assert_eq!(map[0].value.as_scalar(), Some("demo"));
        assert_eq!(map[1].value.as_scalar(), Some("a # not comment"));
    }

    #[test]
    fn tabs_are_rejected() {
        let e = err("name:\tdemo\n");
        assert!(matches!(e, SpecError::Syntax { line: 1, .. }), "{e}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let e = err("name: a\nname: b\n");
        assert!(e.to_string().contains("duplicate key"));
    }

    #[test]
    fn unknown_escape_rejected() {
        assert!(err("v: \"\\q\"\n").to_string().contains("escape"));
    }

    #[test]
    fn multiple_documents_rejected() {
        assert!(err("a: 1\n---\nb: 2\n").to_string().contains("multiple documents"));
    }

    #[test]
    fn anchors_and_block_scalars_rejected() {
        assert!(err("v: &anchor x\n").to_string().contains("unsupported"));
        assert!(err("v: |\n  text\n").to_string().contains("unsupported"));
    }

    #[test]
    fn odd_indentation_rejected() {
        let e = err("verify:\n   characteristics_paths: [/c]\n");
        assert!(e.to_string().contains("indentation"), "{e}");
    }

    #[test]
    fn plain_scalar_with_colon_space_rejected() {
        assert!(err("v: some: thing\n").to_string().contains("quote the value"));
    }

    #[test]
    fn missing_value_rejected() {
        assert!(err("v:\nw: 1\n").to_string().contains("missing value"));
        assert!(err("v:\n").to_string().contains("missing value"));
    }

    #[test]
    fn mixing_kinds_rejected() {
        let e = err("items:\n  - a\n  key: b\n");
        assert!(e.to_string().contains("cannot mix"), "{e}");
    }

    #[test]
    fn flow_sequences() {
        let doc = parse("empty: []\nsome: [a, 'b c', \"d,e\"]\n");
        let map = doc.as_mapping().unwrap();
        assert_eq!(map[0].value.as_sequence().unwrap().len(), 0);
        let items: Vec<&str> = map[1]
            .value
            .as_sequence()
            .unwrap()
            .iter()
            .map(|n| n.as_scalar().unwrap())
            .collect();
        assert_eq!(items, vec!["a", "b c", "d,e"]);
    }

    #[test]
    fn emit_scalar_quotes_when_needed() {
        assert_eq!(emit_scalar("plain-1.0/x"), "plain-1.0/x");
        assert_eq!(emit_scalar("has space"), "\"has space\"");
        assert_eq!(emit_scalar("line\nbreak"), "\"line\\nbreak\"");
        assert_eq!(emit_scalar(""), "\"\"");
        assert_eq!(emit_scalar("-flag"), "\"-flag\"");
    }
}
