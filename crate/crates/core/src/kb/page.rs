//! Extraction of method declarations and `Throws:` clauses from stored
//! Javadoc-style pages.
//!
//! Pages come either as Javadoc HTML or as the plain-text rendering of one.
//! HTML is first flattened into one line per block element; both forms then go
//! through the same line scanner. A declaration is recognised only where a bare
//! method-name heading is immediately followed by a signature for that name,
//! which is how Javadoc lays out its member details. Prose and code snippets
//! never match that shape and are ignored.

use thiserror::Error;

use super::{collapse_ws, is_java_identifier, split_top_level, strip_generics, ApiEntry, ExceptionSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PageError {
    #[error("malformed throws clause `{0}`")]
    MalformedClause(String),
    #[error("no method declaration found on page")]
    NoDeclaration,
    #[error("page declares methods but no enclosing package and type could be found")]
    MissingType,
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
}

/// Parses one `Throws: Exception - condition` clause.
pub fn parse_throws_clause(text: &str) -> Result<ExceptionSpec, PageError> {
    let malformed = || PageError::MalformedClause(text.to_string());
    let trimmed = text.trim_start();
    let prefix = trimmed.get(..7).ok_or_else(malformed)?;
    if !prefix.eq_ignore_ascii_case("throws:") {
        return Err(malformed());
    }
    let rest = trimmed[7..].trim();
    let (exception, condition) = match rest.find(" - ") {
        Some(at) => (rest[..at].trim(), rest[at + 3..].trim()),
        None => (rest, ""),
    };
    if !is_type_name(exception) {
        return Err(malformed());
    }
    let condition = condition.strip_suffix('.').unwrap_or(condition);
    Ok(ExceptionSpec::new(exception, condition))
}

fn is_type_name(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_java_identifier)
}

/// True when a line opens a new throws entry: `Name` or `Name - ...`.
fn starts_throws_entry(line: &str) -> bool {
    let head = match line.find(" - ") {
        Some(at) => &line[..at],
        None => line,
    };
    let head = head.trim();
    if !is_type_name(head) {
        return false;
    }
    let last = head.rsplit('.').next().unwrap_or(head);
    last.ends_with("Exception") || last.ends_with("Error") || line.contains(" - ")
}

fn is_section_header(line: &str) -> bool {
    let Some(label) = line.strip_suffix(':') else {
        return false;
    };
    !label.is_empty()
        && label.len() <= 40
        && label.starts_with(|c: char| c.is_ascii_uppercase())
        && label.chars().all(|c| c.is_alphanumeric() || c == ' ' || c == '-')
}

#[derive(Debug)]
struct Declaration {
    name: String,
    params: Vec<String>,
    constructor: bool,
    specs: Vec<ExceptionSpec>,
}

/// One entry per documented method that has at least one `Throws:` clause.
pub fn parse_api_page(page: &str) -> Result<Vec<ApiEntry>, PageError> {
    let lines: Vec<String> = if looks_like_html(page) {
        html_to_lines(page)
    } else {
        page.lines().map(collapse_ws).collect()
    };

    let mut package: Option<String> = None;
    let mut type_name: Option<String> = None;
    let mut decls: Vec<Declaration> = Vec::new();
    let mut last_bare_package: Option<String> = None;

    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].as_str();

        if type_name.is_none() {
            if let Some(pkg) = line.strip_prefix("Package ") {
                if is_type_name(pkg.trim()) {
                    package = Some(pkg.trim().to_string());
                    i += 1;
                    continue;
                }
            }
            if let Some(ty) = type_title(line) {
                if package.is_none() {
                    package = last_bare_package.clone();
                }
                type_name = Some(ty);
                i += 1;
                continue;
            }
            if is_package_name(line) {
                last_bare_package = Some(line.to_string());
            }
        }

        if is_java_identifier(line) {
            if let Some((sig, end)) = signature_after(&lines, i) {
                if let Some((name, params)) = parse_signature_line(&sig) {
                    if name == line {
                        let ctor = type_name
                            .as_deref()
                            .map(|t| t.rsplit('.').next() == Some(name.as_str()))
                            .unwrap_or(false)
                            || !has_return_type(&sig, &name);
                        decls.push(Declaration {
                            name,
                            params,
                            constructor: ctor,
                            specs: Vec::new(),
                        });
                        i = end;
                        continue;
                    }
                }
            }
        }

        if line.len() >= 7 && line[..7].eq_ignore_ascii_case("throws:") {
            let inline = line[7..].trim();
            let mut clauses: Vec<String> = Vec::new();
            if !inline.is_empty() {
                clauses.push(inline.to_string());
            }
            let mut j = i + 1;
            while j < lines.len() {
                let l = lines[j].as_str();
                if l.is_empty() || is_section_header(l) {
                    break;
                }
                if is_java_identifier(l) {
                    if let Some((sig, _)) = signature_after(&lines, j) {
                        if matches!(parse_signature_line(&sig), Some((n, _)) if n == l) {
                            break;
                        }
                    }
                }
                if starts_throws_entry(l) || clauses.is_empty() {
                    clauses.push(l.to_string());
                } else if let Some(last) = clauses.last_mut() {
                    last.push(' ');
                    last.push_str(l);
                }
                j += 1;
            }
            for clause in clauses {
                let spec = parse_throws_clause(&format!("Throws: {clause}"))?;
                if let Some(decl) = decls.last_mut() {
                    if !decl.specs.iter().any(|s| s == &spec) {
                        decl.specs.push(spec);
                    }
                }
            }
            i = j;
            continue;
        }

        i += 1;
    }

    if decls.is_empty() {
        return Err(PageError::NoDeclaration);
    }
    let (Some(package), Some(type_name)) = (package, type_name) else {
        return Err(PageError::MissingType);
    };

    let mut entries = Vec::new();
    for decl in decls.into_iter().filter(|d| !d.constructor && !d.specs.is_empty()) {
        let fqn = format!("{package}.{type_name}.{}({})", decl.name, decl.params.join(", "));
        let entry = ApiEntry::from_fqn(&fqn, decl.specs).map_err(|e| PageError::Structure {
            line: 0,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

fn next_non_empty(lines: &[String], from: usize) -> Option<usize> {
    (from..lines.len()).find(|&k| !lines[k].is_empty())
}

/// The signature following a heading at `at`, joining up to a few wrapped
/// lines until the parameter list closes. Returns the text and the index just
/// past it.
fn signature_after(lines: &[String], at: usize) -> Option<(String, usize)> {
    const MAX_WRAP: usize = 6;
    let first = next_non_empty(lines, at + 1)?;
    let mut sig = lines[first].clone();
    let mut end = first + 1;
    while sig.contains('(') && paren_depth(&sig) > 0 && end < lines.len() && end - first < MAX_WRAP {
        if lines[end].is_empty() {
            return None;
        }
        sig.push(' ');
        sig.push_str(&lines[end]);
        end += 1;
    }
    Some((collapse_ws(&sig), end))
}

fn paren_depth(s: &str) -> i32 {
    s.chars().fold(0, |d, c| match c {
        '(' => d + 1,
        ')' => d - 1,
        _ => d,
    })
}

fn is_package_name(line: &str) -> bool {
    line.contains('.')
        && line
            .split('.')
            .all(|seg| is_java_identifier(seg) && seg.starts_with(|c: char| c.is_ascii_lowercase()))
}

/// `Class Vector<E>` → `Vector`; nested types keep their dotted path.
fn type_title(line: &str) -> Option<String> {
    const KINDS: [&str; 7] = [
        "Class ",
        "Interface ",
        "Enum Class ",
        "Enum ",
        "Record Class ",
        "Record ",
        "Annotation Interface ",
    ];
    let rest = KINDS.iter().find_map(|k| line.strip_prefix(k))?;
    let name = strip_generics(rest);
    let name = name.trim();
    is_type_name(name).then(|| name.to_string())
}

/// Parses `modifiers ReturnType name(Type a, Type b) throws X` into name and
/// normalized parameter declarations.
fn parse_signature_line(line: &str) -> Option<(String, Vec<String>)> {
    let line = strip_annotations(line);
    let open = line.find('(')?;
    let close = matching_paren(&line, open)?;
    let head = line[..open].trim();
    let name = head.rsplit(char::is_whitespace).next()?.to_string();
    if !is_java_identifier(&name) {
        return None;
    }
    let tail = line[close + 1..].trim();
    if !(tail.is_empty() || tail.starts_with("throws ") || tail == ";") {
        return None;
    }
    let params = split_top_level(&line[open + 1..close], ',')
        .into_iter()
        .map(|p| {
            let p = collapse_ws(&p);
            p.strip_prefix("final ").map(str::to_string).unwrap_or(p)
        })
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>();
    for p in &params {
        let ty = p.rsplit_once(' ').map(|(t, _)| t).unwrap_or(p);
        if !ty.starts_with(|c: char| c.is_alphabetic() || c == '_' || c == '$') {
            return None;
        }
    }
    Some((name, params))
}

fn has_return_type(line: &str, name: &str) -> bool {
    let line = strip_annotations(line);
    let head = match line.find('(') {
        Some(open) => line[..open].trim().to_string(),
        None => return false,
    };
    let head = head.strip_suffix(name).unwrap_or(&head).trim();
    const MODIFIERS: [&str; 11] = [
        "public", "protected", "private", "static", "final", "abstract", "synchronized",
        "native", "default", "strictfp", "transient",
    ];
    let head = strip_generics(head);
    head.split_whitespace().any(|w| !MODIFIERS.contains(&w))
}

fn matching_paren(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (k, c) in s[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + k);
                }
            }
            _ => {}
        }
    }
    None
}

fn strip_annotations(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let chars: Vec<char> = line.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        if chars[k] == '@' {
            k += 1;
            while k < chars.len() && (chars[k].is_alphanumeric() || chars[k] == '.' || chars[k] == '_') {
                k += 1;
            }
            if k < chars.len() && chars[k] == '(' {
                let mut depth = 0;
                while k < chars.len() {
                    if chars[k] == '(' {
                        depth += 1;
                    } else if chars[k] == ')' {
                        depth -= 1;
                        if depth == 0 {
                            k += 1;
                            break;
                        }
                    }
                    k += 1;
                }
            }
            continue;
        }
        out.push(chars[k]);
        k += 1;
    }
    collapse_ws(&out)
}

fn looks_like_html(page: &str) -> bool {
    let head = page.trim_start();
    head.starts_with('<') || page.contains("</div>") || page.contains("</dd>")
}

const BLOCK_TAGS: [&str; 27] = [
    "p", "div", "h1", "h2", "h3", "h4", "h5", "h6", "dt", "dd", "li", "tr", "td", "th", "pre",
    "br", "dl", "ul", "ol", "table", "section", "hr", "main", "header", "footer", "nav", "body",
];
const SECTION_TAGS: [&str; 5] = ["dl", "section", "ul", "ol", "table"];

/// Flattens HTML into one collapsed line per block element. Closing a list or
/// section emits an empty line so that clause blocks end cleanly.
pub fn html_to_lines(html: &str) -> Vec<String> {
    let mut lines = Vec::new();
    let mut buf = String::new();
    let mut rest = html;

    let flush = |buf: &mut String, lines: &mut Vec<String>| {
        let line = collapse_ws(&decode_entities(buf));
        if !line.is_empty() {
            lines.push(line);
        }
        buf.clear();
    };

    while let Some(lt) = rest.find('<') {
        buf.push_str(&rest[..lt]);
        rest = &rest[lt..];
        if rest.starts_with("<!--") {
            rest = rest.find("-->").map(|e| &rest[e + 3..]).unwrap_or("");
            continue;
        }
        let Some(gt) = rest.find('>') else {
            buf.push_str(rest);
            rest = "";
            break;
        };
        let tag = &rest[1..gt];
        rest = &rest[gt + 1..];
        let closing = tag.starts_with('/');
        let name: String = tag
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        if !closing && (name == "script" || name == "style") {
            let end = format!("</{name}");
            rest = rest
                .to_ascii_lowercase()
                .find(&end)
                .map(|e| &rest[e..])
                .unwrap_or("");
            continue;
        }
        if BLOCK_TAGS.contains(&name.as_str()) {
            flush(&mut buf, &mut lines);
            if closing && SECTION_TAGS.contains(&name.as_str()) && lines.last().is_some_and(|l| !l.is_empty()) {
                lines.push(String::new());
            }
        }
        // inline tags (a, code, span, wbr, ...) contribute no text
    }
    buf.push_str(rest);
    flush(&mut buf, &mut lines);
    lines
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let Some(semi) = rest[..rest.len().min(12)].find(';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let ent = &rest[1..semi];
        let decoded = match ent {
            "lt" => Some('<'),
            "gt" => Some('>'),
            "amp" => Some('&'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some(' '),
            _ => ent
                .strip_prefix("#x")
                .or_else(|| ent.strip_prefix("#X"))
                .and_then(|h| u32::from_str_radix(h, 16).ok())
                .or_else(|| ent.strip_prefix('#').and_then(|d| d.parse().ok()))
                .and_then(char::from_u32)
                .map(|c| if c == '\u{a0}' { ' ' } else { c }),
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
