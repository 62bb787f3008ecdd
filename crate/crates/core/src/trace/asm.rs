//! `.incbin` discovery in assembly sources.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Strip `/* */`, `//` and `#` comments outside string literals.
fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    let mut in_str = false;
    while let Some(c) = chars.next() {
        if in_str {
            out.push(c);
            match c {
                '\\' => {
                    if let Some(n) = chars.next() {
                        out.push(n);
                    }
                }
                '"' | '\n' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => {
                in_str = true;
                out.push(c);
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = '\0';
                for n in chars.by_ref() {
                    if n == '\n' {
                        out.push('\n');
                    }
                    if prev == '*' && n == '/' {
                        break;
                    }
                    prev = n;
                }
                out.push(' ');
            }
            '/' if chars.peek() == Some(&'/') => skip_line(&mut chars, &mut out),
            '#' => skip_line(&mut chars, &mut out),
            _ => out.push(c),
        }
    }
    out
}

fn skip_line(chars: &mut std::iter::Peekable<std::str::Chars<'_>>, out: &mut String) {
    for n in chars.by_ref() {
        if n == '\n' {
            out.push('\n');
            break;
        }
    }
}

/// Quoted paths named by `.incbin` directives, in source order.
pub fn incbin_paths(source: &str) -> Vec<String> {
    let text = strip_comments(source);
    let mut found = Vec::new();
    for stmt in text.split(['\n', ';']) {
        let s = stmt.trim_start();
        let Some(rest) = s.strip_prefix(".incbin") else {
            continue;
        };
        if !rest.starts_with([' ', '\t']) {
            continue;
        }
        let rest = rest.trim_start();
        let Some(body) = rest.strip_prefix('"') else {
            continue;
        };
        let mut path = String::new();
        let mut it = body.chars();
        while let Some(c) = it.next() {
            match c {
                '\\' => {
                    if let Some(n) = it.next() {
                        path.push(n);
                    }
                }
                '"' => break,
                _ => path.push(c),
            }
        }
        found.push(path);
    }
    found
}

/// Resolve every `.incbin` in `source` against `cwd`, then `include_dirs`.
pub fn scan_incbin(source: &[u8], cwd: &Path, include_dirs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let text = String::from_utf8_lossy(source);
    let mut out = Vec::new();
    for name in incbin_paths(&text) {
        let p = Path::new(&name);
        let candidates = if p.is_absolute() {
            vec![p.to_path_buf()]
        } else {
            std::iter::once(cwd.join(p))
                .chain(include_dirs.iter().map(|d| cwd.join(d).join(p)))
                .collect()
        };
        let hit = candidates
            .into_iter()
            .find(|c| c.is_file())
            .ok_or_else(|| Error::Analysis(format!(".incbin file `{name}` not found")))?;
        out.push(crate::fsutil::normalize(&hit));
    }
    Ok(out)
}
