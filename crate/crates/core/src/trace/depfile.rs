//! Make-rule dependency files as written by `-MD -MF`.

use crate::error::{Error, Result};

/// Prerequisites of every rule in `text`, first occurrence order, deduplicated.
pub fn parse_depfile(text: &str) -> Result<Vec<String>> {
    let mut prereqs: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut in_prereqs = false;
    let mut saw_target = false;
    let mut word = String::new();
    let mut chars = text.chars().peekable();

    let mut flush = |word: &mut String, in_prereqs: bool, saw_target: &mut bool| {
        if word.is_empty() {
            return;
        }
        let w = std::mem::take(word);
        if in_prereqs {
            if seen.insert(w.clone()) {
                prereqs.push(w);
            }
        } else {
            *saw_target = true;
        }
    };

    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.peek().copied() {
                Some('\n') => {
                    chars.next();
                    flush(&mut word, in_prereqs, &mut saw_target);
                }
                Some('\r') => {
                    chars.next();
                    if chars.peek() == Some(&'\n') {
                        chars.next();
                    }
                    flush(&mut word, in_prereqs, &mut saw_target);
                }
                Some(' ') | Some('#') | Some('\\') | Some(':') => {
                    word.push(chars.next().unwrap());
                }
                _ => word.push('\\'),
            },
            '$' if chars.peek() == Some(&'$') => {
                chars.next();
                word.push('$');
            }
            ':' if !in_prereqs
                && matches!(
                    chars.peek(),
                    None | Some(' ') | Some('\t') | Some('\n') | Some('\r')
                ) =>
            {
                flush(&mut word, in_prereqs, &mut saw_target);
                if !saw_target {
                    return Err(Error::Analysis("depfile rule without a target".into()));
                }
                in_prereqs = true;
            }
            ' ' | '\t' | '\r' => flush(&mut word, in_prereqs, &mut saw_target),
            '\n' => {
                flush(&mut word, in_prereqs, &mut saw_target);
                if saw_target && !in_prereqs {
                    return Err(Error::Analysis("depfile rule without `:`".into()));
                }
                in_prereqs = false;
                saw_target = false;
            }
            _ => word.push(c),
        }
    }
    flush(&mut word, in_prereqs, &mut saw_target);
    if saw_target && !in_prereqs {
        return Err(Error::Analysis("depfile rule without `:`".into()));
    }
    Ok(prereqs)
}
