//! Built-in schemes by name.

use crate::error::{Error, Result};
use crate::scheme::{parse_scheme, Scheme};

/// Name, definition and an optional caveat for each built-in scheme.
const BUILTINS: &[(&str, &str, Option<&str>)] = &[
    ("cheb", "1:1,2:-1,3:-1,5:-1,30:1", None),
    ("nu1", "1:1,2:-2", None),
    ("nu2", "1:1,2:-1,3:-2,6:1", None),
    ("nu3", "1:1,2:-1,3:-1,4:-1,12:1", None),
    (
        "nu4",
        "1:1,2:-1,3:-1,6:-1",
        Some("defined as d1 - d2 - d3 - d6; the bracket string [1,6;2,3] sometimes quoted for it does not cancel"),
    ),
    ("nu5", "1:1,2:-1,3:-1,5:-1,15:1,30:-1", None),
    ("nu6", "1:1,2:-1,3:-1,5:-1,6:1,7:-1,70:1,210:-1", None),
    ("nu7", "[1,6,10,210,231,1155;2,3,5,7,11,105]", None),
    ("nu8", "[1,6,10,14,105;2,3,5,7,11,13,385,1001]", None),
];

#[derive(Debug, Clone)]
pub struct BuiltinScheme {
    pub name: &'static str,
    pub scheme: Scheme,
    pub caveat: Option<&'static str>,
}

pub fn builtins() -> Vec<BuiltinScheme> {
    BUILTINS
        .iter()
        .map(|&(name, text, caveat)| BuiltinScheme {
            name,
            scheme: parse_scheme(text).expect("built-in scheme parses").with_name(name),
            caveat,
        })
        .collect()
}

pub fn builtin(name: &str) -> Option<Scheme> {
    BUILTINS
        .iter()
        .find(|&&(n, _, _)| n == name)
        .map(|&(n, text, _)| parse_scheme(text).expect("built-in scheme parses").with_name(n))
}

/// A registry name, a bracket string or an explicit `index:weight` list.
pub fn resolve(text: &str) -> Result<Scheme> {
    let trimmed = text.trim();
    if let Some(s) = builtin(trimmed) {
        return Ok(s);
    }
    if trimmed.starts_with('[') || trimmed.contains(':') {
        return parse_scheme(trimmed);
    }
    Err(Error::UnknownScheme(trimmed.to_string()))
}
