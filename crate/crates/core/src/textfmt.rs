//! Helpers shared by the plain-text corpus and structure dump formats.

use std::fmt::Write;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, PageId, Result};

/// A `tag v1 key=value ...` header line.
pub(crate) struct Header<'a> {
    path: &'a Path,
    fields: Vec<(&'a str, &'a str)>,
}

impl<'a> Header<'a> {
    pub fn parse(path: &'a Path, line: &'a str, tag: &str) -> Result<Self> {
        let mut parts = line.split(' ').filter(|p| !p.is_empty());
        match (parts.next(), parts.next()) {
            (Some(t), Some("v1")) if t == tag => {}
            _ => {
                return Err(Error::parse(
                    path,
                    1,
                    format!("expected `{tag} v1` header, found {line:?}"),
                ))
            }
        }
        let mut fields = Vec::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(path, 1, format!("malformed header field {part:?}")))?;
            fields.push((k, v));
        }
        Ok(Header { path, fields })
    }

    pub fn get(&self, key: &str) -> Result<&'a str> {
        self.fields
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::parse(self.path, 1, format!("header is missing `{key}=`")))
    }

    pub fn value<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::parse(self.path, 1, format!("bad value for `{key}`: {raw:?}")))
    }
}

/// `key=value` fields of a non-header record line, e.g. `level 3 lo=0.1 hi=0.2`.
pub(crate) fn keyed<'a>(part: &'a str, key: &str) -> std::result::Result<&'a str, String> {
    part.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| format!("expected `{key}=...`, found {part:?}"))
}

pub(crate) fn join_ids(ids: &[PageId]) -> String {
    if ids.is_empty() {
        return "-".to_string();
    }
    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{id}").unwrap();
    }
    out
}

pub(crate) fn split_ids(s: &str) -> std::result::Result<Vec<PageId>, String> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.parse().map_err(|_| format!("bad page id {p:?}")))
        .collect()
}

/// Fixed-arity list where absent entries are written as `-`.
pub(crate) fn join_opt_ids(ids: &[Option<PageId>]) -> String {
    ids.iter()
        .map(|id| id.map_or_else(|| "-".to_string(), |id| id.to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn split_opt_ids(s: &str) -> std::result::Result<Vec<Option<PageId>>, String> {
    s.split(',')
        .map(|p| match p {
            "-" => Ok(None),
            p => p
                .parse()
                .map(Some)
                .map_err(|_| format!("bad page id {p:?}")),
        })
        .collect()
}

pub(crate) fn flags_str(flags: &[bool]) -> String {
    flags.iter().map(|&f| if f { 'Y' } else { 'N' }).collect()
}

pub(crate) fn parse_flags(s: &str) -> std::result::Result<Vec<bool>, String> {
    s.chars()
        .map(|c| match c {
            'Y' => Ok(true),
            'N' => Ok(false),
            other => Err(format!("bad flag character {other:?}")),
        })
        .collect()
}

pub(crate) fn join_reals(vals: &[f64]) -> String {
    vals.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn split_reals(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.parse().map_err(|_| format!("bad real {p:?}")))
        .collect()
}

pub(crate) fn real(s: &str) -> std::result::Result<f64, String> {
    s.parse().map_err(|_| format!("bad real {s:?}"))
}
