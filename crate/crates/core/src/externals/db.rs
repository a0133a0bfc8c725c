//! Key/value store behind the `db` widget, persisted as one
//! `key<TAB>value` line per record.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::types::Type;

/// A scalar stored in a database column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scalar {
    Str(String),
    Int(i64),
    Bool(bool),
}

/// Column type of a database, taken from its type arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Str,
    Int,
    Bool,
}

impl Column {
    pub fn from_type(t: &Type) -> Option<Column> {
        match t {
            Type::Str => Some(Column::Str),
            Type::Int => Some(Column::Int),
            Type::Bool => Some(Column::Bool),
            _ => None,
        }
    }

    fn decode(self, text: &str) -> Option<Scalar> {
        match self {
            Column::Str => Some(Scalar::Str(unescape(text)?)),
            Column::Int => text.parse().ok().map(Scalar::Int),
            Column::Bool => text.parse().ok().map(Scalar::Bool),
        }
    }
}

fn encode(s: &Scalar) -> String {
    match s {
        Scalar::Str(s) => escape(s),
        Scalar::Int(n) => n.to_string(),
        Scalar::Bool(b) => b.to_string(),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

#[derive(Debug, thiserror::Error)]
pub enum DbError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: malformed record")]
    Malformed { path: PathBuf, line: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DbState {
    pub path: PathBuf,
    pub key: Column,
    pub val: Column,
    pub records: Vec<(Scalar, Scalar)>,
}

impl DbState {
    /// Opens the store at `path`, loading its records if the file exists.
    pub fn open(path: &Path, key: Column, val: Column) -> Result<DbState, DbError> {
        let mut db = DbState { path: path.to_path_buf(), key, val, records: Vec::new() };
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(db),
            Err(source) => return Err(DbError::Io { path: path.to_path_buf(), source }),
        };
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || DbError::Malformed { path: path.to_path_buf(), line: i + 1 };
            let (k, v) = line.split_once('\t').ok_or_else(bad)?;
            let k = key.decode(k).ok_or_else(bad)?;
            let v = val.decode(v).ok_or_else(bad)?;
            db.upsert(k, v);
        }
        Ok(db)
    }

    fn upsert(&mut self, k: Scalar, v: Scalar) {
        match self.records.iter_mut().find(|(rk, _)| *rk == k) {
            Some(slot) => slot.1 = v,
            None => self.records.push((k, v)),
        }
    }

    /// Inserts or overwrites `k` and writes the file.
    pub fn update(&mut self, k: Scalar, v: Scalar) -> Result<(), DbError> {
        self.upsert(k, v);
        self.save()
    }

    /// Removes `k`, returning whether it was present.
    pub fn delete(&mut self, k: &Scalar) -> Result<bool, DbError> {
        let before = self.records.len();
        self.records.retain(|(rk, _)| rk != k);
        let found = self.records.len() != before;
        if found {
            self.save()?;
        }
        Ok(found)
    }

    pub fn save(&self) -> Result<(), DbError> {
        let mut text = String::new();
        for (k, v) in &self.records {
            text.push_str(&encode(k));
            text.push('\t');
            text.push_str(&encode(v));
            text.push('\n');
        }
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir).map_err(|source| DbError::Io { path: dir.to_path_buf(), source })?;
            }
        }
        fs::write(&self.path, text).map_err(|source| DbError::Io { path: self.path.clone(), source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Scalar {
        Scalar::Str(x.into())
    }

    #[test]
    fn fresh_store_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let db = DbState::open(&dir.path().join("x.dat"), Column::Str, Column::Str).unwrap();
        assert!(db.records.is_empty());
    }

    #[test]
    fn update_overwrites_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tony_phone.dat");
        let mut db = DbState::open(&path, Column::Str, Column::Str).unwrap();
        db.update(s("Sally"), s("old")).unwrap();
        db.update(s("Sally"), s("sally@widget.org")).unwrap();
        assert_eq!(db.records, vec![(s("Sally"), s("sally@widget.org"))]);
        let again = DbState::open(&path, Column::Str, Column::Str).unwrap();
        assert_eq!(again.records, db.records);
    }

    #[test]
    fn awkward_characters_survive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.dat");
        let mut db = DbState::open(&path, Column::Str, Column::Int).unwrap();
        db.update(s("a\tb\\c\nd"), Scalar::Int(-4)).unwrap();
        let again = DbState::open(&path, Column::Str, Column::Int).unwrap();
        assert_eq!(again.records, db.records);
    }

    #[test]
    fn delete_reports_presence() {
        let dir = tempfile::tempdir().unwrap();
        let mut db = DbState::open(&dir.path().join("d.dat"), Column::Str, Column::Str).unwrap();
        db.update(s("k"), s("v")).unwrap();
        assert!(db.delete(&s("k")).unwrap());
        assert!(!db.delete(&s("k")).unwrap());
    }
}
