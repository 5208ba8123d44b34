//! Record files for `data_records/3`.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::program::parse_terms;
use crate::term::{Sym, Term};

fn atom_text<'a>(t: &'a Term, what: &str) -> Result<&'a str> {
    match t {
        Term::Var(_) => Err(Error::Instantiation(format!("data_records/3 {what}"))),
        Term::Atom(s) => Ok(s.as_str()),
        other => Err(Error::Type(format!("data_records/3 expects an atom as {what}, found {other}"))),
    }
}

/// A CSV field: an integer if it reads as one, otherwise an atom.
fn field(text: &str) -> Term {
    let text = text.trim();
    match text.parse::<i64>() {
        Ok(i) => Term::Int(i),
        Err(_) => Term::atom(text),
    }
}

/// Reads every record of `file` in `format`; each record comes with its variable count.
pub(crate) fn load_records(root: &Path, file: &Term, format: &Term) -> Result<(PathBuf, Vec<(Term, u64)>)> {
    let name = atom_text(file, "file name")?;
    let path = if Path::new(name).is_absolute() { PathBuf::from(name) } else { root.join(name) };
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
    let records = match format {
        Term::Atom(s) if s.as_str() == "read" => parse_terms(&text).map_err(|e| Error::Data {
            path: path.clone(),
            message: e.to_string(),
        })?,
        Term::Compound(c) if c.functor().as_str() == "csv" && c.args().len() == 1 => {
            let functor = Sym::intern(atom_text(&c.args()[0], "csv functor")?);
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| (Term::app(functor, l.split(',').map(field).collect()), 0))
                .collect()
        }
        Term::Var(_) => return Err(Error::Instantiation("data_records/3 format".into())),
        other => return Err(Error::Type(format!("unknown record format {other}; expected read or csv(F)"))),
    };
    Ok((path, records))
}
