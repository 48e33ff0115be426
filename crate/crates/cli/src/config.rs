//! Merging of JSON config files with command-line flags.
//!
//! A config file is a flat JSON object keyed by long flag names
//! (`"sigma-n": 0.01`). Flags given on the command line win.

use std::path::Path;

use clap::CommandFactory;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use symrec_core::{Error, Result};

pub fn merge<T>(cli: &T, config: Option<&Path>) -> Result<T>
where
    T: Serialize + DeserializeOwned + CommandFactory,
{
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(cli)?)?);
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(mut base) = serde_json::from_str::<Value>(&text)
        .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), e.line())))?
    else {
        return Err(Error::Config(format!("{}: config must be a JSON object", path.display())));
    };
    let known: Vec<String> = T::command().get_arguments().map(|a| a.get_id().as_str().replace('_', "-")).collect();
    if let Some(bad) = base.keys().find(|k| !known.contains(k)) {
        return Err(Error::Config(format!("{}: unknown key `{bad}`", path.display())));
    }
    if let Value::Object(over) = serde_json::to_value(cli)? {
        overlay(&mut base, over);
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn overlay(base: &mut Map<String, Value>, over: Map<String, Value>) {
    for (k, v) in over {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
}

/// Parses a flag value through the type's serde names, so flags and config
/// files accept the same spellings.
pub fn serde_value<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.to_owned())).map_err(|e| e.to_string())
}

pub fn is_false(b: &bool) -> bool {
    !b
}
