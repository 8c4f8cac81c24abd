use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;

/// Read a JSON config. Missing fields take their defaults; unknown fields and
/// bad values are reported with the path of the offending field and its
/// position in the file.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        // the inner message already ends with the line and column
        anyhow!("field `{field}`: {}", e.into_inner())
    })
}

/// Canonical text of a config, as written to the run directory.
pub fn to_text<T: serde::Serialize>(config: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(config)? + "\n")
}

/// Every command needs a hyperbolic matrix.
pub fn check_matrix(aut: &carpet_core::toral::ToralAutomorphism) -> Result<()> {
    aut.eigen().map(|_| ()).context("field `matrix`")
}
