//! JSON config layering. A config file holds one object per subcommand,
//! keyed by the subcommand name, with the same keys as the long options:
//!
//! ```json
//! {"gen-data": {"motions": 8, "seed": 3}, "train": {"epochs": 40}}
//! ```
//!
//! Options given on the command line win over the file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const SUBCOMMANDS: [&str; 8] =
    ["gen-data", "train", "retarget", "interpolate", "evaluate", "index", "retrieve", "export-latents"];

pub struct ConfigFile {
    sections: Map<String, Value>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile { sections: Map::new() }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Usage(format!("config: {m}"));
        let sections = match serde_json::from_str(text).map_err(|e| bad(e.to_string()))? {
            Value::Object(m) => m,
            _ => return Err(bad("top level must be an object".into())),
        };
        for (k, v) in &sections {
            if !SUBCOMMANDS.contains(&k.as_str()) {
                return Err(bad(format!("unknown section `{k}`")));
            }
            if !v.is_object() {
                return Err(bad(format!("section `{k}` must be an object")));
            }
        }
        Ok(ConfigFile { sections })
    }

    /// `cli` with every unset option filled from the section `name`.
    pub fn layer<T: Serialize + DeserializeOwned>(&self, name: &str, cli: &T) -> Result<T, CliError> {
        let mut merged = match self.sections.get(name) {
            Some(Value::Object(m)) => m.clone(),
            _ => Map::new(),
        };
        let given = match serde_json::to_value(cli) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("argument structs serialize to objects"),
        };
        for (k, v) in given {
            let unset = match &v {
                Value::Null | Value::Bool(false) => true,
                Value::Array(a) => a.is_empty(),
                _ => false,
            };
            if !unset {
                merged.insert(k, v);
            }
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config section `{name}`: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
    struct Args {
        epochs: Option<usize>,
        batch_size: Option<usize>,
        resume: bool,
        inputs: Vec<String>,
    }

    #[test]
    fn command_line_wins() {
        let f = ConfigFile::parse(r#"{"train": {"epochs": 5, "batch-size": 2, "resume": true, "inputs": ["a"]}}"#).unwrap();
        let cli = Args { epochs: Some(9), ..Args::default() };
        let out = f.layer("train", &cli).unwrap();
        assert_eq!(out, Args { epochs: Some(9), batch_size: Some(2), resume: true, inputs: vec!["a".into()] });
        assert_eq!(ConfigFile::empty().layer("train", &cli).unwrap(), cli);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(ConfigFile::parse(r#"{"trian": {}}"#).is_err());
        assert!(ConfigFile::parse(r#"[1]"#).is_err());
        assert!(ConfigFile::parse(r#"{"train": 3}"#).is_err());
        let f = ConfigFile::parse(r#"{"train": {"epoch": 5}}"#).unwrap();
        assert!(f.layer("train", &Args::default()).is_err());
    }
}
