//! Network files: JSON with a schema-version field.

use crate::error::Error;
use crate::transport::{Generator, Line, NetworkModel};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    schema_version: u32,
    nodes: Vec<String>,
    generators: Vec<Generator>,
    lines: Vec<Line>,
}

/// Load and validate a network description.
pub fn load_network(path: &Path) -> Result<NetworkModel> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: NetworkFile = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::parse(
            path.display().to_string(),
            format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            ),
        ));
    }
    let net = NetworkModel {
        nodes: file.nodes,
        generators: file.generators,
        lines: file.lines,
    };
    net.validate()?;
    Ok(net)
}

/// Write a network description.
pub fn save_network(path: &Path, net: &NetworkModel) -> Result<()> {
    net.validate()?;
    let file = NetworkFile {
        schema_version: SCHEMA_VERSION,
        nodes: net.nodes.clone(),
        generators: net.generators.clone(),
        lines: net.lines.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}
