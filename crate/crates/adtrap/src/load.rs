use std::fs;
use std::path::Path;

use adtrap_core::simulation::{Scenario, ScenarioDoc};
use serde_path_to_error::Segment;

use crate::error::CliError;

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses and validates a scenario document. `path` only labels errors.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    Scenario::from_doc(doc).map_err(|source| CliError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_carry_a_pointer() {
        let text =
            r#"{"spec_version": 1, "horizon_s": 10, "users": [{"id": "u", "cookie_id": 5}]}"#;
        let err = parse_scenario(text, Path::new("s.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("s.json: /users/0/cookie_id: "), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn escaped_pointer_segments() {
        let text = r#"{"spec_version": 1, "horizon_s": 10, "a/b": 1}"#;
        let err = parse_scenario(text, Path::new("s.json")).unwrap_err();
        assert!(err.to_string().contains("unknown field `a/b`"), "{err}");
    }

    #[test]
    fn missing_file_is_io() {
        let err = load_scenario(Path::new("/nonexistent/scenario.json")).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
