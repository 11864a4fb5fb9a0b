//! The built-in task roster.

use crate::error::{Error, Result};
use crate::maps::TaskSpec;

pub const RGB: &str = "rgb";
pub const GRAYSCALE: &str = "grayscale";
pub const HSV: &str = "hsv";
pub const DEPTH: &str = "depth";
pub const NORMALS: &str = "normals";
pub const EDGES_SMALL: &str = "edges_small";
pub const EDGES_MEDIUM: &str = "edges_medium";
pub const EDGES_LARGE: &str = "edges_large";
pub const HALFTONE: &str = "halftone";
pub const SEG: &str = "seg";

pub const ALL: [&str; 10] = [
    RGB,
    GRAYSCALE,
    HSV,
    DEPTH,
    NORMALS,
    EDGES_SMALL,
    EDGES_MEDIUM,
    EDGES_LARGE,
    HALFTONE,
    SEG,
];

/// Desk-scale default graph: one node per task family.
pub const DEFAULT_ROSTER: [&str; 8] = [
    RGB,
    GRAYSCALE,
    HSV,
    DEPTH,
    NORMALS,
    EDGES_SMALL,
    EDGES_MEDIUM,
    SEG,
];

/// Tasks computed directly from the rgb image.
pub fn is_derived(name: &str) -> bool {
    matches!(
        name,
        GRAYSCALE | HSV | EDGES_SMALL | EDGES_MEDIUM | EDGES_LARGE | HALFTONE
    )
}

/// Shape of each built-in task given the scene's class count and normals
/// encoding.
pub fn builtin(name: &str, class_count: usize, normals_channels: usize) -> Result<TaskSpec> {
    let spec = match name {
        RGB | HSV => TaskSpec::regression(name, 3),
        GRAYSCALE | DEPTH | EDGES_SMALL | EDGES_MEDIUM | EDGES_LARGE => {
            TaskSpec::regression(name, 1)
        }
        NORMALS => TaskSpec::regression(name, normals_channels),
        HALFTONE => TaskSpec::classification(name, 2),
        SEG => TaskSpec::new(name, class_count, crate::maps::TaskKind::Classification)?,
        other => return Err(Error::Config(format!("unknown task `{other}`"))),
    };
    Ok(spec)
}

/// Resolve a roster of names, rejecting duplicates and requiring rgb.
pub fn roster(names: &[String], class_count: usize, normals_channels: usize) -> Result<Vec<TaskSpec>> {
    let mut out: Vec<TaskSpec> = Vec::with_capacity(names.len());
    for n in names {
        if out.iter().any(|t| &t.name == n) {
            return Err(Error::Config(format!("task `{n}` listed twice")));
        }
        out.push(builtin(n, class_count, normals_channels)?);
    }
    if !out.iter().any(|t| t.name == RGB) {
        return Err(Error::Config("task roster must include rgb".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_rules() {
        let names: Vec<String> = DEFAULT_ROSTER.iter().map(|s| s.to_string()).collect();
        let tasks = roster(&names, 6, 3).unwrap();
        assert_eq!(tasks.len(), 8);
        assert_eq!(tasks.iter().find(|t| t.name == SEG).unwrap().channels, 6);

        let dup = vec!["rgb".to_string(), "depth".into(), "depth".into()];
        assert!(roster(&dup, 6, 3).is_err());
        assert!(roster(&["depth".to_string()], 6, 3).is_err());
        assert!(builtin("cartoon", 6, 3).is_err());
    }
}
