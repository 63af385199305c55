//! Result rows for property-check suites.

use serde::{Deserialize, Serialize};

/// One checked property on one grid line. `counterexample` carries the
/// first violation found, already formatted, so a failing report is
/// actionable without re-running the suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub property: String,
    pub grid_line: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl PropertyOutcome {
    pub fn pass(property: &str, grid_line: String) -> Self {
        PropertyOutcome { property: property.into(), grid_line, pass: true, counterexample: None }
    }

    pub fn fail(property: &str, grid_line: String, counterexample: String) -> Self {
        PropertyOutcome {
            property: property.into(),
            grid_line,
            pass: false,
            counterexample: Some(counterexample),
        }
    }
}
