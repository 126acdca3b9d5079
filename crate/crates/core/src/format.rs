//! The on-disk game description (JSON syntax).
//!
//! ```json
//! {
//!   "interval": [0, 1],
//!   "states": ["s", "t"],
//!   "variables": {"r": {"s": 1, "t": 0}},
//!   "moves1": {"s": ["a", "b"], "t": ["a"]},
//!   "moves2": {},
//!   "trans": [
//!     {"state": "s", "m1": "a", "dist": {"t": 1}},
//!     {"state": "s", "m1": "b", "dist": {"s": 0.5, "t": 0.5}},
//!     {"state": "t", "m1": "a", "dist": {"t": 1}}
//!   ]
//! }
//! ```
//!
//! States missing from `moves1`/`moves2` get the single placeholder move
//! [`NO_CHOICE`]; `m1`/`m2` default to it in transition entries as well.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Name of the implicit move of a player without a choice.
pub const NO_CHOICE: &str = "-";

fn no_choice() -> String {
    NO_CHOICE.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub interval: [f64; 2],
    pub states: Vec<String>,
    #[serde(default)]
    pub variables: IndexMap<String, IndexMap<String, f64>>,
    #[serde(default)]
    pub moves1: IndexMap<String, Vec<String>>,
    #[serde(default)]
    pub moves2: IndexMap<String, Vec<String>>,
    pub trans: Vec<TransEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransEntry {
    pub state: String,
    #[serde(default = "no_choice")]
    pub m1: String,
    #[serde(default = "no_choice")]
    pub m2: String,
    pub dist: IndexMap<String, f64>,
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game files always serialize")
    }
}
