use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Architectural layer a constraint, finding or risk belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Business,
    Design,
    Implementation,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Business, Layer::Design, Layer::Implementation];

    /// Column abbreviation used in risk tables (B, S, I).
    pub fn abbreviation(self) -> char {
        match self {
            Layer::Business => 'B',
            Layer::Design => 'S',
            Layer::Implementation => 'I',
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Business => "business",
            Layer::Design => "design",
            Layer::Implementation => "implementation",
        })
    }
}

/// A set of layers, serialized as a sorted list.
pub type LayerSet = BTreeSet<Layer>;
