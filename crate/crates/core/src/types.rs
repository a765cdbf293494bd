//! Split indices, configuration choices and deployed configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partition point of the f1 -> f2 -> f3 chain between vDU and vCU.
/// `S1` keeps everything at the vDU, `S4` centralizes everything at the vCU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    S1,
    S2,
    S3,
    S4,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::S1, Split::S2, Split::S3, Split::S4];

    /// 1-based index.
    pub fn index(self) -> usize {
        match self {
            Split::S1 => 1,
            Split::S2 => 2,
            Split::S3 => 3,
            Split::S4 => 4,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Split::S1),
            2 => Ok(Split::S2),
            3 => Ok(Split::S3),
            4 => Ok(Split::S4),
            other => Err(Error::UnknownSplit(other)),
        }
    }

    /// Zero-based position, for indexing per-split tables.
    pub fn slot(self) -> usize {
        self.index() - 1
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "S{}", self.index())
    }
}

/// The configuration decision `o`: keep everything as is, or (re)deploy a split
/// with a fresh allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfigChoice {
    Keep,
    Deploy(Split),
}

impl ConfigChoice {
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        match self {
            ConfigChoice::Keep => 0,
            ConfigChoice::Deploy(s) => s.index(),
        }
    }

    pub fn from_index(o: usize) -> Result<Self> {
        match o {
            0 => Ok(ConfigChoice::Keep),
            1..=4 => Ok(ConfigChoice::Deploy(Split::from_index(o)?)),
            other => Err(Error::UnknownConfiguration(other)),
        }
    }

    pub fn is_reconfiguration(self) -> bool {
        !matches!(self, ConfigChoice::Keep)
    }
}

/// Split selected under configuration `o` given the previously deployed split.
pub fn determine_split(choice: ConfigChoice, previous: Split) -> Split {
    match choice {
        ConfigChoice::Keep => previous,
        ConfigChoice::Deploy(s) => s,
    }
}

/// What is currently running: split plus vDU/vCU allocations in reference cores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub split: Split,
    pub vdu: f64,
    pub vcu: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determine_split_follows_choice() {
        assert_eq!(determine_split(ConfigChoice::Deploy(Split::S3), Split::S1), Split::S3);
        assert_eq!(determine_split(ConfigChoice::Keep, Split::S2), Split::S2);
        assert_eq!(determine_split(ConfigChoice::Deploy(Split::S4), Split::S4), Split::S4);
    }

    #[test]
    fn index_round_trip() {
        for o in 0..ConfigChoice::COUNT {
            assert_eq!(ConfigChoice::from_index(o).unwrap().index(), o);
        }
        assert!(ConfigChoice::from_index(5).is_err());
        assert!(Split::from_index(0).is_err());
    }
}
