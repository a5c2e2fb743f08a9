//! Size limits shared by the library and the command-line front end.

use thiserror::Error;

pub const DEPTH_ENV: &str = "TWISTCB_MAX_DEPTH";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_p: u32,
    pub max_rank: usize,
    pub max_level: u32,
    pub max_depth: usize,
    pub max_irrep_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_p: 7, max_rank: 8, max_level: 3, max_depth: 6, max_irrep_dim: 4096 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LimitError {
    #[error("p = {0} exceeds the configured bound {1}")]
    Prime(u32, u32),
    #[error("level {0} exceeds the configured bound {1}")]
    Level(u32, u32),
    #[error("depth {0} exceeds the configured bound {1}")]
    Depth(usize, usize),
    #[error("rank {0} exceeds the configured bound {1}")]
    Rank(usize, usize),
    #[error("invalid value {1:?} for {0}")]
    Env(&'static str, String),
}

impl Limits {
    /// Default limits with the depth ceiling taken from `TWISTCB_MAX_DEPTH`
    /// when that variable is set.
    pub fn from_env() -> Result<Self, LimitError> {
        let mut l = Limits::default();
        if let Ok(v) = std::env::var(DEPTH_ENV) {
            l.max_depth = v.trim().parse().map_err(|_| LimitError::Env(DEPTH_ENV, v.clone()))?;
        }
        Ok(l)
    }

    pub fn check_p(&self, p: u32) -> Result<(), LimitError> {
        if p > self.max_p {
            return Err(LimitError::Prime(p, self.max_p));
        }
        Ok(())
    }

    pub fn check_level(&self, level: u32) -> Result<(), LimitError> {
        if level > self.max_level {
            return Err(LimitError::Level(level, self.max_level));
        }
        Ok(())
    }

    pub fn check_depth(&self, depth: usize) -> Result<(), LimitError> {
        if depth > self.max_depth {
            return Err(LimitError::Depth(depth, self.max_depth));
        }
        Ok(())
    }

    pub fn check_rank(&self, rank: usize) -> Result<(), LimitError> {
        if rank > self.max_rank {
            return Err(LimitError::Rank(rank, self.max_rank));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_bounds() {
        let l = Limits::default();
        assert_eq!((l.max_p, l.max_level, l.max_depth), (7, 3, 6));
        assert!(l.check_p(7).is_ok());
        assert_eq!(l.check_p(11), Err(LimitError::Prime(11, 7)));
        assert_eq!(l.check_depth(7), Err(LimitError::Depth(7, 6)));
    }
}
