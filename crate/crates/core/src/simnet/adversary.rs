//! Scripted adversaries.
//!
//! A script names the corrupted players and one strategy. Corrupted players
//! follow the protocol except at the points their strategy describes, where
//! they act with full knowledge of every corrupted player's state.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::structures::PlayerSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
    #[error("strategy '{strategy}' takes no parameter '{param}'")]
    UnknownParam {
        strategy: &'static str,
        param: String,
    },
    #[error("bad value '{value}' for parameter '{param}'")]
    BadParam { param: String, value: String },
    #[error("malformed parameter list '{0}'")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Honest,
    /// Deals one perturbed row (+1) in every weak sharing it deals.
    InconsistentWssDealer,
    /// Deals inconsistent top-level shares and tries to guess every coin.
    InconsistentVssDealer,
    /// Authenticates `s + 1` instead of its share encoding.
    ForgingIntermediary,
    /// Commits to `mu * nu + 1` during multiplication.
    WrongProductDealer,
    /// Refuses to convert its weak sharings into verifiable ones.
    RefuseConversion,
    /// Opens its weak sharings as `a + 1`.
    LyingOpener,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Honest,
        Strategy::InconsistentWssDealer,
        Strategy::InconsistentVssDealer,
        Strategy::ForgingIntermediary,
        Strategy::WrongProductDealer,
        Strategy::RefuseConversion,
        Strategy::LyingOpener,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Honest => "honest",
            Strategy::InconsistentWssDealer => "inconsistent_wss_dealer",
            Strategy::InconsistentVssDealer => "inconsistent_vss_dealer",
            Strategy::ForgingIntermediary => "forging_intermediary",
            Strategy::WrongProductDealer => "wrong_product_dealer",
            Strategy::RefuseConversion => "refuse_conversion",
            Strategy::LyingOpener => "lying_opener",
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            Strategy::InconsistentWssDealer | Strategy::InconsistentVssDealer => &["row"],
            Strategy::ForgingIntermediary => &["mode"],
            Strategy::WrongProductDealer => &["cp"],
            _ => &[],
        }
    }

    fn check_param(self, key: &str, value: &str) -> Result<(), AdversaryError> {
        let ok = match key {
            "row" => value.parse::<usize>().is_ok(),
            "mode" => matches!(value, "shift" | "guess"),
            "cp" => matches!(value, "honest" | "shift" | "guess"),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(AdversaryError::BadParam {
                param: key.to_string(),
                value: value.to_string(),
            })
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| AdversaryError::UnknownStrategy(s.to_string()))
    }
}

/// How a dishonest product prover picks its blinding product `c'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductBlinding {
    /// `c' = a b'`: caught by the first honest tails.
    Honest,
    /// `c' = a b' - delta`: caught by the first honest heads.
    Shift,
    /// Guess each coin and prepare for it.
    Guess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryScript {
    pub corrupt: PlayerSet,
    pub strategy: Strategy,
    pub params: BTreeMap<String, String>,
    pub rushing: bool,
}

impl Default for AdversaryScript {
    fn default() -> Self {
        AdversaryScript::honest()
    }
}

impl AdversaryScript {
    pub fn honest() -> Self {
        AdversaryScript {
            corrupt: PlayerSet::EMPTY,
            strategy: Strategy::Honest,
            params: BTreeMap::new(),
            rushing: true,
        }
    }

    pub fn new(corrupt: PlayerSet, strategy: Strategy) -> Self {
        AdversaryScript {
            corrupt,
            strategy,
            params: BTreeMap::new(),
            rushing: true,
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Result<Self, AdversaryError> {
        if !self.strategy.params().contains(&key) {
            return Err(AdversaryError::UnknownParam {
                strategy: self.strategy.name(),
                param: key.to_string(),
            });
        }
        self.strategy.check_param(key, value)?;
        self.params.insert(key.to_string(), value.to_string());
        Ok(self)
    }

    /// Parses `name` or `name:key=value,key=value`.
    pub fn parse_strategy(spec: &str, corrupt: PlayerSet) -> Result<Self, AdversaryError> {
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (spec, None),
        };
        let mut script = AdversaryScript::new(corrupt, name.parse()?);
        if let Some(rest) = rest {
            for item in rest.split(',').filter(|s| !s.is_empty()) {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| AdversaryError::Malformed(rest.to_string()))?;
                script = script.with_param(k.trim(), v.trim())?;
            }
        }
        Ok(script)
    }

    pub fn is_corrupt(&self, p: usize) -> bool {
        self.corrupt.contains(p)
    }

    /// Whether `p` deviates according to `strategy`.
    pub fn acts(&self, p: usize, strategy: Strategy) -> bool {
        self.strategy == strategy && self.corrupt.contains(p)
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    /// Row to perturb, if given; otherwise the dealer's choice (its last row).
    pub fn row(&self) -> Option<usize> {
        self.param("row").and_then(|v| v.parse().ok())
    }

    pub fn forges_by_guessing(&self) -> bool {
        self.param("mode") == Some("guess")
    }

    pub fn product_blinding(&self) -> ProductBlinding {
        match self.param("cp") {
            Some("shift") => ProductBlinding::Shift,
            Some("guess") => ProductBlinding::Guess,
            _ => ProductBlinding::Honest,
        }
    }
}

impl fmt::Display for AdversaryScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.strategy)?;
        let mut sep = ':';
        for (k, v) in &self.params {
            write!(f, "{sep}{k}={v}")?;
            sep = ',';
        }
        write!(f, " corrupt={}", self.corrupt)?;
        if !self.rushing {
            write!(f, " non-rushing")?;
        }
        Ok(())
    }
}
