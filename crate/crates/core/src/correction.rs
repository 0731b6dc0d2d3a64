//! Bob's correction rules, registered by name and picked at runtime.
//!
//! * `parity`: key `(MR_B ⊕ chained parity, XOR of minus outcomes)` through
//!   [`correction_lookup`]. The default, and the only rule that is correct on
//!   every branch.
//! * `parity-mrb-blind`: the same table keyed on the chained parity alone.
//!   Correct only on `MR_B = 0` branches.
//! * `sabotage`: `parity` with σx and iσy swapped. Negative control for the
//!   verifier.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::protocol::{correction_lookup, BobRecord, CorrectionKey};
use crate::statevector::Pauli;

pub trait CorrectionStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn choose(&self, record: &BobRecord) -> Pauli;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParityTable;

impl CorrectionStrategy for ParityTable {
    fn name(&self) -> &'static str {
        "parity"
    }

    fn description(&self) -> &'static str {
        "type parity MR_B xor chained C, minus parity from X outcomes"
    }

    fn choose(&self, record: &BobRecord) -> Pauli {
        correction_lookup(CorrectionKey::from_record(record))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MrbBlindTable;

impl CorrectionStrategy for MrbBlindTable {
    fn name(&self) -> &'static str {
        "parity-mrb-blind"
    }

    fn description(&self) -> &'static str {
        "type parity from chained C only, ignoring MR_B"
    }

    fn choose(&self, record: &BobRecord) -> Pauli {
        correction_lookup(CorrectionKey::new(
            record.chained_parity,
            record.minus_parity(),
        ))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sabotaged;

impl CorrectionStrategy for Sabotaged {
    fn name(&self) -> &'static str {
        "sabotage"
    }

    fn description(&self) -> &'static str {
        "parity table with sigma_x and i*sigma_y swapped"
    }

    fn choose(&self, record: &BobRecord) -> Pauli {
        match ParityTable.choose(record) {
            Pauli::X => Pauli::IY,
            Pauli::IY => Pauli::X,
            other => other,
        }
    }
}

pub const DEFAULT_STRATEGY: &str = "parity";

pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Arc<dyn CorrectionStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, strategy: Arc<dyn CorrectionStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CorrectionStrategy>> {
        self.strategies
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.strategies.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn CorrectionStrategy>> {
        self.strategies.values()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(ParityTable));
        registry.register(Arc::new(MrbBlindTable));
        registry.register(Arc::new(Sabotaged));
        registry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::Outcome;

    fn record(mr_b: u8, chained: u8, reports: &[Outcome]) -> BobRecord {
        BobRecord {
            mr_b,
            chained_parity: chained,
            reports: reports.to_vec(),
        }
    }

    #[test]
    fn builtins_are_registered() {
        let reg = StrategyRegistry::default();
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            ["parity", "parity-mrb-blind", "sabotage"]
        );
        assert_eq!(reg.get(DEFAULT_STRATEGY).unwrap().name(), "parity");
        assert_eq!(
            reg.get("nope").err(),
            Some(Error::UnknownStrategy("nope".into()))
        );
    }

    #[test]
    fn parity_folds_in_mr_b() {
        let r = record(1, 0, &[Outcome::Plus]);
        assert_eq!(ParityTable.choose(&r), Pauli::X);
        assert_eq!(MrbBlindTable.choose(&r), Pauli::I);
        let r = record(0, 1, &[Outcome::Plus, Outcome::Minus]);
        assert_eq!(ParityTable.choose(&r), Pauli::IY);
        assert_eq!(MrbBlindTable.choose(&r), Pauli::IY);
        assert_eq!(Sabotaged.choose(&r), Pauli::X);
    }
}
