//! A verification task: signature, definitions, goal and optional contracts.

use crate::contracts::Contract;
use crate::defs::DefSet;
use crate::expr::Expr;
use crate::sig::Signature;
use crate::skolem::short_hash;

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub sig: Signature,
    pub defs: DefSet,
    pub goal: Expr,
    pub contracts: Vec<Contract>,
}

impl Task {
    pub fn new(sig: Signature, defs: DefSet, goal: Expr) -> Self {
        Task {
            sig,
            defs,
            goal,
            contracts: Vec::new(),
        }
    }

    /// Short content hash of the printed task; used to name skolem constants.
    pub fn hash(&self) -> String {
        short_hash(&crate::syntax::print_task(self))
    }

    pub fn contract(&self, symbol: &str) -> Option<&Contract> {
        self.contracts.iter().find(|c| c.symbol == symbol)
    }
}
