//! Rule-based verdict for a whole chain.

use crate::chain::ReasoningChain;
use crate::model::Verdict;

/// Refuted if any subclaim block is refuted, Supported only if all are.
pub fn judge(chain: &ReasoningChain) -> Verdict {
    judge_statuses(chain.statuses())
}

pub fn judge_statuses<I: IntoIterator<Item = Verdict>>(statuses: I) -> Verdict {
    if statuses.into_iter().any(|s| s == Verdict::Refuted) {
        Verdict::Refuted
    } else {
        Verdict::Supported
    }
}
