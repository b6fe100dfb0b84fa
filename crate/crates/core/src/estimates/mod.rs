//! Auditor for the a-priori energy inequalities and the structural properties
//! of the damping term.

mod identities;
mod ledger;
mod lemmas;

pub use identities::{
    verify_cprime_positivity, verify_damping_identity, verify_monotonicity, CprimePositivity, DampingIdentity,
    Monotonicity,
};
pub use ledger::{build_ledger, EnergyLedger};
pub use lemmas::{
    check_all, check_lemma, first_mean_value_index, second_mean_value_index, verdicts_to_csv, AuditConfig, LemmaId,
    LemmaVerdict, Outcome,
};
