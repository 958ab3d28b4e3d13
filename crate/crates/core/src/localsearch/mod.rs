mod invariants;
mod matching;
mod state;

pub use invariants::{check_invariants, signature, InvariantCheck, InvariantReport};
pub use matching::{MatchedEdge, PartialMatching};
pub use state::{
    alternate_along, extend_matching, init_state, ExtendError, ExtendOptions, ExtendOutcome, Layer,
    SearchState,
};
