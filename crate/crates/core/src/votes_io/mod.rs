//! Vote data, run configuration and posterior draw tables.

mod config;
mod draws;
mod votes;

pub use config::{
    load_config, parse_config_str, AnchorConstraint, HyperPrior, PriorSimSettings, RunConfig, SamplerSettings, Sign,
};
pub use draws::{chain_dir, read_chains, read_draws, write_draws, MANIFEST_FILE};
pub use votes::{
    label_cmp, parse_votes, parse_votes_str, write_votes, CaseVote, UnitVote, Vote, VoteDataset, VoteRecord,
    VOTES_HEADER,
};
