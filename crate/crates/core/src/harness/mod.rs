//! Brute-force verification of mechanisms and executable canonicalization
//! of finite strategy profiles.

mod ic;
mod profile;

pub use ic::{check_auction_ic, check_ic, check_mechanism_ic, AuctionIcReport, AuthSource, IcReport};
pub use profile::{
    canonicalize, exhaustive_deviation_search, random_equilibrium_profile, retarget_tests, seeded_equilibrium_profile,
    CanonicalReport, DeviationReport, FiniteProfile, ProfileShape,
};
