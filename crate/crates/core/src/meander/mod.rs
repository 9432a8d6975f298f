//! The telegraph meander: the telegraph process started with velocity `+c`
//! and conditioned on `min_{s<=t} T(s) >= 0`.

mod charfn;
mod conditional;
mod endpoint;
mod fdd;
mod moments;

pub use charfn::{
    cosine_integral, g_integral, g_integral_direct, meander_charfn, meander_charfn_continued,
    FrequencyArg,
};
pub use conditional::{
    cond_meander_cdf, cond_meander_density, cond_meander_law, cond_meander_mode, cond_meander_moment,
    cond_meander_weights, dominance_scan, positivity_prob_exact, positivity_prob_given_n,
};
pub use endpoint::{
    meander_atom, meander_cdf, meander_density, meander_density_via_derivative, meander_endpoint_law,
};
pub use fdd::{fdd_component, fdd_component_with, fdd_density, FddQuery, Segment, MAX_FDD_POINTS};
pub use moments::{
    meander_mean, meander_moment, meander_variance, moment_integral_identity, MomentOrder,
};
