//! Field species, monomial keys, the local polynomial basis and the
//! covariant representatives `P_hat`.

mod enumerate;
mod key;
mod phat;
mod polynomial;
mod species;
mod symmetry;

pub use enumerate::{classify, enumerate_v_bar_plus, enumerate_v_plus, forward_indices, Relevance};
pub use key::{graded_sort, Factor, MonomialKey};
pub use phat::{PHatStrategy, PHatTable};
pub use polynomial::FieldPolynomial;
pub use species::{Component, ScalingDimension, SpeciesSpec, SpeciesTable, Statistics};
pub use symmetry::{
    laplacian_p, leading_symbol, orbit_sum, r1_normal_form, reflection_average, reflection_sign, sigma_act,
    sigma_act_key, symmetrise_p, vanishes_mod_higher,
};

#[cfg(test)]
mod tests;
