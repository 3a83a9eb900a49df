//! Channel–state duality: Choi states, vectorisation, Kraus extraction,
//! dilations, superchannels and combs.

pub mod choi;
pub mod dilation;
pub mod superchannel;

pub use choi::{
    apply_via_choi, choi_of_channel, ebit, kraus_from_choi, multipartite_ebit, reversal, tilde,
    vectorize, vectorize_on_tail, ChoiState,
};
pub use dilation::{dilate, Dilation};
pub use superchannel::{
    apply_comb, apply_superchannel, apply_superchannel_choi, Comb, Superchannel,
};
