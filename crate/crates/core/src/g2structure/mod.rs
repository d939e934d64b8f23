//! Metrics, orbits and Hodge stars of stable 3-forms and 4-forms; Cartan involutions.

pub mod cartan;
pub mod metric;
pub mod models;
pub mod structure;

pub use cartan::{cartan_check, mat_exp, orbit_jacobian, stabilizer_algebra, CartanInvolution};
pub use metric::{
    bilinear_3, bilinear_4, hodge_star, metric_from_3form, metric_from_4form_closed, top_pairing, voldensity_3,
    voldensity_4, Metric7,
};
pub use structure::{
    classify_3, classify_4, classify_and_metric_3, metric_from_4form, structure_from_4form_closed, FixedPointOptions,
    G2Structure, Orbit, Recovery, Seed,
};
