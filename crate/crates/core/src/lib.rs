//! Numerical engine for two-dimensional Yang-Mills theory with classical
//! structure groups: heat-kernel character sums, partition functions and
//! their large-rank limits, Wilson-loop moments, holonomy densities, and
//! stochastic samplers of the discrete Yang-Mills measure.

pub mod charcalc;
pub mod error;
pub mod maps;
pub mod partition;
pub mod qseries;
pub mod sampler;
mod tails;
pub mod weights;
pub mod wilson;

pub use error::{Error, MapError, Result};
pub use charcalc::{
    char_eval, heat_kernel_eval, pieri, torus_element, trace_power, weyl_integral, CharValue, CharacterExpansion,
    ClassValue, HeatKernel, ConjugacyClass, RANK_CAP,
};
pub use partition::{
    dk_free_energy_weak, limit_gap, partition_boundary, partition_function, witten_zeta, PartitionValue, TailMode, TruncationPolicy,
};
pub use qseries::{bessel_j1_paper, euler_phi, jacobi_theta, limit_table, q_of_area, SeriesValue};
pub use weights::{
    casimir, casimir_exact, enumerate_dominant, make_group, weight_stats, weyl_dim, DominantWeight, Family,
    GroupDescriptor, WeightStats,
};
pub use wilson::{
    disc_density_ratio, mf_plane_power, mf_sphere_power, nonsep_density, sep_density, torus_moments, LoopKind, LoopSpec,
    TorusMoments,
};
pub use maps::{
    ds_weight, extract_disc, validate_and_genus, AreaWeightedMap, EdgeConfiguration, ExtractedDisc, LoopWord, SignedEdge,
};
pub use sampler::{
    brownian_sample, haar_sample, mcmc_ym, plane_wilson_mc, LoopRecipe, McEstimate, McmcParams, McmcResult, RngStream,
};
