//! Joint optimization of active antenna counts and downlink transmit powers
//! in single- and multi-cell massive MIMO systems.
//!
//! A base station that switches off part of its array saves circuit power but
//! must transmit harder to keep every user at its SINR target; this crate
//! solves for the sweet spot. The pieces:
//!
//! * [`scenario`] generates cell layouts, large-scale fading coefficients, and
//!   channel-estimate qualities for a square grid of cells.
//! * [`linalg`] holds the small dense-matrix kernel the solvers share:
//!   spectral radii of nonnegative matrices, M-matrix feasibility tests, and
//!   rank-one resolvents.
//! * [`singlecell`] gives closed-form power minimization and antenna-count
//!   selection for one cell under MRT or ZF precoding.
//! * [`multicell`] covers coordinated multi-cell systems: feasibility
//!   diagnosis under pilot contamination, fixed-antenna power minimization,
//!   max-min SINR balancing, and a geometric-program relaxation with rounding
//!   for the joint antenna/power problem.
//! * [`gp`] is a self-contained geometric-program solver (log-space barrier
//!   method) used by the multi-cell relaxation.
//!
//! Powers and fading coefficients are carried in noise-normalized units: a
//! transmit power of `x` means `x` times the receiver noise power, and large
//! scale fading is pathloss divided by noise power. [`scenario::build_instance`]
//! performs that normalization from watt-scale inputs.

pub mod gp;
pub mod linalg;
pub mod multicell;
pub mod scenario;
pub mod singlecell;
