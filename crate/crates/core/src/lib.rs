//! Discrete volume-preserving mean curvature flow on the flat torus `T²`.
//!
//! Each step of the flow is an Almgren–Taylor–Wang minimizing movement
//! `E_{n+1} ∈ argmin { P(F) + (1/h) ∫_F sd_{E_n} : |F| = |E_n| }`, solved on a periodic
//! grid with a calibrated Cauchy–Crofton perimeter and exact max-flow. Around it sit the
//! diagnostics the long-time theory makes predictions about, a spectral toolkit for normal
//! deformations of discs and lamellae, and a classifier for limit shapes.

pub mod alpha;
pub mod atw;
pub mod classify;
pub mod deform;
pub mod distance;
pub mod error;
pub mod flow;
pub mod grid;
pub mod io;
pub mod maxflow;
pub mod residual;
pub mod shapes;
pub mod stencil;
pub mod topology;

pub use alpha::{alpha_distance, AlphaDistance, AlphaReference};
pub use atw::{
    constrained_cut, constrained_cut_warm, prescribed_cut, prescribed_cut_with, step, step_warm, ConstrainedCut, EnergyModel, Selection,
    StepConfig, StepReport, TieRule, WarmStart,
};
pub use classify::{classify, classify_with, ClassifierConfig, LimitClass, LimitVariant};
pub use distance::{boundary_distance, dissipation, hausdorff_boundary, signed_distance};
pub use error::{Error, Result};
pub use flow::{
    check_sequence_lemma, check_telescoping, fit_rate, run, run_with, stationarity, FlowTrace, RateFit, SequenceLemma,
    TraceRow,
};
pub use grid::{PeriodicGrid, ScalarField, TorusSet};
pub use residual::{euler_lagrange_residual, ResidualStats};
pub use shapes::{
    counterexample_set, lamella_slopes, perturb, perturb_with_budget, random_set, rasterize, Counterexample, ShapeKind, ShapeSpec,
};
pub use stencil::{perimeter, Stencil};
pub use topology::{connected_components, winding, wraps, Connectivity, Winding};
