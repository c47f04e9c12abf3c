//! QUBO formulations for keypoint extraction and matching, with classical
//! solvers, classical and simulated quantum kernels, and an image pipeline.

pub mod clustering;
pub mod kernels;
pub mod matching;
pub mod quantum;
pub mod qubo;
pub mod solvers;
pub mod pipeline;
