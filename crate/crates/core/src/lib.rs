//! Collaborative part-placement assistant: a 3D board, an instruction
//! grammar, a clarifying dialogue pipeline, and a library of named shapes.

pub mod eval;
pub mod executor;
pub mod gateway;
pub mod grammar;
pub mod grid;
pub mod memory;
pub mod pipeline;
pub mod sample;
pub mod session;
