//! Model checking of strategic hyperproperties `[<<A1>>p1 ... <<Ak>>pk] phi`
//! over explicit game structures, by reduction to parity games.

pub mod formula;
pub mod imp;
pub mod structures;
pub mod arena;
pub mod ltl2dpa;
pub mod props;
pub mod solver;
