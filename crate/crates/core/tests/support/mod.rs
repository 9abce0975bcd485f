//! Test-only reference implementations (`simplex`, `oracle`) that share no
//! code with the library's formulation or solver, and the harness (`small`)
//! that pits the two against each other.

#![allow(dead_code)]

pub mod checks;
pub mod oracle;
pub mod simplex;
pub mod small;
