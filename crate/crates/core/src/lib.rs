pub mod case_io;
pub mod dlr;
pub mod formulation;
pub mod network;
pub mod relax;
pub mod scenario;
pub mod solver;
