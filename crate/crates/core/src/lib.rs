//! Tanker water distribution planning: scenario files, the planning MILP,
//! plan reports and the command-line front end.

pub mod cli;
pub mod model;
pub mod report;
pub mod scenario;
