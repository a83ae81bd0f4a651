pub mod error;
pub mod pipelines;
pub mod rep;
pub mod report;
pub mod scenario;
pub mod faults;
pub mod cli;
