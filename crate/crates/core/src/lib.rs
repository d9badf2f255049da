//! Post-enrolment course timetabling: instance model and I/O, preprocessing,
//! incremental evaluation, a simulated annealing solver, an independent
//! validator and a benchmark harness.

pub mod annealer;
pub mod bench;
pub mod evaluation;
pub mod instance_io;
pub mod model;
pub mod preprocess;
pub mod search;
pub mod synthetic;
pub mod validator;
