extern crate self as wmtr_core;

pub mod events;
pub mod porder;
pub mod program;
pub mod object;
pub mod memmodel;
pub mod refine;
pub mod cli;
