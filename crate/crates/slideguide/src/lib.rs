//! Command-line tool and HTTP service for sketch-based slide design
//! guidance, on top of `slideguide-core`.

pub mod cli;
pub mod service;
