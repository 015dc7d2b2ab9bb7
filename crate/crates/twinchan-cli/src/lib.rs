//! Implementation crate behind the `twinchan` binary: code-spec parsing,
//! the jamming demonstration pipeline, run manifests, SVG rendering, and
//! the reproduction harness the acceptance suite drives.

pub mod codespec;
pub mod jamdemo;
pub mod manifest;
pub mod reproduce;
pub mod scenario_spec;
pub mod svg;
