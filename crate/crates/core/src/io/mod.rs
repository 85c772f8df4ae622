//! Generators, the JSON file format and SVG rendering.

pub mod format;
pub mod generate;
pub mod svg;
