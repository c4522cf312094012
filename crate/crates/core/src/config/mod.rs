//! Parameter files and the data expression language.

mod expr;
mod params;

pub use expr::{evaluate, parse_constants, parse_expression, BinaryOp, Expression, Function, Node};
pub use params::{
    parse_parameters, FunctionSpec, Parameters, ParsedParameters, PressureFamily, RingGeometry,
    FUNCTION_SECTIONS, RING_SECTION,
};
