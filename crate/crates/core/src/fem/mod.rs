//! Reference elements, quadrature, degree-of-freedom numbering and cell maps.

mod dofs;
mod element;
mod mapping;
mod quadrature;

pub use dofs::{distribute_dofs, DofHandler};
pub use element::{Family, ReferenceElement};
pub use mapping::{
    cell_map, map_point, mapping_jacobian, reference_point, CellMap, GeometryOrder, MappingConfig,
    MappingKind,
};
pub use quadrature::{gauss_legendre_1d, gauss_rule, QuadratureRule};
