//! Boundary-layer profiles on the two-scale grid (t, x1, x2, X).

pub mod cascade;
pub mod fast_grid;
pub mod field;
pub mod order0;
pub mod regular;
pub mod transport;

pub use cascade::{extract_cascade_source, integrate_nonpolarized, solve_order_one, ExtractionOptions, OrderOneInit, OrderOneReport, PartialExpansion};
pub use fast_grid::{FastGrid, InterpKind};
pub use field::{LayerField, LayerPart, ProfileGrid, ProfileSet, RegularField};
pub use order0::{polarize_leading, solve_entropy_layer, solve_tangential_layer, RegularVelocity};
pub use regular::{solve_regular_corrector, RegularForcing, RegularOptions, RegularSolution};
pub use transport::{solve_transport, TransportOptions};
