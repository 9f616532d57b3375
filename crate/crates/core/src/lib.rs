//! Non-negative orthogonal Grassmannian cells, their BCFW arc-sequences and
//! twistor-solutions, and the numerical checks built on them.

pub mod dd;
pub mod exactmat;
pub mod involution;
pub mod moves;
pub mod ampl;
pub mod twistor_expr;
pub mod bcfw;
pub mod tlpos;
pub mod verify;
