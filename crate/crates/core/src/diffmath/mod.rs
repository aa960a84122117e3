//! Dense matrices, a reverse-mode differentiation tape with second-order support, and Adam.

mod adam;
mod matrix;
mod tape;

pub use adam::{adam_step, AdamState};
pub use matrix::Matrix;
pub use tape::{Gradients, Node, Op, Tape, Var};
pub(crate) use tape::sigmoid;
