//! Dense ReLU networks with hand-written backprop and an Adam optimizer.
//!
//! Hidden layers use ReLU, the output layer is linear. Weights are stored
//! row-major as `(out_dim, in_dim)`. Batched inputs are `(batch, in_dim)`.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::Adam;
pub use checkpoint::{load_json, save_json, AdamSnapshot, MlpSnapshot, CHECKPOINT_VERSION};
pub use mlp::{Dense, ForwardCache, Gradients, Mlp};
