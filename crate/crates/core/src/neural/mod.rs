//! Neural building blocks with hand-written backward passes.
//!
//! Every layer stores its parameters as [`Param`]s (value plus gradient
//! buffer). `forward` is pure; `backward` accumulates into the gradient
//! buffers and returns the gradient with respect to the layer input.
//! Everything is fp64.

pub mod activations;
pub mod adam;
pub mod attention;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod pool;
pub mod tensor;

pub use activations::{leaky_relu, masked_softmax, relu, sigmoid, softmax, DEFAULT_LEAKY_SLOPE};
pub use adam::{AdamConfig, AdamState};
pub use attention::{Attention, AttentionOutput};
pub use conv::Conv1d;
pub use dense::Dense;
pub use dropout::{dropout, Mode, DEFAULT_DROPOUT_RATE};
pub use gradcheck::{grad_check, relative_error, Differentiable, GradCheckReport, DEFAULT_STEP};
pub use loss::{add_l2_grad, bce, bce_grad, bce_l2_loss, bce_logit_grad, l2_penalty, DEFAULT_L2};
pub use lstm::{BiLstm, BiLstmCache, Lstm, LstmCache};
pub use pool::{masked_max_backward, masked_max_over_rows, maxpool1d, maxpool1d_backward, Pooled, TimeMax};
pub use tensor::{ensure_finite, Param, Tensor2D};
