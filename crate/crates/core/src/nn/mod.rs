//! Hand-differentiated layers, the composed model, Adam and checkpoints.

pub mod adam;
pub mod attention;
pub mod checkpoint;
pub mod conv;
pub mod decoder;
pub mod gcn;
pub mod gradcheck;
pub mod gru;
pub mod linalg;
pub mod model;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use attention::{attention_pool, Attention, AttentionParams};
pub use checkpoint::{Checkpoint, CheckpointHeader, CHECKPOINT_MAGIC};
pub use conv::TemporalConv;
pub use decoder::{decoder_forward, layer_norm, Decoder, DecoderParams, DECODER_KERNEL, NUM_CLASSES};
pub use gcn::{graph_convolve, Gcn, GcnParams};
pub use gru::{gru_step, Gru, GruParams};
pub use model::{
    cross_entropy, loss_and_gradients, model_forward, predict_label, ForwardCache, Model, ModelParams, ModelSpec,
    ParamBlock, TemporalKind,
};
pub use tensor::Tensor;
