use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error(transparent)]
    Model(#[from] sgkit_core::ModelError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown triple {0}")]
    UnknownTriple(u64),
    #[error("timestep {0} is not in the schedule")]
    UnknownTimestep(usize),
    #[error("invalid noise schedule: {0}")]
    Schedule(String),
    #[error("embedding backend: {0}")]
    Backend(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EncoderError> = std::result::Result<T, E>;
