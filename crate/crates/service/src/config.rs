use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Checkpoint used when a render request names none.
    pub checkpoint: Option<PathBuf>,
    pub host: IpAddr,
    pub port: u16,
    /// Side of generated sketches, which must match the checkpoint.
    pub image_size: u32,
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
    /// Seeds the draws for rings posted without a seed; entropy when unset.
    pub seed: Option<u64>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            checkpoint: None,
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            image_size: 64,
            cors_origin: None,
            seed: None,
        }
    }
}
