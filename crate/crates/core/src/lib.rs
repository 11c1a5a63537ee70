//! Doubly-dispersive channel estimation: OFDM link model, vehicular channel
//! generator, conventional and learned estimators, Monte-Carlo evaluation
//! and operation-count accounting.

pub mod bench;
pub mod channel;
pub mod complexity;
pub mod error;
pub mod est_conv;
pub mod est_dl;
pub mod grid;
pub mod link;
pub mod nn;
pub mod phy;
pub mod plot;
pub mod rng;
pub mod special;
pub mod tally;

pub use channel::{ChannelModel, ChannelRealization};
pub use complexity::{CostParams, CountTarget, OpCount};
pub use error::{Error, Result};
pub use grid::{CGrid, C64};
pub use phy::{FrameGrid, Modulation, PhyConfig, PilotLayout, TimeSignal};
