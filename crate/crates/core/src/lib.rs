//! Energy-efficient multicast scheduling for a 60 GHz small cell with D2D relaying.
//!
//! The pipeline is: [`pathplan`] builds relay paths from the BS to every group
//! member, [`scheduler`] packs path links into concurrent pairings using a
//! [`contention`] graph, and [`power`] splits the serial slot budget over the
//! pairings and lowers each transmitter to the least power that still delivers
//! the payload. [`baselines`] provides serial unicast and serial D2D for
//! comparison, [`metrics`] and [`analysis`] evaluate the result, and
//! [`harness`] runs seeded Monte Carlo experiments.

pub mod analysis;
pub mod audit;
pub mod baselines;
pub mod channel;
pub mod contention;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod pathplan;
pub mod power;
pub mod scheduler;

pub use error::{EmsError, Result};
pub use model::{build_topology, ChannelParams, Link, MulticastDemand, NodeId, Point, Topology};
