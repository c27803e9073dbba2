//! Monte Carlo engine.
