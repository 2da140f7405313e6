//! Monte Carlo sampler engine (placeholder).
