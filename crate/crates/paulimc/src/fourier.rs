//! Fourier-series builders (placeholder).
