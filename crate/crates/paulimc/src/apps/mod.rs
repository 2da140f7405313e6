//! End-to-end estimators (placeholder).
