//! Tableau-based Clifford simulator (placeholder).
