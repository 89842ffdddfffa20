//! Tabular study output (filled in with the studies).
