//! Bergman-space numerics on CP^1 (filled in after the symbolic core).
