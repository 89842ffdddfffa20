//! Function catalog for the CP^1 studies (filled in with the studies).
