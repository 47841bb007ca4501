//! Time loop (under construction).
