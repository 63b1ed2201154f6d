//! Online model updates inside the feedback loop.
