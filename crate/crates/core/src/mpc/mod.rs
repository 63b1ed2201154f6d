//! Receding-horizon controller.
