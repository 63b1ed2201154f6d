//! Recurrent encoder/decoder surrogate model.
