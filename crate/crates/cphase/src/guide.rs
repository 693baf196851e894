//! The narrative guide, rendered from the `book/` sources.
//!
//! Each submodule mirrors one chapter of the mdBook under `book/` in the
//! repository root; the code blocks below are the book's snippets, compiled
//! and run as doc-tests so the guide cannot drift from the library.

/// What the gate does and how the pieces of this crate fit together.
pub mod introduction {
    #![doc = include_str!("../../../book/src/introduction.md")]
}

/// The beam-splitter model: amplitude paths, alignment conditions,
/// partial interference.
pub mod gate_model {
    #![doc = include_str!("../../../book/src/gate-model.md")]
}

/// Two-photon interference scans, visibility and overlap quality.
pub mod hom_interference {
    #![doc = include_str!("../../../book/src/hom-interference.md")]
}

/// Counting statistics and detector-efficiency correction.
pub mod photon_counting {
    #![doc = include_str!("../../../book/src/photon-counting.md")]
}

/// Linear state tomography and the entanglement analysis.
pub mod state_tomography {
    #![doc = include_str!("../../../book/src/state-tomography.md")]
}

/// Process tomography: the χ matrix, its ideal reference and the process
/// fidelity.
pub mod process_tomography {
    #![doc = include_str!("../../../book/src/process-tomography.md")]
}

/// Fitting the partial-interference model to reconstructed data.
pub mod model_fitting {
    #![doc = include_str!("../../../book/src/model-fitting.md")]
}
