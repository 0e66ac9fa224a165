//! Multilingual manifesto scaling.
//!
//! A hierarchical bi-LSTM scores manifestos at the sentence level (57-class
//! policy codes and left/right/neutral polarity) and at the document level
//! (RILE), trained with a joint loss that ties sentence polarity to the
//! document score. Document positions are then calibrated with a
//! hinge-loss soft-logic program over coalition, similarity, content-ratio
//! and temporal relations.

pub mod corpus;
pub mod embedalign;
pub mod diffcore;
pub mod hiermodel;
pub mod pslengine;
pub mod calibration;
pub mod synth;
pub mod eval;
