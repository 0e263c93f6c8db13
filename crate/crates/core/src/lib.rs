//! Deficient-post prediction and answer drafting for community Q&A archives.
//!
//! The pipeline runs in stages:
//! 1. [`ingest`] pulls question records from the Stack Exchange API or a dump.
//! 2. [`features`] turns each record into eleven post-level properties and
//!    resolves human votes into labels.
//! 3. [`classifier`] trains and evaluates the deficiency classifier.
//! 4. [`matcher`] ranks deficient posts against a developer's coding context
//!    and expertise and picks one.
//! 5. [`snippets`] drafts an answer from the developer's own code through
//!    clone detection and slicing.

pub mod classifier;
pub mod features;
pub mod ingest;
pub mod matcher;
pub mod snippets;
