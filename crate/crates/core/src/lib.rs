//! Stream-based runtime monitoring for stream specifications.
//!
//! The pipeline is: [`frontend::parse_spec`] turns source text into an AST,
//! [`analysis::analyze`] checks names, types, pacing and evaluation order and
//! computes a static memory bound, and [`engine::Monitor`] evaluates the analyzed
//! specification online against timestamped events. [`trace`] replays recorded
//! or synthetic logs into a monitor and [`fence`] generates geo-fence
//! specifications from polygons.

pub mod analysis;
pub mod corpus;
pub mod engine;
pub mod fence;
pub mod frontend;
pub mod synth;
pub mod time;
pub mod trace;
pub mod types;
pub mod window;

pub use analysis::{analyze, AnalysisError, AnalyzedSpec, ResourceReport};
pub use engine::{Event, Monitor, Verdict, VerdictKind};
pub use frontend::{format_spec, parse_spec, ParseError, SpecificationAst};
pub use time::Timestamp;
pub use types::{SemType, Value};
