//! Courses built from generated reports, learner sessions driven by the
//! scheduler, annotation intake, and the HTTP API over all of it.

pub mod api;
pub mod course;
pub mod engine;
pub mod events;
pub mod runtime;
pub mod testutil;

pub use api::{router, serve, AppState};
pub use course::{assemble_course, BuildError, Course, DocRef};
pub use engine::{
    GradeOutcome, IaaView, ItemPayload, LearnerState, Phase, RevealPayload, SessionEngine,
    SessionError,
};
pub use events::{EventKind, EventLog, SessionEvent};
pub use runtime::{DataDir, Runtime, ServiceError};
