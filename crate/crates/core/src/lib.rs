//! Context-aware learning recommendation.
//!
//! A user's situation is a point in a ten-facet context space
//! ([`context`]). The engine ([`engine`]) classifies it against a case base
//! ([`cases`]), reuses or builds a ranked cloud of points of interest
//! ([`learning`], [`geo`]) and plans the tasks that lead there. The
//! [`bus`] module runs the same pipeline as a set of message-passing
//! agents and [`sim`] replays scripted learner scenarios through it.

pub mod bus;
pub mod cases;
pub mod context;
pub mod engine;
pub mod geo;
pub mod learning;
pub mod sim;
pub mod text;
