// Field contexts cache Frobenius tables in a `OnceLock`; hashing and ordering never read it.
#![allow(clippy::mutable_key_type)]

pub mod data;
pub mod error;
pub mod ffield;
pub mod poly;
pub mod correspondence;
pub mod ellcurve;
pub mod physgraph;
pub mod clump;
pub mod treegen;

pub use error::{Error, Result};
pub use ffield::{make_field, Field, FieldCtx, FieldElement};
pub use poly::{BiPoly, UniPoly, Var};
pub use correspondence::{Branch, CoreFlag, Correspondence, EdgePoint, PointP1, Side};
pub use physgraph::{ColoredComponent, DirectedView, PointClass, Vertex};
pub use clump::{Clump, ClosureOutcome};
pub use treegen::{ArcReport, FiniteGraph, TreeBall};
