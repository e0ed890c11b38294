//! Data-parallel mapping over independent work units.
//!
//! With the `parallel` feature (default) the maps run on the rayon pool;
//! without it they degrade to sequential loops. Both preserve input order, so
//! results are identical regardless of the feature or the schedule — callers
//! seed each unit independently.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    F: Fn(I) -> O,
{
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn try_map<I, O, F>(items: Vec<I>, f: F) -> Result<Vec<O>>
where
    I: Send,
    O: Send,
    F: Fn(I) -> Result<O> + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map<I, O, F>(items: Vec<I>, f: F) -> Result<Vec<O>>
where
    F: Fn(I) -> Result<O>,
{
    items.into_iter().map(f).collect()
}

/// Sequential variant kept unconditionally available so benches can compare
/// the two execution paths in one build.
pub fn map_seq<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    F: Fn(I) -> O,
{
    items.into_iter().map(f).collect()
}
