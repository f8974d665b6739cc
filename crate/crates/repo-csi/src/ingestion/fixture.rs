//! Fixture files: a full [`EventSet`] serialized as pretty-printed JSON.
//!
//! Fixtures are the offline ingestion path. A file produced by
//! [`save_fixture`] is canonical (records sorted, two-space indent, trailing
//! newline), so saving a loaded fixture reproduces it byte for byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::events::EventSet;

/// Reads and validates a fixture. Record order is preserved as found in the
/// file; callers that need canonical order sort via [`EventSet::canonicalize`].
pub fn load_fixture(path: impl AsRef<Path>) -> Result<EventSet> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let events: EventSet = serde_json::from_slice(&bytes).map_err(|e| Error::MalformedFixture {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    events
        .validate()
        .map_err(|detail| Error::MalformedFixture {
            path: path.to_path_buf(),
            detail,
        })?;
    Ok(events)
}

/// Writes `events` in canonical form. The input is left untouched; ordering
/// is applied to a clone so repeated saves are deterministic regardless of
/// how the set was assembled.
pub fn save_fixture(events: &EventSet, path: impl AsRef<Path>) -> Result<()> {
    let mut canonical = events.clone();
    canonical.canonicalize();
    let mut body = serde_json::to_vec_pretty(&canonical)?;
    body.push(b'\n');
    fs::write(path.as_ref(), body)?;
    Ok(())
}
