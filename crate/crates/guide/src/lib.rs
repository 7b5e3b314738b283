//! Placeholder for the guide doc-test harness.
