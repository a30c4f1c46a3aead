//! Regression suite against the published numbers. The checks themselves
//! live in `raman_scatter::reproduce`; `tests/acceptance.rs` runs one per test.

use std::io::Write;

use raman_scatter::reproduce::Criterion;

/// Print the verdict line and fail the calling test if the criterion failed.
///
/// Writes to the process stdout directly so the line also shows for
/// passing tests.
pub fn check(c: Criterion) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{c}");
    let _ = out.flush();
    drop(out);
    assert!(c.passed, "criterion {} failed", c.id);
}
