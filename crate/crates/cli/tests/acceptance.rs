//! One line per acceptance criterion; the test fails if any criterion fails.

use hplane_cli::acceptance::*;

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for f in [ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9] {
        let r = f();
        println!("{}", r.line());
        if !r.pass() {
            failed.push(r.id);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
