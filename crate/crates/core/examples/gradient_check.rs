//! Central finite-difference checks of every composite module.
//!
//! cargo run --release --example gradient_check

use xdrs::gradsuite::{run_suite, GRADCHECK_TOLERANCE};

fn main() {
    for m in run_suite() {
        println!(
            "{:<13} {}  max relative error {:.2e} over {} entries (tolerance {:.0e})",
            m.module,
            if m.passed { "PASS" } else { "FAIL" },
            m.report.max_rel_error,
            m.report.checked,
            GRADCHECK_TOLERANCE
        );
    }
}
