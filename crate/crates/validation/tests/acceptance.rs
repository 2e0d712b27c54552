//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use qcmod_validation::criteria;

fn main() {
    let criteria = criteria();
    let total = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}  {name} — {detail} [{secs:.1}s]", i + 1);
    }
    let secs = total.elapsed().as_secs_f64();
    let within = secs < 15.0 * 60.0;
    if !within {
        failed += 1;
    }
    println!(
        "criterion 13 {}  full battery runtime — {secs:.1}s (limit 900s)",
        if within { "PASS" } else { "FAIL" }
    );
    println!("acceptance: {} of 13 criteria passed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
