//! Compares two samples of rankings with the exact and the normal
//! Mann-Whitney test.

use harmonist::stats::{mann_whitney_u, MwuMethod};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = [1.0, 2.0, 1.0, 1.0, 3.0, 2.0, 1.0, 2.0];
    let b = [3.0, 4.0, 2.0, 4.0, 3.0, 4.0, 3.0, 2.0];
    for method in [MwuMethod::Exact, MwuMethod::Normal, MwuMethod::Auto] {
        let r = mann_whitney_u(&a, &b, method)?;
        println!(
            "{:<22} U = {:>4}  z = {:>7}  p = {:.5}",
            r.method.as_str(),
            r.u,
            r.z.map_or("-".into(), |z| format!("{z:.3}")),
            r.p_two_sided
        );
    }
    Ok(())
}
