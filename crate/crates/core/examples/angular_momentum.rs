//! Clebsch-Gordan coefficients for the D5/2 ↔ P3/2 dipole couplings.
//!
//! Run with `cargo run --example angular_momentum`.

use raman_scatter::prelude::*;

fn main() -> Result<()> {
    let one: HalfInt = "1".parse()?;
    let j_d: HalfInt = "5/2".parse()?;
    let j_p: HalfInt = "3/2".parse()?;

    println!("<5/2 m; 1 q | 3/2 m+q>");
    for m in j_d.projections() {
        let mut row = format!("m = {m:>4}:");
        for q in [-1, 0, 1] {
            let q = HalfInt::from(q);
            let mp = m + q;
            let c = if mp.abs() <= j_p { clebsch_gordan(j_d, m, one, q, j_p, mp)? } else { 0.0 };
            row.push_str(&format!("  {c:+.5}"));
        }
        println!("{row}");
    }

    let half = HalfInt::HALF;
    let w = wigner3j(half, half, HalfInt::ONE, half, -half, HalfInt::ZERO)?;
    println!("(1/2 1/2 1; 1/2 -1/2 0) = {w:.6} (exact 1/sqrt(6) = {:.6})", 1.0 / 6f64.sqrt());
    Ok(())
}
