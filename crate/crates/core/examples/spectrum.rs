//! Eigenvalues of the linearized ring and how the abscissa changes with
//! fleet size.

use ringwave::spectrum::{eigenvalues_on_h, RingSystem};
use ringwave::stability::interleaved_ring;
use ringwave::LinearTrio;

fn main() -> ringwave::Result<()> {
    let g = 20.0 / (10.4 * 10.4);
    let attentive = LinearTrio::new(4.0 * 1.27491, 4.0 + g, g)?;
    let sluggish = LinearTrio::new(0.5 * 1.27491, 0.5 + g, g)?;

    let small = RingSystem::new(vec![attentive, attentive, sluggish])?;
    let rep = eigenvalues_on_h(&small)?;
    println!(
        "3 vehicles, structural zero removed (tol {:.1e}):",
        rep.tol_eig0
    );
    for z in &rep.eigenvalues {
        println!("  {:+.5} {:+.5}i", z.re, z.im);
    }

    println!("\n   n   abscissa (80% attentive)");
    for n in [5, 10, 20, 50, 100, 200] {
        let ab =
            eigenvalues_on_h(&interleaved_ring(&[attentive, sluggish], &[0.8, 0.2], n)?)?.abscissa;
        println!("{n:>4}   {ab:+.3e}");
    }
    Ok(())
}
