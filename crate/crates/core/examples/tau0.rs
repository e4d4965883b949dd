//! Critical penetration rate of attentive drivers needed to stabilize a
//! fleet that also contains sluggish ones.

use ringwave::stability::{critical_penetration, tau0_bounds};
use ringwave::LinearTrio;

fn main() -> ringwave::Result<()> {
    let g = 20.0 / (10.4 * 10.4);
    let attentive = LinearTrio::new(4.0 * 1.27491, 4.0 + g, g)?;
    let sluggish = LinearTrio::new(0.5 * 1.27491, 0.5 + g, g)?;
    let r = critical_penetration(&attentive, &sluggish)?;
    println!("delta1 = {:.4}, delta2 = {:.4}", r.delta1, r.delta2);
    println!("N0 = {:.5}  ->  tau0 = {:.5}", r.n0, r.tau0);
    let (lo, hi) = tau0_bounds(&attentive, &sluggish)?;
    println!("closed-form estimates: lower {lo:.5}, upper {hi:.5}");
    println!(
        "with {:.1}% attentive drivers the ring is stable at every size",
        100.0 * r.tau0
    );
    Ok(())
}
