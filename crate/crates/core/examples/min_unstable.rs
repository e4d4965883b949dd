//! Smallest ring on which a mix of drivers becomes unstable, on both sides
//! of the critical penetration rate.

use ringwave::stability::{critical_penetration, min_unstable_size};
use ringwave::LinearTrio;

fn main() -> ringwave::Result<()> {
    let g = 20.0 / (10.4 * 10.4);
    let attentive = LinearTrio::new(4.0 * 1.27491, 4.0 + g, g)?;
    let sluggish = LinearTrio::new(0.5 * 1.27491, 0.5 + g, g)?;
    let tau0 = critical_penetration(&attentive, &sluggish)?.tau0;
    for rate in [0.0, 0.5, 0.8, tau0 - 0.01, tau0 + 0.01] {
        let found = min_unstable_size(&[attentive, sluggish], &[rate, 1.0 - rate], 500)?;
        println!("{:5.1}% attentive: {found:?}", 100.0 * rate);
    }
    Ok(())
}
