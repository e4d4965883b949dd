//! Stability margin of three-class fleets and the threshold share of the
//! stable class.

use ringwave::stability::{multi_phase_margin, multi_phase_tau1};
use ringwave::LinearTrio;

fn main() -> ringwave::Result<()> {
    let stable = LinearTrio::new(2.0, 2.6, 0.3)?;
    let mild = LinearTrio::new(0.8, 1.1, 0.3)?;
    let wild = LinearTrio::new(1.2, 1.0, 0.4)?;
    let trios = [stable, mild, wild];
    for t in &trios {
        println!("delta = {:+.4}", t.discriminant());
    }
    for share in [0.5, 0.7, 0.9] {
        let rest = 1.0 - share;
        let rep = multi_phase_margin(&trios, &[share, 0.6 * rest, 0.4 * rest])?;
        println!(
            "share {share:.2}: sup = {:+.4e} -> {:?}",
            rep.sup_margin, rep.verdict
        );
    }
    let tau1 = multi_phase_tau1(&trios, &[0.6, 0.4])?;
    println!("threshold share of the stable class: {tau1:.5}");
    Ok(())
}
