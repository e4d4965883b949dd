//! Linear trios and stability classes, analytic and by finite differences,
//! for a Bando-FTL driver and for a hand-written law.

use ringwave::{
    linearize, linearize_fd, CarFollowingModel, CustomModel, LinearTrio, VelocityPreference,
};

fn show(name: &str, t: &LinearTrio) {
    println!(
        "{name:>10}: alpha = {:.5}, beta = {:.5}, gamma = {:.5}, delta = {:+.5} ({:?})",
        t.alpha,
        t.beta,
        t.gamma,
        t.discriminant(),
        t.classify()
    );
}

fn main() -> ringwave::Result<()> {
    let pref = VelocityPreference::with_slope_at(4.5, 2.23, 10.4, 1.27491)?;
    let v = pref.eval(10.4)?;
    for (a, name) in [(4.0, "attentive"), (0.5, "sluggish")] {
        let m = CarFollowingModel::bando_ftl(a, 20.0, pref)?;
        show(name, &linearize(&m, 10.4, v)?);
        show("fd", &linearize_fd(&m, 10.4, v, 1e-4)?);
    }

    // f = 0.6 (h − 2 − 1.2 v) + 0.9 ḣ: linear, so the trio is exact
    let law = CustomModel::new(
        |h, hd, v| 0.6 * (h - 2.0 - 1.2 * v) + 0.9 * hd,
        (0.5, 100.0),
        (0.0, 30.0),
    );
    let custom = CarFollowingModel::custom(law);
    let h = custom.preferred_headway(10.0)?;
    show("custom", &linearize(&custom, h, 10.0)?);
    Ok(())
}
