//! Equilibrium flow of a mixed fleet on a 5.2 km ring.
//!
//! Run with `cargo run --example equilibrium`.

use ringwave::{
    equilibrium_from_length, CarFollowingModel, Composition, PopulationSpec, VelocityPreference,
};

fn main() -> ringwave::Result<()> {
    // V′(10.4 m) = 1.27491 1/s, vehicle length 4.5 m
    let pref = VelocityPreference::with_slope_at(4.5, 2.23, 10.4, 1.27491)?;
    let careful = VelocityPreference::new(pref.v_max * 0.9, 5.0, 2.5)?;
    let comp = Composition::interleaved(vec![
        PopulationSpec::new(1, CarFollowingModel::bando_ftl(4.0, 20.0, pref)?, 400),
        PopulationSpec::new(2, CarFollowingModel::bando_ftl(0.5, 20.0, careful)?, 100),
    ])?;
    let eq = equilibrium_from_length(&comp, 5200.0)?;
    println!("v_bar = {:.4} m/s on L = {} m", eq.v_bar, eq.length);
    for (class, h) in &eq.h_bar {
        println!("class {class}: h_bar = {h:.4} m");
    }
    Ok(())
}
