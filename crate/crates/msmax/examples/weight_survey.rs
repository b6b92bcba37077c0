//! Minimal library tour: build a weight, apply the strong maximal operator,
//! and read off its dyadic rectangle constant (the snippet from the README).

use msmax::maximal::{strong_maximal, ExponentProfile, Family};
use msmax::weights::{a_p_rect_constant, power_weight};

fn main() -> msmax::Result<()> {
    let levels = [5u8];
    let w = power_weight(0.5, &[0.0], &levels, &[0.0])?;
    let prof = ExponentProfile::new(1, 0.0, &[2.0], 2.0)?;
    let maximal_fn = strong_maximal(std::slice::from_ref(&w), &prof)?;
    let ap = a_p_rect_constant(&w, 2.0, Family::Dyadic)?;
    println!(
        "A_p = {:.6} at {:?}; sup of Mw = {:.6}",
        ap.value,
        ap.witness,
        maximal_fn.values().iter().cloned().fold(0.0, f64::max),
    );
    Ok(())
}
