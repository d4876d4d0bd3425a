//! Fiber noise at a few lengths: rotation, bit-flip and phase-flip
//! probabilities, and what one fiber does to |+>.

use blindcal::channels::{
    half_probability_length, length_to_prob, Channel, FiberChannel, NoiseParams,
};
use blindcal::qcore::{bloch_vector, fidelity, from_bloch};

fn main() -> blindcal::error::Result<()> {
    let mu = 0.05;
    println!(
        "flip probability reaches 1/2 at {:.3} km",
        half_probability_length(mu)
    );
    let plus = from_bloch([1.0, 0.0, 0.0])?;
    for length in [10.0, 50.0, 100.0] {
        let params = NoiseParams::new(length, mu, mu, mu, vec![[1.2, -0.7, 2.0]])?;
        let fiber = FiberChannel::new(params, true);
        let out = fiber.transmit_exact(&plus)?;
        let r = bloch_vector(&out)?;
        println!(
            "L={length:>5} km  p={:.4}  F(out,|+>)={:.4}  bloch=({:+.3}, {:+.3}, {:+.3})",
            length_to_prob(mu, length)?,
            fidelity(&out, &plus)?,
            r[0],
            r[1],
            r[2]
        );
    }
    Ok(())
}
