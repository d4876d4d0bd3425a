//! Linear-inversion tomography of a random two-qubit state from random
//! Pauli-basis shots, against the exact expectation table.

use blindcal::qcore::{measure_pauli, random_pure_qubit, trace_distance};
use blindcal::seed::rng_from_seed;
use blindcal::tomography::{reconstruct, sample_basis, ExpectationTable, MeasurementRecord};

fn main() -> blindcal::error::Result<()> {
    let mut rng = rng_from_seed(3);
    let truth = random_pure_qubit(&mut rng).kron(&random_pure_qubit(&mut rng))?;
    let exact = reconstruct(&ExpectationTable::exact(&truth), 2)?;
    println!(
        "exact table: trace distance {:.2e}",
        trace_distance(&exact, &truth)?
    );

    let mut table = ExpectationTable::new(2);
    let mut done = 0;
    for shots in [100usize, 1_000, 10_000, 100_000] {
        for t in done..shots {
            let basis = sample_basis(2, &mut rng);
            let outcomes = measure_pauli(&truth, &basis, &mut rng)?;
            table.add(&MeasurementRecord::new(t as u32, basis, outcomes)?)?;
        }
        done = shots;
        println!(
            "{shots:>7} shots: trace distance {:.4}",
            trace_distance(&reconstruct(&table, 2)?, &truth)?
        );
    }
    Ok(())
}
