//! One calibration session run message by message: the receiver only ever
//! sees scalar cost reports, and the transcript replays exactly.

use blindcal::channels::{FiberChannel, NoiseParams};
use blindcal::protocol::{run_session, CalibrationConfig, Direction, ProtocolMessage};
use blindcal::scenarios::bb84_states;

fn main() -> blindcal::error::Result<()> {
    let params = NoiseParams::new(60.0, 0.05, 0.0, 0.0, vec![[0.8, -1.9, 2.4]])?;
    println!(
        "decoder angles that undo the fiber: {:.4?}",
        params.inverse_angles()
    );
    let channel = FiberChannel::new(params, false);
    let config = CalibrationConfig::new(bb84_states(), 1000, 120);
    let session = run_session(&config, &channel, 42)?;
    for (direction, msg) in session.transcript.messages()? {
        match (direction, msg) {
            (Direction::SenderToReceiver, ProtocolMessage::CostReport { iteration, cost })
                if iteration % 20 == 0 =>
            {
                println!("iteration {iteration:>3}: cost {cost:.5}");
            }
            (_, ProtocolMessage::Terminate { iteration, reason }) => {
                println!("terminated at {iteration}: {reason:?}")
            }
            _ => {}
        }
    }
    println!(
        "final decoder angles: {:.4?}",
        session.outcome.final_params.values()
    );
    assert_eq!(session.transcript.replay()?, session.transcript);
    println!(
        "transcript of {} bytes replays identically",
        session.transcript.to_bytes().len()
    );
    Ok(())
}
