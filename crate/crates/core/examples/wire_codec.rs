//! Frames exchanged between receiver and sender: encode, inspect, decode a
//! stream of concatenated frames.

use blindcal::protocol::{decode_prefix, encode_message, ProtocolMessage, TerminateReason};
use blindcal::qcore::{Pauli, PauliString};
use blindcal::tomography::MeasurementRecord;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![
        MeasurementRecord::new(0, PauliString::new(vec![Pauli::X]), vec![1])?,
        MeasurementRecord::new(1, PauliString::new(vec![Pauli::Z]), vec![-1])?,
    ];
    let messages = [
        ProtocolMessage::MeasurementReport {
            iteration: 0,
            records,
        },
        ProtocolMessage::CostReport {
            iteration: 0,
            cost: 0.125,
        },
        ProtocolMessage::Terminate {
            iteration: 1,
            reason: TerminateReason::Converged,
        },
    ];
    let mut stream = Vec::new();
    for m in &messages {
        let frame = encode_message(m);
        let hex: Vec<String> = frame.iter().map(|b| format!("{b:02x}")).collect();
        println!("{:>2} bytes: {}", frame.len(), hex.join(" "));
        stream.extend(frame);
    }
    let mut rest = &stream[..];
    while !rest.is_empty() {
        let (msg, used) = decode_prefix(rest)?;
        println!("decoded {msg:?}");
        rest = &rest[used..];
    }
    Ok(())
}
