//! Replay of `GATE;qubits;params` circuit traces.

use super::QuantumState;
use crate::error::{Error, Result};

/// Applies every gate of a trace produced by [`QuantumState::enable_trace`].
pub fn replay_trace(state: &mut QuantumState, trace: &str) -> Result<()> {
    for (lineno, line) in trace.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse(format!("trace line {}: {msg}: {line:?}", lineno + 1));
        let mut parts = line.splitn(3, ';');
        let gate = parts.next().ok_or_else(|| bad("missing gate"))?;
        let qubits: Vec<usize> = match parts.next() {
            Some("") | None => Vec::new(),
            Some(q) => q
                .split(',')
                .map(|s| s.parse().map_err(|_| bad("bad qubit")))
                .collect::<Result<_>>()?,
        };
        let params = parts.next().unwrap_or("");
        let want = |n: usize| {
            if qubits.len() == n {
                Ok(())
            } else {
                Err(bad("wrong qubit count"))
            }
        };
        match gate {
            "X" => {
                want(1)?;
                state.apply_x(qubits[0])?;
            }
            "H" => {
                want(1)?;
                state.apply_h(qubits[0])?;
            }
            "SDG" => {
                want(1)?;
                state.apply_sdg(qubits[0])?;
            }
            "SWAP" => {
                want(2)?;
                state.apply_swap(qubits[0], qubits[1])?;
            }
            "CP" => {
                want(2)?;
                let theta: f64 = params.parse().map_err(|_| bad("bad angle"))?;
                state.apply_controlled_phase(qubits[0], qubits[1], theta)?;
            }
            "MCX" => {
                let (target, controls) = qubits.split_last().ok_or_else(|| bad("no target"))?;
                if params.len() != controls.len() {
                    return Err(bad("polarity string length mismatch"));
                }
                let controls: Vec<(usize, bool)> = controls
                    .iter()
                    .zip(params.chars())
                    .map(|(&q, c)| match c {
                        '1' => Ok((q, true)),
                        '0' => Ok((q, false)),
                        _ => Err(bad("bad polarity")),
                    })
                    .collect::<Result<_>>()?;
                state.apply_mcx(&controls, *target)?;
            }
            _ => return Err(bad("unknown gate")),
        }
    }
    Ok(())
}
