//! Classical receivers.
//!
//! Party code never touches a [`StateVector`]: it is handed a
//! [`ClassicalPort`] for the particle in front of it, and the port only
//! offers the three operations a classical party may perform.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qstate::{MeasuredValue, MeasurementBasis, QStateError, QubitLabel, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    MeasResend,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartyAction {
    MeasResend { bit: u8 },
    Reflect,
}

impl PartyAction {
    pub fn kind(self) -> ActionKind {
        match self {
            PartyAction::MeasResend { .. } => ActionKind::MeasResend,
            PartyAction::Reflect => ActionKind::Reflect,
        }
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            PartyAction::MeasResend { bit } => Some(bit),
            PartyAction::Reflect => None,
        }
    }
}

/// Fair coin between MEAS-RESEND and REFLECT.
pub fn choose_action<R: Rng + ?Sized>(rng: &mut R) -> ActionKind {
    if rng.random_bool(0.5) {
        ActionKind::MeasResend
    } else {
        ActionKind::Reflect
    }
}

/// Access to one arriving particle, limited to classical operations.
pub struct ClassicalPort<'a, R: Rng + ?Sized> {
    state: &'a mut StateVector,
    particle: QubitLabel,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> ClassicalPort<'a, R> {
    pub(crate) fn new(state: &'a mut StateVector, particle: QubitLabel, rng: &'a mut R) -> Self {
        ClassicalPort { state, particle, rng }
    }

    /// Measure in Z and send the particle on in the state found.
    pub fn measure_resend(self) -> Result<u8, QStateError> {
        let (o, s) = self.state.measure(MeasurementBasis::Z, &[self.particle], self.rng)?;
        *self.state = s;
        Ok(o.result.as_bit().expect("Z measurement yields a bit"))
    }

    /// Absorb the particle and send a fresh one in `|bit⟩`.
    pub fn prepare_resend(self, bit: u8) -> Result<(), QStateError> {
        let (o, s) = self.state.measure(MeasurementBasis::Z, &[self.particle], self.rng)?;
        *self.state = if o.result == MeasuredValue::from_bit(bit) {
            s
        } else {
            s.apply_pauli_x(self.particle)?
        };
        Ok(())
    }

    pub fn reflect(self) {}
}

/// Carry out a chosen action on the particle behind `port`.
pub fn act<R: Rng + ?Sized>(kind: ActionKind, port: ClassicalPort<'_, R>) -> Result<PartyAction, QStateError> {
    Ok(match kind {
        ActionKind::MeasResend => PartyAction::MeasResend {
            bit: port.measure_resend()?,
        },
        ActionKind::Reflect => {
            port.reflect();
            PartyAction::Reflect
        }
    })
}
