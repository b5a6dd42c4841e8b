use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::mask;
use crate::error::{Error, Result};

/// Largest number of qubits a state vector may hold.
pub const MAX_STATE_QUBITS: u32 = 24;
/// Largest number of qubits on which operator norms are estimated.
pub const MAX_NORM_QUBITS: u32 = 14;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub qubits: u32,
}

/// Named registers over a global qubit index. The first register owns the
/// most significant bits of the amplitude index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total: u32,
}

/// Position of a register inside the amplitude index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub shift: u32,
    pub bits: u32,
}

impl Slot {
    pub fn get(&self, index: usize) -> u64 {
        (index as u64 >> self.shift) & mask(self.bits)
    }

    pub fn set(&self, index: usize, value: u64) -> usize {
        let cleared = index as u64 & !(mask(self.bits) << self.shift);
        (cleared | (value & mask(self.bits)) << self.shift) as usize
    }

    pub fn size(&self) -> usize {
        1usize << self.bits
    }
}

impl RegisterLayout {
    pub fn new<S: AsRef<str>>(registers: &[(S, u32)]) -> Result<Self> {
        let mut out = Vec::with_capacity(registers.len());
        let mut total = 0u32;
        for (name, qubits) in registers {
            let name = name.as_ref();
            if *qubits == 0 {
                return Err(Error::Layout(format!("register `{name}` has no qubits")));
            }
            if out.iter().any(|r: &Register| r.name == name) {
                return Err(Error::Layout(format!("duplicate register `{name}`")));
            }
            total += qubits;
            out.push(Register {
                name: name.to_string(),
                qubits: *qubits,
            });
        }
        if total > MAX_STATE_QUBITS {
            return Err(Error::SizeGuard(format!(
                "{total} qubits exceed the simulator limit of {MAX_STATE_QUBITS}"
            )));
        }
        Ok(Self {
            registers: out,
            total,
        })
    }

    pub fn shared<S: AsRef<str>>(registers: &[(S, u32)]) -> Result<Arc<Self>> {
        Self::new(registers).map(Arc::new)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn dim(&self) -> usize {
        1usize << self.total
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn slot(&self, name: &str) -> Result<Slot> {
        let mut above = 0;
        for r in &self.registers {
            if r.name == name {
                return Ok(Slot {
                    shift: self.total - above - r.qubits,
                    bits: r.qubits,
                });
            }
            above += r.qubits;
        }
        Err(Error::UnknownRegister(name.to_string()))
    }

    pub fn slots(&self, names: &[&str]) -> Result<Vec<Slot>> {
        names.iter().map(|n| self.slot(n)).collect()
    }

    /// Amplitude index of the basis state with the given register values;
    /// registers not listed are zero.
    pub fn basis_index(&self, values: &[(&str, u64)]) -> Result<usize> {
        let mut index = 0usize;
        for (name, value) in values {
            let slot = self.slot(name)?;
            if *value & !mask(slot.bits) != 0 {
                return Err(Error::WidthMismatch {
                    value: *value,
                    width: slot.bits,
                });
            }
            index = slot.set(index, *value);
        }
        Ok(index)
    }

    pub fn check_norm_size(&self) -> Result<()> {
        if self.total > MAX_NORM_QUBITS {
            return Err(Error::SizeGuard(format!(
                "norm estimation limited to {MAX_NORM_QUBITS} qubits, layout has {}",
                self.total
            )));
        }
        Ok(())
    }
}
