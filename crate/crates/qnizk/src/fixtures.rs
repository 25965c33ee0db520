//! Bundled circuit fixtures, located via `QNIZK_FIXTURES` or the repository.

use std::path::PathBuf;

use crate::hamiltonian::{CircuitError, VerifierCircuit};

pub fn fixture_dir() -> PathBuf {
    match std::env::var_os("QNIZK_FIXTURES") {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

/// Load `<name>.json` from the fixture directory.
pub fn load_circuit(name: &str) -> Result<VerifierCircuit, CircuitError> {
    let path = fixture_dir().join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).map_err(|e| CircuitError::Invalid {
        field: path.display().to_string(),
        message: e.to_string(),
    })?;
    VerifierCircuit::from_json(&text)
}
