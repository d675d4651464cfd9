//! Named boolean functions for `ORACLE` instructions.

use crate::error::{GrabitError, Result};
use crate::gates::Oracle;
use std::collections::HashMap;

/// Builtin oracles, instantiated for `n_inputs` inputs (first input is the
/// most significant bit of `x`):
///
/// * `const0`, `const1`
/// * `parity`: XOR of all inputs
/// * `identity`: `f(x) = x`, one input only
/// * `balanced`: the first input bit
/// * `bv<bits>`: `a . x mod 2` with `a` given MSB first, one bit per input
/// * `tt<bits>`: truth table, character `x` is `f(x)`
pub fn builtin_oracle(name: &str, n_inputs: usize) -> Result<Oracle> {
    let bad = |why: String| GrabitError::InvalidGate(format!("oracle '{name}': {why}"));
    let bits_of = |s: &str| -> Result<Vec<bool>> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(bad(format!("'{other}' is not a bit"))),
            })
            .collect()
    };
    if n_inputs == 0 {
        return Err(bad("needs at least one input".into()));
    }
    match name {
        "const0" => Oracle::new(name, n_inputs, |_| false),
        "const1" => Oracle::new(name, n_inputs, |_| true),
        "parity" => Oracle::new(name, n_inputs, |x| x.count_ones() % 2 == 1),
        "balanced" => Oracle::new(name, n_inputs, move |x| (x >> (n_inputs - 1)) & 1 == 1),
        "identity" if n_inputs == 1 => Oracle::new(name, 1, |x| x == 1),
        "identity" => Err(bad(format!("takes one input, got {n_inputs}"))),
        _ if name.starts_with("bv") => {
            let bits = bits_of(&name[2..])?;
            if bits.len() != n_inputs {
                return Err(bad(format!("has {} bits for {n_inputs} inputs", bits.len())));
            }
            let a = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
            Oracle::new(name, n_inputs, move |x| (a & x).count_ones() % 2 == 1)
        }
        _ if name.starts_with("tt") => {
            let table = bits_of(&name[2..])?;
            if table.len() != 1 << n_inputs {
                return Err(bad(format!("truth table has {} rows, expected {}", table.len(), 1u64 << n_inputs)));
            }
            Oracle::new(name, n_inputs, move |x| table[x as usize])
        }
        _ => Err(bad("unknown oracle".into())),
    }
}

/// Programmatically registered oracles, falling back to the builtins.
#[derive(Debug, Clone, Default)]
pub struct OracleRegistry {
    custom: HashMap<String, Oracle>,
}

impl OracleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, oracle: Oracle) {
        self.custom.insert(oracle.name().to_string(), oracle);
    }

    pub fn resolve(&self, name: &str, n_inputs: usize) -> Result<Oracle> {
        match self.custom.get(name) {
            Some(o) if o.n_inputs() == n_inputs => Ok(o.clone()),
            Some(o) => Err(GrabitError::InvalidGate(format!(
                "oracle '{name}' takes {} inputs, got {n_inputs}",
                o.n_inputs()
            ))),
            None => builtin_oracle(name, n_inputs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        let bv = builtin_oracle("bv01", 2).unwrap();
        assert_eq!((0..4).map(|x| bv.eval(x)).collect::<Vec<_>>(), [false, true, false, true]);
        let tt = builtin_oracle("tt0110", 2).unwrap();
        assert_eq!((0..4).map(|x| tt.eval(x)).collect::<Vec<_>>(), [false, true, true, false]);
        assert!(builtin_oracle("parity", 3).unwrap().eval(0b111));
        assert!(builtin_oracle("balanced", 3).unwrap().eval(0b100));
        assert!(builtin_oracle("bv011", 2).is_err());
        assert!(builtin_oracle("identity", 2).is_err());
        assert!(builtin_oracle("nope", 1).is_err());
    }

    #[test]
    fn registry_prefers_custom() {
        let mut r = OracleRegistry::new();
        r.register(Oracle::new("const0", 1, |_| true).unwrap());
        assert!(r.resolve("const0", 1).unwrap().eval(0));
        assert!(r.resolve("const0", 2).is_err());
        assert!(!r.resolve("const1", 2).unwrap().eval(0) == false);
    }
}
