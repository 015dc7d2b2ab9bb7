//! Compact textual code-sequence specifications for command lines:
//! `glfsr:DEGREE:MASK:SEED`, `gold:POLY_A:POLY_B:SHIFT`, `golaya128`,
//! `golayb128`, `ls:LENGTH`. Numeric fields accept `0x` hex.

use twinchan::sequences::{gen_glfsr, gen_gold, gen_golay_a128, gen_golay_b128, gen_ls, CodeSequence};
use twinchan::types::{Error, Result};

fn parse_num(field: &str, what: &str) -> Result<u64> {
    let field = field.trim();
    let parsed = if let Some(hex) = field.strip_prefix("0x").or_else(|| field.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        field.parse()
    };
    parsed.map_err(|_| Error::InvalidArgument(format!("bad {what}: {field:?}")))
}

/// Parses a code specification string into a generated sequence.
pub fn parse_code_spec(spec: &str) -> Result<CodeSequence> {
    let lower = spec.to_ascii_lowercase();
    let parts: Vec<&str> = lower.split(':').collect();
    match parts.as_slice() {
        ["glfsr", degree, mask, seed] => gen_glfsr(
            parse_num(degree, "degree")? as u32,
            parse_num(mask, "mask")? as u32,
            parse_num(seed, "seed")? as u32,
        ),
        ["gold", poly_a, poly_b, shift] => gen_gold(
            parse_num(poly_a, "poly_a")?,
            parse_num(poly_b, "poly_b")?,
            parse_num(shift, "shift")? as usize,
        ),
        ["golaya128"] => Ok(gen_golay_a128()),
        ["golayb128"] => Ok(gen_golay_b128()),
        ["ls", length] => gen_ls(parse_num(length, "length")? as usize),
        _ => Err(Error::InvalidArgument(format!(
            "unrecognized code spec {spec:?}; expected glfsr:D:M:S, gold:A:B:SHIFT, \
             golaya128, golayb128, or ls:LENGTH"
        ))),
    }
}
