use super::stats::StatSet10;
use crate::error::{Error, Result};

pub const CHARSET_LEN: usize = 96;
pub const CHAR_DIST_DIM: usize = CHARSET_LEN * StatSet10::LEN;

/// Tab followed by the 95 printable ASCII characters 0x20..=0x7E.
pub fn charset() -> impl Iterator<Item = char> {
    std::iter::once('\t').chain((0x20u8..=0x7e).map(char::from))
}

fn slot(c: char) -> Option<usize> {
    match c {
        '\t' => Some(0),
        ' '..='~' => Some(c as usize - 0x20 + 1),
        _ => None,
    }
}

/// Per-character count statistics over the values, 96 x 10 entries.
pub fn character_distributions(values: &[String]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("character distributions"));
    }
    // counts[c][v]
    let mut counts = vec![vec![0.0f64; values.len()]; CHARSET_LEN];
    for (vi, v) in values.iter().enumerate() {
        for c in v.chars() {
            if let Some(s) = slot(c) {
                counts[s][vi] += 1.0;
            }
        }
    }
    let mut out = Vec::with_capacity(CHAR_DIST_DIM);
    for per_value in &counts {
        out.extend(StatSet10::compute(per_value).to_array());
    }
    Ok(out)
}
