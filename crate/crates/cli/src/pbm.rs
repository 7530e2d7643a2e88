//! Binary portable bitmaps (P4).

/// Encodes a `rows × cols` bitmap; a set pixel is black.
pub fn encode(rows: usize, cols: usize, set: impl Fn(usize, usize) -> bool) -> Vec<u8> {
    let stride = cols.div_ceil(8);
    let mut out = format!("P4\n{cols} {rows}\n").into_bytes();
    out.reserve(stride * rows);
    for i in 0..rows {
        let mut line = vec![0u8; stride];
        for j in (0..cols).filter(|&j| set(i, j)) {
            line[j / 8] |= 0x80 >> (j % 8);
        }
        out.extend_from_slice(&line);
    }
    out
}

/// Decodes a P4 bitmap into row-major booleans.
pub fn decode(bytes: &[u8]) -> Option<(usize, usize, Vec<bool>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    pos += 1;
    if fields[0] != "P4" {
        return None;
    }
    let cols: usize = fields[1].parse().ok()?;
    let rows: usize = fields[2].parse().ok()?;
    let stride = cols.div_ceil(8);
    let data = bytes.get(pos..pos + stride * rows)?;
    let bits = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| data[i * stride + j / 8] & (0x80 >> (j % 8)) != 0))
        .collect();
    Some((rows, cols, bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_padding() {
        let bytes = encode(2, 3, |i, j| i == j);
        assert_eq!(&bytes[..7], b"P4\n3 2\n");
        assert_eq!(&bytes[7..], &[0b1000_0000, 0b0100_0000]);
    }

    #[test]
    fn round_trip() {
        let f = |i: usize, j: usize| (i * 7 + j * 3).is_multiple_of(5);
        let (r, c, bits) = decode(&encode(9, 13, f)).unwrap();
        assert_eq!((r, c), (9, 13));
        for i in 0..9 {
            for j in 0..13 {
                assert_eq!(bits[i * 13 + j], f(i, j));
            }
        }
    }
}
