//! u32-LE length-prefixed packet container.

use anyhow::{bail, Result};

pub fn split(data: &[u8]) -> Result<Vec<&[u8]>> {
    let mut out = Vec::new();
    let mut at = 0;
    while at < data.len() {
        let Some(hdr) = data.get(at..at + 4) else {
            bail!("truncated length header at byte {at}");
        };
        let n = u32::from_le_bytes(hdr.try_into().unwrap()) as usize;
        at += 4;
        let Some(body) = data.get(at..at + n) else {
            bail!("packet {} claims {n} bytes but only {} remain", out.len(), data.len() - at);
        };
        out.push(body);
        at += n;
    }
    Ok(out)
}

pub fn join<'a>(packets: impl IntoIterator<Item = &'a [u8]>) -> Vec<u8> {
    let mut out = Vec::new();
    for p in packets {
        out.extend_from_slice(&(p.len() as u32).to_le_bytes());
        out.extend_from_slice(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let pk: [&[u8]; 3] = [b"abc", b"", b"xyz0"];
        let data = join(pk);
        assert_eq!(data.len(), 4 * 3 + 7);
        assert_eq!(split(&data).unwrap(), pk.to_vec());
    }

    #[test]
    fn truncated() {
        assert!(split(&[3, 0, 0]).is_err());
        assert!(split(&[3, 0, 0, 0, b'a']).is_err());
    }
}
