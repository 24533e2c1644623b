use super::lexer::Token;
use super::tree::Fingerprint;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SEPARATOR: u8 = 0x1f;

/// FNV-1a 64 over the token texts joined by a single 0x1F byte. Bit-exact
/// across platforms so every workspace computes the same value.
pub fn body_fingerprint(tokens: &[Token]) -> Fingerprint {
    let mut hash = FNV_OFFSET_BASIS;
    let mut feed = |byte: u8| {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    };
    for (i, token) in tokens.iter().enumerate() {
        if i > 0 {
            feed(SEPARATOR);
        }
        token.text.bytes().for_each(&mut feed);
    }
    Fingerprint(hash)
}
