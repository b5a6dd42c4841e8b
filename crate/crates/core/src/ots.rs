//! Lamport and Winternitz one-time signatures over an abstract `n`-bit hash.
//!
//! The Winternitz variant uses the plain hash-chain function chain: the chain
//! key is empty and evaluating positions `i..j` applies the hash `j - i`
//! times. Messages, digits and chain positions are big-endian throughout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{mask, BitString};
use crate::error::{Error, Result};
use crate::rom::HashOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Lamport,
    Winternitz,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Lamport => "lamport",
            Scheme::Winternitz => "winternitz",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lamport" => Ok(Scheme::Lamport),
            "winternitz" | "wots" => Ok(Scheme::Winternitz),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LamportParams {
    pub n: u32,
    pub l: u32,
}

impl LamportParams {
    pub fn new(n: u32, l: u32) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidParameter(format!("n = {n} must be in 1..=64")));
        }
        if l == 0 || l > 64 {
            return Err(Error::InvalidParameter(format!("l = {l} must be in 1..=64")));
        }
        Ok(Self { n, l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WotsParams {
    pub n: u32,
    /// Binary message length.
    pub a: u32,
    pub w: u32,
    pub l1: u32,
    pub l2: u32,
    pub l: u32,
}

/// Derives `l1 = ceil(a / log2 w)`, `l2 = floor(log_w(l1 (w - 1))) + 1` and
/// `l = l1 + l2`. Only powers of two are accepted for `w`.
pub fn derive_wots_params(a: u32, w: u32, n: u32) -> Result<WotsParams> {
    if w < 2 || !w.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "Winternitz parameter w = {w} must be a power of two >= 2"
        )));
    }
    derive_wots_params_any_radix(a, w, n)
}

/// Same derivation for an arbitrary radix `w >= 2`, with digits taken from the
/// integer value of the message. Used by the quantum worlds, where chain
/// length 3 is part of the parameter sweep.
pub fn derive_wots_params_any_radix(a: u32, w: u32, n: u32) -> Result<WotsParams> {
    if !(2..=1 << 16).contains(&w) {
        return Err(Error::InvalidParameter(format!("w = {w} must be in 2..=65536")));
    }
    if a == 0 || a > 64 {
        return Err(Error::InvalidParameter(format!("a = {a} must be in 1..=64")));
    }
    if n == 0 || n > 64 {
        return Err(Error::InvalidParameter(format!("n = {n} must be in 1..=64")));
    }
    let base = w as u128;
    // smallest l1 with w^l1 >= 2^a, i.e. l1 * log2(w) >= a
    let target = 1u128 << a;
    let mut l1 = 0u32;
    let mut power = 1u128;
    while power < target {
        power *= base;
        l1 += 1;
    }
    let l2 = digit_count(l1 as u128 * (base - 1), base);
    Ok(WotsParams {
        n,
        a,
        w,
        l1,
        l2,
        l: l1 + l2,
    })
}

// floor(log_base(v)) + 1 for v >= 1
fn digit_count(mut v: u128, base: u128) -> u32 {
    let mut count = 0;
    while v > 0 {
        v /= base;
        count += 1;
    }
    count.max(1)
}

/// Base-`w` digits, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitVector {
    pub digits: Vec<u32>,
    pub base: u32,
}

impl DigitVector {
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn value(&self) -> u128 {
        self.digits
            .iter()
            .fold(0u128, |acc, &d| acc * self.base as u128 + d as u128)
    }
}

fn to_digits(mut value: u128, base: u32, len: u32) -> DigitVector {
    let mut digits = vec![0u32; len as usize];
    for slot in digits.iter_mut().rev() {
        *slot = (value % base as u128) as u32;
        value /= base as u128;
    }
    debug_assert_eq!(value, 0, "value does not fit in {len} digits");
    DigitVector { digits, base }
}

pub fn base_w_digits(m: &BitString, params: &WotsParams) -> Result<DigitVector> {
    if m.width() != params.a {
        return Err(Error::LengthMismatch {
            what: "message bits",
            expected: params.a as usize,
            got: m.width() as usize,
        });
    }
    Ok(to_digits(m.value() as u128, params.w, params.l1))
}

/// Appends the `l2` checksum digits of `C = sum(w - 1 - b_i)`.
pub fn append_checksum(digits: &DigitVector, params: &WotsParams) -> Result<DigitVector> {
    if digits.len() != params.l1 as usize {
        return Err(Error::LengthMismatch {
            what: "message digits",
            expected: params.l1 as usize,
            got: digits.len(),
        });
    }
    let mut checksum = 0u128;
    for &d in &digits.digits {
        if d >= params.w {
            return Err(Error::DigitOutOfRange { digit: d, base: params.w });
        }
        checksum += (params.w - 1 - d) as u128;
    }
    let tail = to_digits(checksum, params.w, params.l2);
    let mut all = digits.digits.clone();
    all.extend(tail.digits);
    Ok(DigitVector {
        digits: all,
        base: params.w,
    })
}

/// The full encoding `b(m) = m || C(m)`.
pub fn encode_message(m: &BitString, params: &WotsParams) -> Result<DigitVector> {
    append_checksum(&base_w_digits(m, params)?, params)
}

/// Applies the hash `to - from` times. `chain_len` is `w`; positions run over
/// `0..=w-1`.
pub fn chain_eval(
    x: u64,
    from: u32,
    to: u32,
    chain_len: u32,
    oracle: &mut dyn HashOracle,
) -> Result<u64> {
    if from > to || to >= chain_len {
        return Err(Error::ChainInterval {
            from,
            to,
            len: chain_len,
        });
    }
    let mut v = x;
    for _ in from..to {
        v = oracle.eval(v);
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(String),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Accept => f.write_str("acc"),
            Verdict::Reject(_) => f.write_str("rej"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub sigma: Vec<BitString>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LamportKeyPair {
    pub params: LamportParams,
    /// `sk[i][j]` for message position `i` and bit value `j`.
    pub sk: Vec<[BitString; 2]>,
    pub pk: Vec<[BitString; 2]>,
}

fn random_string(n: u32, rng: &mut impl Rng) -> BitString {
    BitString::new(rng.random::<u64>() & mask(n), n).expect("masked")
}

fn check_oracle(n: u32, oracle: &dyn HashOracle) -> Result<()> {
    if oracle.n() != n {
        return Err(Error::InvalidParameter(format!(
            "oracle maps {} bits but the scheme uses n = {n}",
            oracle.n()
        )));
    }
    Ok(())
}

pub fn lamport_keygen(
    params: &LamportParams,
    oracle: &mut dyn HashOracle,
    rng: &mut impl Rng,
) -> Result<LamportKeyPair> {
    check_oracle(params.n, oracle)?;
    let n = params.n;
    let sk: Vec<[BitString; 2]> = (0..params.l)
        .map(|_| [random_string(n, rng), random_string(n, rng)])
        .collect();
    let pk = sk
        .iter()
        .map(|pair| pair.map(|s| BitString::new(oracle.eval(s.value()), n).expect("oracle width")))
        .collect();
    Ok(LamportKeyPair {
        params: *params,
        sk,
        pk,
    })
}

pub fn lamport_sign(key: &LamportKeyPair, m: &BitString) -> Result<Signature> {
    let l = key.params.l;
    if m.width() != l {
        return Err(Error::LengthMismatch {
            what: "message bits",
            expected: l as usize,
            got: m.width() as usize,
        });
    }
    let sigma = (0..l)
        .map(|i| key.sk[i as usize][m.bit(i) as usize])
        .collect();
    Ok(Signature { sigma })
}

pub fn lamport_verify(
    pk: &[[BitString; 2]],
    params: &LamportParams,
    m: &BitString,
    sig: &Signature,
    oracle: &mut dyn HashOracle,
) -> Verdict {
    if m.width() != params.l {
        return Verdict::Reject(format!("message has {} bits, expected {}", m.width(), params.l));
    }
    if sig.sigma.len() != params.l as usize || pk.len() != params.l as usize {
        return Verdict::Reject(format!(
            "signature has {} strings, expected {}",
            sig.sigma.len(),
            params.l
        ));
    }
    for (i, s) in sig.sigma.iter().enumerate() {
        if s.width() != params.n {
            return Verdict::Reject(format!("sigma[{i}] has {} bits", s.width()));
        }
        let expected = pk[i][m.bit(i as u32) as usize].value();
        if oracle.eval(s.value()) != expected {
            return Verdict::Reject(format!("hash of sigma[{i}] does not match the public key"));
        }
    }
    Verdict::Accept
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WotsKeyPair {
    pub params: WotsParams,
    pub sk: Vec<BitString>,
    /// Chain end points `E^{w-1}(sk[i])`; the chain key is empty and omitted.
    pub pk: Vec<BitString>,
}

pub fn wots_keygen(
    params: &WotsParams,
    oracle: &mut dyn HashOracle,
    rng: &mut impl Rng,
) -> Result<WotsKeyPair> {
    check_oracle(params.n, oracle)?;
    let n = params.n;
    let sk: Vec<BitString> = (0..params.l).map(|_| random_string(n, rng)).collect();
    let mut pk = Vec::with_capacity(sk.len());
    for s in &sk {
        let end = chain_eval(s.value(), 0, params.w - 1, params.w, oracle)?;
        pk.push(BitString::new(end, n)?);
    }
    Ok(WotsKeyPair {
        params: *params,
        sk,
        pk,
    })
}

pub fn wots_sign(
    key: &WotsKeyPair,
    m: &BitString,
    oracle: &mut dyn HashOracle,
) -> Result<Signature> {
    let params = &key.params;
    let digits = encode_message(m, params)?;
    let mut sigma = Vec::with_capacity(digits.len());
    for (s, &b) in key.sk.iter().zip(&digits.digits) {
        let v = chain_eval(s.value(), 0, b, params.w, oracle)?;
        sigma.push(BitString::new(v, params.n)?);
    }
    Ok(Signature { sigma })
}

pub fn wots_verify(
    pk: &[BitString],
    params: &WotsParams,
    m: &BitString,
    sig: &Signature,
    oracle: &mut dyn HashOracle,
) -> Verdict {
    let digits = match encode_message(m, params) {
        Ok(d) => d,
        Err(e) => return Verdict::Reject(e.to_string()),
    };
    if sig.sigma.len() != params.l as usize || pk.len() != params.l as usize {
        return Verdict::Reject(format!(
            "signature has {} strings, expected {}",
            sig.sigma.len(),
            params.l
        ));
    }
    for (i, (s, &b)) in sig.sigma.iter().zip(&digits.digits).enumerate() {
        if s.width() != params.n {
            return Verdict::Reject(format!("sigma[{i}] has {} bits", s.width()));
        }
        match chain_eval(s.value(), b, params.w - 1, params.w, oracle) {
            Ok(end) if end == pk[i].value() => {}
            Ok(_) => return Verdict::Reject(format!("chain {i} does not reach the public key")),
            Err(e) => return Verdict::Reject(e.to_string()),
        }
    }
    Verdict::Accept
}

/// Key material as stored on disk: `{"scheme","n","a","w","sk","pk"}`, strings
/// in lowercase fixed-width hex, index order `i` ascending then `j` ascending.
/// Lamport keys record `a = l` and `w = 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub scheme: Scheme,
    pub n: u32,
    pub a: u32,
    pub w: u32,
    pub sk: Vec<String>,
    pub pk: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureFile {
    pub scheme: Scheme,
    pub n: u32,
    pub a: u32,
    pub w: u32,
    /// The signed message as a binary string of `a` (or `l`) bits.
    pub message: String,
    pub sigma: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KeyPair {
    Lamport(LamportKeyPair),
    Winternitz(WotsKeyPair),
}

impl KeyPair {
    pub fn to_file(&self) -> KeyFile {
        match self {
            KeyPair::Lamport(k) => KeyFile {
                scheme: Scheme::Lamport,
                n: k.params.n,
                a: k.params.l,
                w: 2,
                sk: k.sk.iter().flat_map(|p| p.iter().map(BitString::to_hex)).collect(),
                pk: k.pk.iter().flat_map(|p| p.iter().map(BitString::to_hex)).collect(),
            },
            KeyPair::Winternitz(k) => KeyFile {
                scheme: Scheme::Winternitz,
                n: k.params.n,
                a: k.params.a,
                w: k.params.w,
                sk: k.sk.iter().map(BitString::to_hex).collect(),
                pk: k.pk.iter().map(BitString::to_hex).collect(),
            },
        }
    }

    pub fn from_file(file: &KeyFile) -> Result<Self> {
        let parse = |v: &[String]| -> Result<Vec<BitString>> {
            v.iter().map(|h| BitString::from_hex(h, file.n)).collect()
        };
        match file.scheme {
            Scheme::Lamport => {
                let params = LamportParams::new(file.n, file.a)?;
                let pairs = |flat: Vec<BitString>| -> Result<Vec<[BitString; 2]>> {
                    if flat.len() != 2 * params.l as usize {
                        return Err(Error::LengthMismatch {
                            what: "lamport key strings",
                            expected: 2 * params.l as usize,
                            got: flat.len(),
                        });
                    }
                    Ok(flat.chunks(2).map(|c| [c[0], c[1]]).collect())
                };
                Ok(KeyPair::Lamport(LamportKeyPair {
                    params,
                    sk: pairs(parse(&file.sk)?)?,
                    pk: pairs(parse(&file.pk)?)?,
                }))
            }
            Scheme::Winternitz => {
                let params = derive_wots_params(file.a, file.w, file.n)?;
                let sk = parse(&file.sk)?;
                let pk = parse(&file.pk)?;
                for (what, v) in [("winternitz sk", &sk), ("winternitz pk", &pk)] {
                    if v.len() != params.l as usize {
                        return Err(Error::LengthMismatch {
                            what,
                            expected: params.l as usize,
                            got: v.len(),
                        });
                    }
                }
                Ok(KeyPair::Winternitz(WotsKeyPair { params, sk, pk }))
            }
        }
    }

    pub fn message_bits(&self) -> u32 {
        match self {
            KeyPair::Lamport(k) => k.params.l,
            KeyPair::Winternitz(k) => k.params.a,
        }
    }

    pub fn sign(&self, m: &BitString, oracle: &mut dyn HashOracle) -> Result<Signature> {
        match self {
            KeyPair::Lamport(k) => lamport_sign(k, m),
            KeyPair::Winternitz(k) => wots_sign(k, m, oracle),
        }
    }

    pub fn verify(&self, m: &BitString, sig: &Signature, oracle: &mut dyn HashOracle) -> Verdict {
        match self {
            KeyPair::Lamport(k) => lamport_verify(&k.pk, &k.params, m, sig, oracle),
            KeyPair::Winternitz(k) => wots_verify(&k.pk, &k.params, m, sig, oracle),
        }
    }
}
