//! Pedersen commitments, Schnorr signatures and desk-scale range proofs.
//!
//! The range proof is a bit-decomposition scheme: the committed value is
//! split into bits, each bit gets its own Pedersen commitment plus a
//! two-branch Schnorr OR proof that it commits to 0 or 1, and the weighted
//! sum of the bit commitments must reproduce the output commitment. It is
//! hand-checkable at small widths and sits behind [`RangeProver`] so a
//! production scheme can be slotted in later.
//!
//! All nonces and per-bit blindings are derived by hashing, so proofs and
//! signatures are reproducible byte for byte.

use crate::group::{Backend, GroupElement, GroupError, Scalar};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("value {value} is outside [0, 2^{bits})")]
    RangeViolation { value: u64, bits: u32 },
    #[error("bit width {bits} unusable for group order {order}")]
    BitWidth { bits: u32, order: u64 },
    #[error("cannot decode {what}: {detail}")]
    Decode { what: &'static str, detail: String },
}

/// A Pedersen commitment `r·G + v·H`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Commitment(GroupElement);

impl Commitment {
    pub fn from_point(point: GroupElement) -> Commitment {
        Commitment(point)
    }

    pub fn point(&self) -> GroupElement {
        self.0
    }

    pub fn backend(&self) -> Backend {
        self.0.backend()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes()
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    pub fn from_hex(backend: Backend, s: &str) -> Result<Commitment, CryptoError> {
        Ok(Commitment(backend.element_from_hex(s)?))
    }
}

/// `commit(r, v) = r·G + v·H`.
pub fn commit(blinding: Scalar, value: Scalar) -> Result<Commitment, CryptoError> {
    let backend = blinding.backend();
    let point = backend
        .generator()
        .scalar_mul(blinding)?
        .add(backend.value_generator().scalar_mul(value)?)?;
    Ok(Commitment(point))
}

/// Schnorr signature: nonce commitment R and response s.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct KernelSignature {
    pub nonce: GroupElement,
    pub s: Scalar,
}

impl KernelSignature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.nonce.to_bytes();
        out.extend_from_slice(&self.s.to_bytes());
        out
    }
}

fn challenge(backend: Backend, nonce: &GroupElement, pk: &GroupElement, msg: &[u8]) -> Scalar {
    backend.scalar_from_hash(&[
        b"mw.schnorr.challenge",
        &nonce.to_bytes(),
        &pk.to_bytes(),
        msg,
    ])
}

/// Sign `msg` under `sk`, with the nonce derived from `(sk, msg)`.
pub fn sign(sk: Scalar, msg: &[u8]) -> Result<KernelSignature, CryptoError> {
    let backend = sk.backend();
    let k = backend.scalar_from_hash(&[b"mw.schnorr.nonce", &sk.to_bytes(), msg]);
    let nonce = backend.generator().scalar_mul(k)?;
    let pk = backend.generator().scalar_mul(sk)?;
    let e = challenge(backend, &nonce, &pk, msg);
    let s = k.add(e.mul(sk)?)?;
    Ok(KernelSignature { nonce, s })
}

/// `true` iff `s·G = R + challenge(R, P, msg)·P`.
pub fn verify(pk: GroupElement, msg: &[u8], sig: &KernelSignature) -> bool {
    let backend = pk.backend();
    if sig.nonce.backend() != backend || sig.s.backend() != backend {
        return false;
    }
    let e = challenge(backend, &sig.nonce, &pk, msg);
    let lhs = match backend.generator().scalar_mul(sig.s) {
        Ok(p) => p,
        Err(_) => return false,
    };
    match pk.scalar_mul(e).and_then(|ep| sig.nonce.add(ep)) {
        Ok(rhs) => lhs == rhs,
        Err(_) => false,
    }
}

/// One two-branch OR transcript: the commitment opens to 0 (left branch) or
/// to 1 (right branch), without revealing which.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct BitProof {
    pub a0: GroupElement,
    pub a1: GroupElement,
    pub e0: Scalar,
    pub e1: Scalar,
    pub s0: Scalar,
    pub s1: Scalar,
}

/// Range proof for `v ∈ [0, 2^bits)`: one commitment and one OR proof per
/// bit, with the bit blindings arranged so that `Σ 2^j·C_j` equals the
/// commitment being proven.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RangeProof {
    pub bits: u32,
    pub bit_commitments: Vec<Commitment>,
    pub bit_proofs: Vec<BitProof>,
}

fn check_bit_width(backend: Backend, bits: u32) -> Result<(), CryptoError> {
    let order = backend.order();
    if bits == 0 || bits >= 63 || (1u64 << bits) > order {
        return Err(CryptoError::BitWidth { bits, order });
    }
    Ok(())
}

fn bit_challenge(backend: Backend, c: &Commitment, a0: &GroupElement, a1: &GroupElement) -> Scalar {
    backend.scalar_from_hash(&[
        b"mw.range.challenge",
        &c.to_bytes(),
        &a0.to_bytes(),
        &a1.to_bytes(),
    ])
}

/// Produce the OR transcript for a commitment `c = blinding·G + bit·H`.
///
/// The real branch is proven with the blinding as witness; the other branch
/// is simulated with the supplied challenge/response pair.
fn prove_bit(
    c: &Commitment,
    bit: u64,
    blinding: Scalar,
    nonce: Scalar,
    sim_e: Scalar,
    sim_s: Scalar,
) -> Result<BitProof, CryptoError> {
    let backend = blinding.backend();
    let g = backend.generator();
    let h = backend.value_generator();
    // Branch statements: X0 = C (bit 0), X1 = C − H (bit 1).
    let x0 = c.point();
    let x1 = c.point().sub(h)?;
    let a_real = g.scalar_mul(nonce)?;
    let x_sim = if bit == 0 { x1 } else { x0 };
    let a_sim = g.scalar_mul(sim_s)?.sub(x_sim.scalar_mul(sim_e)?)?;
    let (a0, a1) = if bit == 0 {
        (a_real, a_sim)
    } else {
        (a_sim, a_real)
    };
    let e = bit_challenge(backend, c, &a0, &a1);
    let e_real = e.sub(sim_e)?;
    let s_real = nonce.add(e_real.mul(blinding)?)?;
    Ok(if bit == 0 {
        BitProof {
            a0,
            a1,
            e0: e_real,
            e1: sim_e,
            s0: s_real,
            s1: sim_s,
        }
    } else {
        BitProof {
            a0,
            a1,
            e0: sim_e,
            e1: e_real,
            s0: sim_s,
            s1: s_real,
        }
    })
}

fn verify_bit(c: &Commitment, bp: &BitProof) -> bool {
    let backend = c.backend();
    for part in [
        bp.a0.backend(),
        bp.a1.backend(),
        bp.e0.backend(),
        bp.e1.backend(),
        bp.s0.backend(),
        bp.s1.backend(),
    ] {
        if part != backend {
            return false;
        }
    }
    let g = backend.generator();
    let h = backend.value_generator();
    let e = bit_challenge(backend, c, &bp.a0, &bp.a1);
    let split_ok = match bp.e0.add(bp.e1) {
        Ok(sum) => sum == e,
        Err(_) => return false,
    };
    if !split_ok {
        return false;
    }
    let branch = |s: Scalar, a: GroupElement, e: Scalar, x: GroupElement| -> bool {
        match (g.scalar_mul(s), x.scalar_mul(e).and_then(|ex| a.add(ex))) {
            (Ok(lhs), Ok(rhs)) => lhs == rhs,
            _ => false,
        }
    };
    let x1 = match c.point().sub(h) {
        Ok(p) => p,
        Err(_) => return false,
    };
    branch(bp.s0, bp.a0, bp.e0, c.point()) && branch(bp.s1, bp.a1, bp.e1, x1)
}

/// Prove `0 ≤ v < 2^bits` for the commitment `commit(blinding, v)`.
pub fn prove_range(blinding: Scalar, value: Scalar, bits: u32) -> Result<RangeProof, CryptoError> {
    let backend = blinding.backend();
    if value.backend() != backend {
        return Err(CryptoError::Group(GroupError::BackendMismatch {
            left: backend.name(),
            right: value.backend().name(),
        }));
    }
    check_bit_width(backend, bits)?;
    let v = value.value();
    if v >= 1u64 << bits {
        return Err(CryptoError::RangeViolation { value: v, bits });
    }

    // Bit blindings are hash-derived, with the last one solved for so that
    // Σ 2^j·r_j = blinding.
    let tag = |label: &[u8], j: u32| {
        backend.scalar_from_hash(&[
            label,
            &blinding.to_bytes(),
            &value.to_bytes(),
            &bits.to_be_bytes(),
            &j.to_be_bytes(),
        ])
    };
    let mut bit_blindings = Vec::with_capacity(bits as usize);
    let mut partial = backend.scalar(0);
    for j in 0..bits - 1 {
        let r_j = tag(b"mw.range.blind", j);
        partial = partial.add(r_j.mul(backend.scalar(1u64 << j))?)?;
        bit_blindings.push(r_j);
    }
    let top_weight = backend.scalar(1u64 << (bits - 1));
    let r_top = blinding.sub(partial)?.mul(top_weight.inverse()?)?;
    bit_blindings.push(r_top);

    let mut bit_commitments = Vec::with_capacity(bits as usize);
    let mut bit_proofs = Vec::with_capacity(bits as usize);
    for j in 0..bits {
        let bit = (v >> j) & 1;
        let r_j = bit_blindings[j as usize];
        let c_j = commit(r_j, backend.scalar(bit))?;
        let proof = prove_bit(
            &c_j,
            bit,
            r_j,
            tag(b"mw.range.nonce", j),
            tag(b"mw.range.sim-e", j),
            tag(b"mw.range.sim-s", j),
        )?;
        bit_commitments.push(c_j);
        bit_proofs.push(proof);
    }
    Ok(RangeProof {
        bits,
        bit_commitments,
        bit_proofs,
    })
}

impl RangeProof {
    /// The commitment this proof is bound to: `Σ 2^j · C_j`.
    pub fn target(&self) -> Result<Commitment, CryptoError> {
        let backend = match self.bit_commitments.first() {
            Some(c) => c.backend(),
            None => {
                return Err(CryptoError::Decode {
                    what: "range proof",
                    detail: "no bit commitments".into(),
                })
            }
        };
        let mut acc = backend.identity();
        for (j, c) in self.bit_commitments.iter().enumerate() {
            acc = acc.add(c.point().scalar_mul(backend.scalar(1u64 << j))?)?;
        }
        Ok(Commitment(acc))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.bits as u8];
        for (c, bp) in self.bit_commitments.iter().zip(&self.bit_proofs) {
            out.extend_from_slice(&c.to_bytes());
            out.extend_from_slice(&bp.a0.to_bytes());
            out.extend_from_slice(&bp.a1.to_bytes());
            out.extend_from_slice(&bp.e0.to_bytes());
            out.extend_from_slice(&bp.e1.to_bytes());
            out.extend_from_slice(&bp.s0.to_bytes());
            out.extend_from_slice(&bp.s1.to_bytes());
        }
        out
    }

    pub fn from_bytes(backend: Backend, bytes: &[u8]) -> Result<RangeProof, CryptoError> {
        let decode_err = |detail: String| CryptoError::Decode {
            what: "range proof",
            detail,
        };
        if bytes.is_empty() {
            return Err(decode_err("empty".into()));
        }
        let bits = bytes[0] as u32;
        let elem = backend.element_byte_len();
        let per_bit = 3 * elem + 4 * 8;
        let expected = 1 + bits as usize * per_bit;
        if bytes.len() != expected {
            return Err(decode_err(format!(
                "expected {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let mut bit_commitments = Vec::with_capacity(bits as usize);
        let mut bit_proofs = Vec::with_capacity(bits as usize);
        let mut at = 1;
        let take_elem = |bytes: &[u8], at: &mut usize| -> Result<GroupElement, CryptoError> {
            let e = backend.element_from_bytes(&bytes[*at..*at + elem])?;
            *at += elem;
            Ok(e)
        };
        for _ in 0..bits {
            let c = Commitment(take_elem(bytes, &mut at)?);
            let a0 = take_elem(bytes, &mut at)?;
            let a1 = take_elem(bytes, &mut at)?;
            let take_scalar = |at: &mut usize| -> Result<Scalar, CryptoError> {
                let s = backend.scalar_from_bytes(&bytes[*at..*at + 8])?;
                *at += 8;
                Ok(s)
            };
            let e0 = take_scalar(&mut at)?;
            let e1 = take_scalar(&mut at)?;
            let s0 = take_scalar(&mut at)?;
            let s1 = take_scalar(&mut at)?;
            bit_commitments.push(c);
            bit_proofs.push(BitProof {
                a0,
                a1,
                e0,
                e1,
                s0,
                s1,
            });
        }
        Ok(RangeProof {
            bits,
            bit_commitments,
            bit_proofs,
        })
    }
}

/// `true` iff all bit proofs verify and `Σ 2^j·C_j = c`.
pub fn verify_range(c: &Commitment, proof: &RangeProof) -> bool {
    let backend = c.backend();
    if check_bit_width(backend, proof.bits).is_err() {
        return false;
    }
    if proof.bit_commitments.len() != proof.bits as usize
        || proof.bit_proofs.len() != proof.bits as usize
    {
        return false;
    }
    if proof
        .bit_commitments
        .iter()
        .any(|bc| bc.backend() != backend)
    {
        return false;
    }
    match proof.target() {
        Ok(target) if target == *c => {}
        _ => return false,
    }
    proof
        .bit_commitments
        .iter()
        .zip(&proof.bit_proofs)
        .all(|(bc, bp)| verify_bit(bc, bp))
}

/// Interface the transaction builder programs against, so the
/// bit-decomposition scheme can be replaced without touching callers.
pub trait RangeProver {
    fn prove(&self, blinding: Scalar, value: Scalar, bits: u32) -> Result<RangeProof, CryptoError>;
    fn verify(&self, c: &Commitment, proof: &RangeProof) -> bool;
}

/// The shipped bit-decomposition prover.
#[derive(Clone, Copy, Debug, Default)]
pub struct BitDecompositionProver;

impl RangeProver for BitDecompositionProver {
    fn prove(&self, blinding: Scalar, value: Scalar, bits: u32) -> Result<RangeProof, CryptoError> {
        prove_range(blinding, value, bits)
    }

    fn verify(&self, c: &Commitment, proof: &RangeProof) -> bool {
        verify_range(c, proof)
    }
}

// ── JSON wire forms (hex fields, documented in docs/crypto.schema.json) ──

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct SignatureWire {
    pub r: String,
    pub s: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct BitProofWire {
    pub a0: String,
    pub a1: String,
    pub e0: String,
    pub e1: String,
    pub s0: String,
    pub s1: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct RangeProofWire {
    pub bits: u32,
    pub bit_commitments: Vec<String>,
    pub bit_proofs: Vec<BitProofWire>,
}

impl KernelSignature {
    pub fn to_wire(&self) -> SignatureWire {
        SignatureWire {
            r: self.nonce.to_hex(),
            s: self.s.to_hex(),
        }
    }

    pub fn from_wire(
        backend: Backend,
        wire: &SignatureWire,
    ) -> Result<KernelSignature, CryptoError> {
        Ok(KernelSignature {
            nonce: backend.element_from_hex(&wire.r)?,
            s: backend.scalar_from_hex(&wire.s)?,
        })
    }
}

impl RangeProof {
    pub fn to_wire(&self) -> RangeProofWire {
        RangeProofWire {
            bits: self.bits,
            bit_commitments: self.bit_commitments.iter().map(|c| c.to_hex()).collect(),
            bit_proofs: self
                .bit_proofs
                .iter()
                .map(|bp| BitProofWire {
                    a0: bp.a0.to_hex(),
                    a1: bp.a1.to_hex(),
                    e0: bp.e0.to_hex(),
                    e1: bp.e1.to_hex(),
                    s0: bp.s0.to_hex(),
                    s1: bp.s1.to_hex(),
                })
                .collect(),
        }
    }

    pub fn from_wire(backend: Backend, wire: &RangeProofWire) -> Result<RangeProof, CryptoError> {
        let bit_commitments = wire
            .bit_commitments
            .iter()
            .map(|s| Commitment::from_hex(backend, s))
            .collect::<Result<Vec<_>, _>>()?;
        let bit_proofs = wire
            .bit_proofs
            .iter()
            .map(|bp| {
                Ok(BitProof {
                    a0: backend.element_from_hex(&bp.a0)?,
                    a1: backend.element_from_hex(&bp.a1)?,
                    e0: backend.scalar_from_hex(&bp.e0)?,
                    e1: backend.scalar_from_hex(&bp.e1)?,
                    s0: backend.scalar_from_hex(&bp.s0)?,
                    s1: backend.scalar_from_hex(&bp.s1)?,
                })
            })
            .collect::<Result<Vec<_>, CryptoError>>()?;
        Ok(RangeProof {
            bits: wire.bits,
            bit_commitments,
            bit_proofs,
        })
    }
}
